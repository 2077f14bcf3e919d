#include "gridaimd/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gridaimd/rng.hpp"

namespace gridaimd {

namespace {
constexpr double kMaxTanPhi = 0.75;  // tan(acos(0.8))
}

std::pair<double, double> profile_at(const LoadProfile& profile, int t_s) {
  if (t_s < 0 || t_s >= kSecondsPerDay) {
    throw std::out_of_range("second-of-day " + std::to_string(t_s) + " outside [0, 86400)");
  }
  return {profile.p_kw[static_cast<std::size_t>(t_s)], profile.q_kvar[static_cast<std::size_t>(t_s)]};
}

ProfileLibrary ProfileLibrary::synthesize(std::uint64_t seed, int households, int days,
                                          const SynthParams& params) {
  if (households <= 0 || days <= 0) throw std::invalid_argument("household/day counts must be positive");
  ProfileLibrary lib;
  lib.synthetic_ = true;
  lib.seed_ = seed;
  lib.households_ = households;
  lib.days_ = days;
  lib.params_ = params;
  lib.cache_.resize(static_cast<std::size_t>(days));
  return lib;
}

const LoadProfile& ProfileLibrary::profile(int household, int day) const {
  if (household < 0 || household >= households_ || day < 0 || day >= days_) {
    throw std::out_of_range("profile (" + std::to_string(household) + ", " + std::to_string(day) +
                            ") outside library bounds");
  }
  auto& day_slot = cache_[static_cast<std::size_t>(day)];
  if (day_slot.empty()) day_slot.resize(static_cast<std::size_t>(households_));
  auto& slot = day_slot[static_cast<std::size_t>(household)];
  if (!slot) {
    if (!synthetic_) throw std::logic_error("csv-backed profile missing from cache");
    slot = std::make_unique<LoadProfile>(generate(household, day));
  }
  return *slot;
}

void ProfileLibrary::release_day(int day) const {
  if (day < 0 || day >= days_) return;
  if (synthetic_) cache_[static_cast<std::size_t>(day)].clear();
}

LoadProfile ProfileLibrary::generate(int household, int day) const {
  Rng root(seed_);
  Rng hh = root.derive("household", static_cast<std::uint64_t>(household));
  const SynthParams& sp = params_;

  // Per-household habits (stable across days). Draw order is fixed.
  double base_kw = hh.uniform(sp.base_kw_min, sp.base_kw_max);
  double pf = hh.uniform(sp.pf_min, sp.pf_max);
  double evening_amp = hh.uniform(sp.evening_amp_kw_min, sp.evening_amp_kw_max);
  double morning_amp = evening_amp * hh.uniform(sp.morning_frac_min, sp.morning_frac_max);
  double evening_peak_s = hh.normal(sp.evening_peak_h_mean, sp.evening_peak_h_sd) * 3600.0;
  double morning_peak_s = hh.normal(sp.morning_peak_h_mean, sp.morning_peak_h_sd) * 3600.0;
  double evening_width_s = hh.uniform(sp.evening_width_h_min, sp.evening_width_h_max) * 3600.0;
  double morning_width_s = hh.uniform(sp.morning_width_h_min, sp.morning_width_h_max) * 3600.0;
  double tan_phi = std::min(std::tan(std::acos(pf)), kMaxTanPhi);

  Rng dr = hh.derive("day", static_cast<std::uint64_t>(day));
  double day_scale = dr.uniform(sp.day_scale_min, sp.day_scale_max);

  struct Pulse {
    int start, end;
    float kw;
  };
  std::vector<Pulse> pulses;
  int pulse_count = dr.poisson(sp.pulses_per_day);
  pulses.reserve(static_cast<std::size_t>(pulse_count));
  for (int i = 0; i < pulse_count; ++i) {
    int start = dr.uniform01() < 0.75
                    ? static_cast<int>(dr.uniform(6.0 * 3600, 23.0 * 3600))
                    : static_cast<int>(dr.uniform(0, kSecondsPerDay));
    int dur = static_cast<int>(dr.uniform(sp.pulse_dur_s_min, sp.pulse_dur_s_max));
    double kw = dr.uniform(sp.pulse_kw_min, sp.pulse_kw_max);
    pulses.push_back({start, std::min(start + dur, kSecondsPerDay), static_cast<float>(kw)});
  }
  std::sort(pulses.begin(), pulses.end(), [](const Pulse& a, const Pulse& b) { return a.start < b.start; });

  LoadProfile profile;
  profile.household = household;
  profile.day = day;
  profile.p_kw.resize(kSecondsPerDay);
  profile.q_kvar.resize(kSecondsPerDay);

  // Diurnal curve on a 1-minute lattice, linearly interpolated per second.
  auto diurnal = [&](double t) {
    double em = (t - evening_peak_s) / evening_width_s;
    double mm = (t - morning_peak_s) / morning_width_s;
    return day_scale * (base_kw + evening_amp * std::exp(-0.5 * em * em) +
                        morning_amp * std::exp(-0.5 * mm * mm));
  };
  std::vector<double> lattice(kSecondsPerDay / 60 + 1);
  for (std::size_t i = 0; i < lattice.size(); ++i) lattice[i] = diurnal(static_cast<double>(i) * 60.0);

  std::size_t next_pulse = 0;
  std::vector<Pulse> active;
  double sigma = sp.jitter_kw;
  for (int t = 0; t < kSecondsPerDay; ++t) {
    while (next_pulse < pulses.size() && pulses[next_pulse].start <= t) active.push_back(pulses[next_pulse++]);
    double pulse_kw = 0.0;
    for (std::size_t i = 0; i < active.size();) {
      if (active[i].end <= t) {
        active[i] = active.back();
        active.pop_back();
      } else {
        pulse_kw += active[i].kw;
        ++i;
      }
    }
    int minute = t / 60;
    double frac = (t - minute * 60) / 60.0;
    double base = lattice[static_cast<std::size_t>(minute)] * (1.0 - frac) +
                  lattice[static_cast<std::size_t>(minute) + 1] * frac;
    // three-uniform sum as cheap jitter noise
    double noise = (dr.uniform01() + dr.uniform01() + dr.uniform01() - 1.5) * 2.0 * sigma;
    double p = std::max(0.0, base + pulse_kw + noise);
    profile.p_kw[static_cast<std::size_t>(t)] = static_cast<float>(p);
    profile.q_kvar[static_cast<std::size_t>(t)] = static_cast<float>(p * tan_phi);
  }
  return profile;
}

void ProfileLibrary::validate(const LoadProfile& profile, const std::string& origin) const {
  if (profile.p_kw.size() != kSecondsPerDay || profile.q_kvar.size() != kSecondsPerDay) {
    throw std::runtime_error(origin + ": expected 86400 samples, got " +
                             std::to_string(profile.p_kw.size()));
  }
  for (std::size_t i = 0; i < profile.p_kw.size(); ++i) {
    double p = profile.p_kw[i];
    double q = profile.q_kvar[i];
    if (p < 0) throw std::runtime_error(origin + ": negative P at second " + std::to_string(i));
    if (std::abs(q) > p * kMaxTanPhi + 1e-9) {
      throw std::runtime_error(origin + ": power factor below 0.8 at second " + std::to_string(i));
    }
  }
}

ProfileLibrary ProfileLibrary::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open profile csv " + path);

  ProfileLibrary lib;
  lib.synthetic_ = false;

  std::string line;
  long row = 0;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  ++row;
  if (line != "timestamp_s,P_kW,Q_kvar,household,day") {
    throw std::runtime_error(path + ": row 1: expected header timestamp_s,P_kW,Q_kvar,household,day");
  }

  struct Key {
    int household, day;
    bool operator<(const Key& o) const {
      return household != o.household ? household < o.household : day < o.day;
    }
  };
  std::vector<std::pair<Key, std::unique_ptr<LoadProfile>>> found;

  auto find_or_create = [&](int household, int day) -> LoadProfile& {
    // consecutive rows almost always hit the same profile
    if (!found.empty() && found.back().first.household == household &&
        found.back().first.day == day) {
      return *found.back().second;
    }
    for (auto& [k, v] : found) {
      if (k.household == household && k.day == day) return *v;
    }
    auto p = std::make_unique<LoadProfile>();
    p->household = household;
    p->day = day;
    p->p_kw.reserve(kSecondsPerDay);
    p->q_kvar.reserve(kSecondsPerDay);
    found.emplace_back(Key{household, day}, std::move(p));
    return *found.back().second;
  };

  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string f0, f1, f2, f3, f4;
    if (!std::getline(ls, f0, ',') || !std::getline(ls, f1, ',') || !std::getline(ls, f2, ',') ||
        !std::getline(ls, f3, ',') || !std::getline(ls, f4)) {
      throw std::runtime_error(path + ": row " + std::to_string(row) + ": malformed row");
    }
    int ts, household, day;
    double p, q;
    try {
      ts = std::stoi(f0);
      p = std::stod(f1);
      q = std::stod(f2);
      household = std::stoi(f3);
      day = std::stoi(f4);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ": row " + std::to_string(row) + ": non-numeric field");
    }
    if (p < 0) {
      throw std::runtime_error(path + ": row " + std::to_string(row) + ": negative P");
    }
    if (std::abs(q) > p * kMaxTanPhi + 1e-9) {
      throw std::runtime_error(path + ": row " + std::to_string(row) + ": power factor below 0.8");
    }
    LoadProfile& prof = find_or_create(household, day);
    if (ts != static_cast<int>(prof.p_kw.size())) {
      throw std::runtime_error(path + ": row " + std::to_string(row) + ": expected timestamp " +
                               std::to_string(prof.p_kw.size()) + " for household " +
                               std::to_string(household) + " day " + std::to_string(day));
    }
    prof.p_kw.push_back(static_cast<float>(p));
    prof.q_kvar.push_back(static_cast<float>(q));
  }
  if (found.empty()) throw std::runtime_error(path + ": no profile rows");

  std::sort(found.begin(), found.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  int max_household = 0, max_day = 0;
  for (auto& [k, prof] : found) {
    if (prof->p_kw.size() != kSecondsPerDay) {
      throw std::runtime_error(path + ": household " + std::to_string(k.household) + " day " +
                               std::to_string(k.day) + " has " + std::to_string(prof->p_kw.size()) +
                               " samples, expected 86400");
    }
    max_household = std::max(max_household, k.household);
    max_day = std::max(max_day, k.day);
  }
  lib.households_ = max_household + 1;
  lib.days_ = max_day + 1;
  lib.cache_.resize(static_cast<std::size_t>(lib.days_));
  for (auto& day_slot : lib.cache_) day_slot.resize(static_cast<std::size_t>(lib.households_));
  for (auto& [k, prof] : found) {
    lib.validate(*prof, path);
    auto& slot = lib.cache_[static_cast<std::size_t>(k.day)][static_cast<std::size_t>(k.household)];
    if (slot) throw std::runtime_error(path + ": duplicate profile for household " +
                                       std::to_string(k.household) + " day " + std::to_string(k.day));
    slot = std::move(prof);
  }
  for (int d = 0; d < lib.days_; ++d) {
    for (int h = 0; h < lib.households_; ++h) {
      if (!lib.cache_[static_cast<std::size_t>(d)][static_cast<std::size_t>(h)]) {
        throw std::runtime_error(path + ": missing profile for household " + std::to_string(h) +
                                 " day " + std::to_string(d));
      }
    }
  }
  return lib;
}

std::string ProfileLibrary::serialize(const LoadProfile& profile) {
  std::ostringstream out;
  char buf[64];
  out << "profile " << profile.household << " " << profile.day << "\n";
  for (std::size_t i = 0; i < profile.p_kw.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", static_cast<double>(profile.p_kw[i]),
                  static_cast<double>(profile.q_kvar[i]));
    out << buf;
  }
  return out.str();
}

ProfileLibrary synthesize_library(std::uint64_t seed, int households, int days,
                                  const SynthParams& params) {
  return ProfileLibrary::synthesize(seed, households, days, params);
}

ProfileLibrary load_profiles_csv(const std::string& path) { return ProfileLibrary::from_csv(path); }

void write_profiles_csv(const ProfileLibrary& library, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "timestamp_s,P_kW,Q_kvar,household,day\n";
  char buf[128];
  for (int d = 0; d < library.days(); ++d) {
    for (int h = 0; h < library.households(); ++h) {
      const LoadProfile& prof = library.profile(h, d);
      for (int t = 0; t < kSecondsPerDay; ++t) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%d,%d\n", t,
                      static_cast<double>(prof.p_kw[static_cast<std::size_t>(t)]),
                      static_cast<double>(prof.q_kvar[static_cast<std::size_t>(t)]), h, d);
        out << buf;
      }
    }
    library.release_day(d);
  }
}

}  // namespace gridaimd

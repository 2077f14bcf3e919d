#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace gridaimd {

inline constexpr int kSecondsPerDay = 86400;

struct LoadProfile {
  int household = 0;
  int day = 0;
  std::vector<float> p_kw;    // 86400 samples, 1 s period
  std::vector<float> q_kvar;  // same length, |Q| <= P tan(acos(0.8))
};

std::pair<double, double> profile_at(const LoadProfile& profile, int t_s);

struct SynthParams {
  double base_kw_min = 0.18, base_kw_max = 0.45;
  double evening_amp_kw_min = 1.85, evening_amp_kw_max = 3.42;
  double morning_frac_min = 0.25, morning_frac_max = 0.50;
  double evening_peak_h_mean = 19.5, evening_peak_h_sd = 1.0;
  double morning_peak_h_mean = 7.5, morning_peak_h_sd = 0.7;
  double evening_width_h_min = 1.5, evening_width_h_max = 2.5;
  double morning_width_h_min = 1.0, morning_width_h_max = 1.5;
  double day_scale_min = 0.85, day_scale_max = 1.15;
  double pulses_per_day = 8.0;
  double pulse_kw_min = 0.4, pulse_kw_max = 2.0;
  int pulse_dur_s_min = 120, pulse_dur_s_max = 3600;
  double jitter_kw = 0.02;
  double pf_min = 0.90, pf_max = 0.99;
};

// Daily household load profiles at 1 s resolution. Backed either by ingested
// CSV data or by the seeded synthetic generator; synthetic days are
// materialized on demand and can be released to bound memory during long
// campaigns.
class ProfileLibrary {
 public:
  static ProfileLibrary synthesize(std::uint64_t seed, int households, int days,
                                   const SynthParams& params = {});
  static ProfileLibrary from_csv(const std::string& path);

  int households() const { return households_; }
  int days() const { return days_; }
  std::uint64_t rng_seed() const { return seed_; }

  const LoadProfile& profile(int household, int day) const;
  void release_day(int day) const;

  // Deterministic text form of one profile, used by determinism checks.
  static std::string serialize(const LoadProfile& profile);

 private:
  ProfileLibrary() = default;
  LoadProfile generate(int household, int day) const;
  void validate(const LoadProfile& profile, const std::string& origin) const;

  bool synthetic_ = false;
  std::uint64_t seed_ = 0;
  int households_ = 0;
  int days_ = 0;
  SynthParams params_;
  // cache[day][household]; empty slot = not materialized
  mutable std::vector<std::vector<std::unique_ptr<LoadProfile>>> cache_;
};

ProfileLibrary synthesize_library(std::uint64_t seed, int households, int days,
                                  const SynthParams& params = {});
ProfileLibrary load_profiles_csv(const std::string& path);

// CSV schema shared by the ingester and the synth-profiles writer.
void write_profiles_csv(const ProfileLibrary& library, const std::string& path);

}  // namespace gridaimd

#include "gridaimd/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "gridaimd/rng.hpp"

namespace gridaimd {

namespace {
constexpr int kLayers = 5;

int rows_of(int layer) { return NeuralNet::kLayerSizes[static_cast<std::size_t>(layer) + 1]; }
int cols_of(int layer) { return NeuralNet::kLayerSizes[static_cast<std::size_t>(layer)]; }
}  // namespace

NeuralNet::NeuralNet() {
  for (int l = 0; l < kLayers; ++l) {
    weights_[static_cast<std::size_t>(l)].assign(
        static_cast<std::size_t>(rows_of(l)) * static_cast<std::size_t>(cols_of(l)), 0.0);
    biases_[static_cast<std::size_t>(l)].assign(static_cast<std::size_t>(rows_of(l)), 0.0);
  }
  stats_.scale.fill(1.0);
  stats_.label_scale = 1.0;
}

NeuralNet NeuralNet::initialized(std::uint64_t seed) {
  NeuralNet net;
  Rng rng = Rng(seed).derive("nn-init");
  for (int l = 0; l < kLayers; ++l) {
    double limit = std::sqrt(6.0 / (rows_of(l) + cols_of(l)));
    for (double& w : net.weights_[static_cast<std::size_t>(l)]) w = rng.uniform(-limit, limit);
  }
  return net;
}

double NeuralNet::forward_normalized(const FeatureVector& x) const {
  double act[2][30];
  int cur_n = 4;
  for (int i = 0; i < 4; ++i) act[0][i] = x[static_cast<std::size_t>(i)];
  int cur = 0;
  for (int l = 0; l < kLayers; ++l) {
    const auto& w = weights_[static_cast<std::size_t>(l)];
    const auto& b = biases_[static_cast<std::size_t>(l)];
    int nr = rows_of(l);
    int nxt = cur ^ 1;
    for (int r = 0; r < nr; ++r) {
      double z = b[static_cast<std::size_t>(r)];
      const double* wrow = &w[static_cast<std::size_t>(r) * static_cast<std::size_t>(cur_n)];
      for (int c = 0; c < cur_n; ++c) z += wrow[c] * act[cur][c];
      act[nxt][r] = (l + 1 < kLayers && z < 0.0) ? 0.0 : z;  // relu on hidden layers
    }
    cur_n = nr;
    cur = nxt;
  }
  return act[cur][0];
}

int time_interval(int t_s, int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (t_s <= 0 || t_s > 86400) {
    throw std::out_of_range("second-of-day " + std::to_string(t_s) + " outside (0, 86400]");
  }
  long long num = static_cast<long long>(t_s) * k;
  return static_cast<int>((num + 86399) / 86400);
}

FeatureWindow extract_features(std::span<const double> v_pu, std::span<const double> delta_rad,
                               int end_t_s, int k, int window_len) {
  if (window_len < 1) throw std::invalid_argument("window length must be >= 1");
  if (end_t_s < window_len || static_cast<std::size_t>(end_t_s) > v_pu.size() ||
      v_pu.size() != delta_rad.size()) {
    throw std::invalid_argument("segment too short: need " + std::to_string(window_len) +
                                " consecutive seconds ending at " + std::to_string(end_t_s));
  }
  FeatureWindow w;
  w.v.reserve(static_cast<std::size_t>(window_len));
  w.v_sq.reserve(static_cast<std::size_t>(window_len));
  w.delta.reserve(static_cast<std::size_t>(window_len));
  for (int t = end_t_s - window_len; t < end_t_s; ++t) {
    double v = v_pu[static_cast<std::size_t>(t)];
    w.v.push_back(v);
    w.v_sq.push_back(v * v);
    w.delta.push_back(delta_rad[static_cast<std::size_t>(t)]);
  }
  w.t_k = time_interval((end_t_s - 1) % 86400 + 1, k);
  return w;
}

FeatureVector average_window(const FeatureWindow& window) {
  if (window.v.empty() || window.v.size() != window.v_sq.size() ||
      window.v.size() != window.delta.size()) {
    throw std::invalid_argument("feature window sample vectors must be non-empty and equal length");
  }
  double n = static_cast<double>(window.v.size());
  FeatureVector out{};
  out[0] = std::accumulate(window.v.begin(), window.v.end(), 0.0) / n;
  out[1] = std::accumulate(window.v_sq.begin(), window.v_sq.end(), 0.0) / n;
  out[2] = std::accumulate(window.delta.begin(), window.delta.end(), 0.0) / n;
  out[3] = window.t_k;
  return out;
}

FeatureVector normalize_features(const FeatureVector& averaged, const NormStats& stats) {
  FeatureVector out{};
  for (std::size_t i = 0; i < 4; ++i) out[i] = (averaged[i] - stats.shift[i]) / stats.scale[i];
  return out;
}

FeatureVector denormalize_features(const FeatureVector& normalized, const NormStats& stats) {
  FeatureVector out{};
  for (std::size_t i = 0; i < 4; ++i) out[i] = normalized[i] * stats.scale[i] + stats.shift[i];
  return out;
}

FeatureVector average_and_normalize(const FeatureWindow& window, const NormStats& stats) {
  return normalize_features(average_window(window), stats);
}

namespace {

// Assign the validation mask and compute normalization stats from the
// training rows only.
void split_and_normalize(TrainingDataset& ds, const EstimatorConfig& config) {
  std::size_t m = ds.features.size();
  if (m == 0) throw std::invalid_argument("dataset is empty");
  for (std::size_t i = 0; i < m; ++i) {
    for (double f : ds.features[i]) {
      if (!std::isfinite(f)) throw std::invalid_argument("dataset contains non-finite feature");
    }
    if (!std::isfinite(ds.labels_kva[i])) throw std::invalid_argument("dataset contains non-finite label");
  }

  ds.is_validation.assign(m, 0);
  std::size_t val_count = static_cast<std::size_t>(config.validation_fraction * static_cast<double>(m));
  if (val_count >= m) val_count = m - 1;
  if (val_count > 0) {
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng = Rng(config.seed).derive("val-split");
    for (std::size_t i = 0; i < val_count; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.below(m - i));
      std::swap(idx[i], idx[j]);
    }
    for (std::size_t i = 0; i < val_count; ++i) ds.is_validation[idx[i]] = 1;
  }

  FeatureVector sum{}, sum_sq{};
  double lsum = 0.0, lsum_sq = 0.0;
  double n = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (ds.is_validation[i]) continue;
    for (std::size_t f = 0; f < 4; ++f) {
      sum[f] += ds.features[i][f];
      sum_sq[f] += ds.features[i][f] * ds.features[i][f];
    }
    lsum += ds.labels_kva[i];
    lsum_sq += ds.labels_kva[i] * ds.labels_kva[i];
    n += 1.0;
  }
  for (std::size_t f = 0; f < 4; ++f) {
    ds.stats.shift[f] = sum[f] / n;
    double var = std::max(0.0, sum_sq[f] / n - ds.stats.shift[f] * ds.stats.shift[f]);
    double sd = std::sqrt(var);
    ds.stats.scale[f] = sd > 1e-12 ? sd : 1.0;
  }
  ds.stats.label_shift = lsum / n;
  double lvar = std::max(0.0, lsum_sq / n - ds.stats.label_shift * ds.stats.label_shift);
  double lsd = std::sqrt(lvar);
  ds.stats.label_scale = lsd > 1e-12 ? lsd : 1.0;
}

}  // namespace

TrainingDataset build_dataset(std::span<const NodeHistory> histories, const EstimatorConfig& config) {
  if (histories.empty()) throw std::invalid_argument("no histories given");
  TrainingDataset ds;
  int wl = config.window_len;
  for (const NodeHistory& h : histories) {
    std::size_t n = std::min({h.v_pu.size(), h.delta_rad.size(), h.feeder_s_kva.size()});
    for (std::size_t start = 0; start + static_cast<std::size_t>(wl) <= n;
         start += static_cast<std::size_t>(wl)) {
      int end_t = static_cast<int>(start) + wl;
      FeatureWindow w = extract_features(std::span<const double>(h.v_pu.data(), n),
                                         std::span<const double>(h.delta_rad.data(), n), end_t,
                                         config.k_intervals, wl);
      ds.features.push_back(average_window(w));
      double label = 0.0;
      for (std::size_t t = start; t < start + static_cast<std::size_t>(wl); ++t) {
        label += h.feeder_s_kva[t];
      }
      ds.labels_kva.push_back(label / wl);
    }
  }
  if (ds.features.empty()) throw std::invalid_argument("histories shorter than one window");
  split_and_normalize(ds, config);
  return ds;
}

TrainingDataset dataset_from_rows(std::vector<FeatureVector> features, std::vector<double> labels_kva,
                                  const EstimatorConfig& config) {
  if (features.size() != labels_kva.size()) throw std::invalid_argument("feature/label size mismatch");
  TrainingDataset ds;
  ds.features = std::move(features);
  ds.labels_kva = std::move(labels_kva);
  split_and_normalize(ds, config);
  return ds;
}

double mse_loss_and_gradients(const NeuralNet& net, std::span<const FeatureVector> x_normalized,
                              std::span<const double> y_normalized, NetGradients& out) {
  std::size_t batch = x_normalized.size();
  if (batch == 0 || batch != y_normalized.size()) {
    throw std::invalid_argument("batch must be non-empty with matching labels");
  }
  for (int l = 0; l < kLayers; ++l) {
    out.d_weights[static_cast<std::size_t>(l)].assign(net.weights_[static_cast<std::size_t>(l)].size(), 0.0);
    out.d_biases[static_cast<std::size_t>(l)].assign(net.biases_[static_cast<std::size_t>(l)].size(), 0.0);
  }

  double acts[6][30];
  double grad[30];
  double loss = 0.0;
  double inv_batch = 1.0 / static_cast<double>(batch);

  for (std::size_t s = 0; s < batch; ++s) {
    for (int i = 0; i < 4; ++i) acts[0][i] = x_normalized[s][static_cast<std::size_t>(i)];
    for (int l = 0; l < kLayers; ++l) {
      const auto& w = net.weights_[static_cast<std::size_t>(l)];
      const auto& b = net.biases_[static_cast<std::size_t>(l)];
      int nr = rows_of(l), nc = cols_of(l);
      for (int r = 0; r < nr; ++r) {
        double z = b[static_cast<std::size_t>(r)];
        const double* wrow = &w[static_cast<std::size_t>(r) * static_cast<std::size_t>(nc)];
        for (int c = 0; c < nc; ++c) z += wrow[c] * acts[l][c];
        acts[l + 1][r] = (l + 1 < kLayers && z < 0.0) ? 0.0 : z;
      }
    }
    double err = acts[kLayers][0] - y_normalized[s];
    loss += err * err * inv_batch;

    // Backward pass; grad holds dL/d(activation) of the current layer.
    grad[0] = 2.0 * err * inv_batch;
    for (int l = kLayers - 1; l >= 0; --l) {
      auto& dw = out.d_weights[static_cast<std::size_t>(l)];
      auto& db = out.d_biases[static_cast<std::size_t>(l)];
      const auto& w = net.weights_[static_cast<std::size_t>(l)];
      int nr = rows_of(l), nc = cols_of(l);
      double next_grad[30] = {};
      for (int r = 0; r < nr; ++r) {
        double g = grad[r];
        if (l + 1 < kLayers && acts[l + 1][r] <= 0.0) g = 0.0;  // relu gate
        if (g == 0.0) continue;
        db[static_cast<std::size_t>(r)] += g;
        double* dwrow = &dw[static_cast<std::size_t>(r) * static_cast<std::size_t>(nc)];
        const double* wrow = &w[static_cast<std::size_t>(r) * static_cast<std::size_t>(nc)];
        for (int c = 0; c < nc; ++c) {
          dwrow[c] += g * acts[l][c];
          next_grad[c] += g * wrow[c];
        }
      }
      if (l > 0) std::copy(next_grad, next_grad + nc, grad);
    }
  }
  return loss;
}

NeuralNet train(const TrainingDataset& dataset, const EstimatorConfig& config) {
  std::size_t m = dataset.features.size();
  if (m == 0 || dataset.labels_kva.size() != m || dataset.is_validation.size() != m) {
    throw std::invalid_argument("dataset is empty or inconsistent");
  }
  for (double s : dataset.stats.scale) {
    if (!(s > 0)) throw std::invalid_argument("dataset normalization scale must be positive");
  }

  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t i = 0; i < m; ++i) {
    (dataset.is_validation[i] ? val_idx : train_idx).push_back(i);
  }
  if (train_idx.empty()) throw std::invalid_argument("dataset has no training rows");

  Rng rng = Rng(config.seed).derive("nn-train");
  if (config.max_rows > 0 && train_idx.size() > static_cast<std::size_t>(config.max_rows)) {
    // Stratified subsample over (time-interval group x label bin) with an
    // equal budget per stratum, cycling small strata, so rare combinations
    // (late-night high-load windows) keep full weight in the loss.
    constexpr std::size_t kLabelBins = 8;
    constexpr std::size_t kTimeGroups = 4;
    constexpr std::size_t kStrata = kLabelBins * kTimeGroups;
    double lo = dataset.labels_kva[train_idx[0]], hi = lo;
    double tk_lo = dataset.features[train_idx[0]][3], tk_hi = tk_lo;
    for (std::size_t i : train_idx) {
      lo = std::min(lo, dataset.labels_kva[i]);
      hi = std::max(hi, dataset.labels_kva[i]);
      tk_lo = std::min(tk_lo, dataset.features[i][3]);
      tk_hi = std::max(tk_hi, dataset.features[i][3]);
    }
    double width = std::max(hi - lo, 1e-9);
    double tk_width = std::max(tk_hi - tk_lo, 1e-9);
    std::array<std::vector<std::size_t>, kStrata> strata;
    for (std::size_t i : train_idx) {
      auto lb = std::min(kLabelBins - 1, static_cast<std::size_t>(
                                             (dataset.labels_kva[i] - lo) / width * kLabelBins));
      auto tg = std::min(kTimeGroups - 1, static_cast<std::size_t>((dataset.features[i][3] - tk_lo) /
                                                                   tk_width * kTimeGroups));
      strata[tg * kLabelBins + lb].push_back(i);
    }
    for (auto& stratum : strata) {
      for (std::size_t i = 0; i + 1 < stratum.size(); ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(stratum.size() - i));
        std::swap(stratum[i], stratum[j]);
      }
    }
    std::size_t non_empty = 0;
    for (const auto& stratum : strata) non_empty += stratum.empty() ? 0 : 1;
    std::size_t budget =
        static_cast<std::size_t>(config.max_rows) / std::max<std::size_t>(1, non_empty);
    std::vector<std::size_t> kept;
    kept.reserve(static_cast<std::size_t>(config.max_rows));
    for (const auto& stratum : strata) {
      if (stratum.empty()) continue;
      for (std::size_t i = 0; i < budget; ++i) kept.push_back(stratum[i % stratum.size()]);
    }
    train_idx = std::move(kept);
  }
  if (config.focus_label_kva > 0.0) {
    std::size_t base_count = train_idx.size();
    for (std::size_t k = 0; k < base_count; ++k) {
      std::size_t i = train_idx[k];
      if (std::abs(dataset.labels_kva[i] - config.focus_label_kva) <= config.focus_halfwidth_kva) {
        train_idx.push_back(i);
      }
    }
  }

  std::vector<FeatureVector> x(m);
  std::vector<double> y(m);
  for (std::size_t i = 0; i < m; ++i) {
    x[i] = normalize_features(dataset.features[i], dataset.stats);
    y[i] = (dataset.labels_kva[i] - dataset.stats.label_shift) / dataset.stats.label_scale;
  }

  NeuralNet net = NeuralNet::initialized(config.seed);
  net.stats_ = dataset.stats;
  net.k_intervals_ = config.k_intervals;

  NetGradients grads;
  std::array<std::vector<double>, 5> vel_w, vel_b;
  for (int l = 0; l < kLayers; ++l) {
    vel_w[static_cast<std::size_t>(l)].assign(net.weights_[static_cast<std::size_t>(l)].size(), 0.0);
    vel_b[static_cast<std::size_t>(l)].assign(net.biases_[static_cast<std::size_t>(l)].size(), 0.0);
  }

  std::size_t batch_size = config.batch_size > 0 ? static_cast<std::size_t>(config.batch_size)
                                                 : train_idx.size();
  std::vector<FeatureVector> bx(batch_size);
  std::vector<double> by(batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // seeded in-place shuffle per epoch; step shrinks for the final quarter
    double lr = epoch * 4 >= config.epochs * 3 ? config.learning_rate / 3.0 : config.learning_rate;
    for (std::size_t i = 0; i + 1 < train_idx.size(); ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.below(train_idx.size() - i));
      std::swap(train_idx[i], train_idx[j]);
    }
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < train_idx.size(); start += batch_size) {
      std::size_t count = std::min(batch_size, train_idx.size() - start);
      for (std::size_t i = 0; i < count; ++i) {
        bx[i] = x[train_idx[start + i]];
        by[i] = y[train_idx[start + i]];
      }
      double loss = mse_loss_and_gradients(net, std::span<const FeatureVector>(bx.data(), count),
                                           std::span<const double>(by.data(), count), grads);
      epoch_loss += loss;
      ++batches;
      for (int l = 0; l < kLayers; ++l) {
        auto& w = net.weights_[static_cast<std::size_t>(l)];
        auto& dw = grads.d_weights[static_cast<std::size_t>(l)];
        auto& vw = vel_w[static_cast<std::size_t>(l)];
        for (std::size_t i = 0; i < w.size(); ++i) {
          vw[i] = config.momentum * vw[i] - lr * dw[i];
          w[i] += vw[i];
        }
        auto& b = net.biases_[static_cast<std::size_t>(l)];
        auto& db = grads.d_biases[static_cast<std::size_t>(l)];
        auto& vb = vel_b[static_cast<std::size_t>(l)];
        for (std::size_t i = 0; i < b.size(); ++i) {
          vb[i] = config.momentum * vb[i] - lr * db[i];
          b[i] += vb[i];
        }
      }
    }
    if (!std::isfinite(epoch_loss / static_cast<double>(batches))) {
      throw std::runtime_error("training diverged (loss is not finite) at epoch " +
                               std::to_string(epoch));
    }
  }

  auto rmse_over = [&](const std::vector<std::size_t>& idx) {
    if (idx.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i : idx) {
      double err = net.forward_normalized(x[i]) - y[i];
      sum += err * err;
    }
    return std::sqrt(sum / static_cast<double>(idx.size())) * dataset.stats.label_scale;
  };
  net.final_train_rmse_kva = rmse_over(train_idx);
  net.final_val_rmse_kva = rmse_over(val_idx);
  net.trained_ = true;
  return net;
}

double predict(const NeuralNet& net, const FeatureVector& averaged_features) {
  if (!net.trained()) throw std::runtime_error("neural network has not been trained");
  double y = net.forward_normalized(normalize_features(averaged_features, net.stats()));
  return y * net.stats().label_scale + net.stats().label_shift;
}

std::string NeuralNet::serialize() const {
  std::ostringstream out;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  out << "gridaimd-model v1\nlayers";
  for (int s : kLayerSizes) out << " " << s;
  out << "\nactivation relu\nk_intervals " << k_intervals_ << "\nstats";
  for (double v : stats_.shift) { out << " "; num(v); }
  for (double v : stats_.scale) { out << " "; num(v); }
  out << " ";
  num(stats_.label_shift);
  out << " ";
  num(stats_.label_scale);
  out << "\ntrained " << (trained_ ? 1 : 0) << "\ntrain_rmse_kva ";
  num(final_train_rmse_kva);
  out << "\nval_rmse_kva ";
  num(final_val_rmse_kva);
  out << "\n";
  for (int l = 0; l < kLayers; ++l) {
    out << "W" << l << " " << rows_of(l) << " " << cols_of(l) << "\n";
    const auto& w = weights_[static_cast<std::size_t>(l)];
    for (int r = 0; r < rows_of(l); ++r) {
      for (int c = 0; c < cols_of(l); ++c) {
        if (c) out << " ";
        num(w[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_of(l)) +
              static_cast<std::size_t>(c)]);
      }
      out << "\n";
    }
    out << "b" << l << " " << rows_of(l) << "\n";
    const auto& b = biases_[static_cast<std::size_t>(l)];
    for (int r = 0; r < rows_of(l); ++r) {
      if (r) out << " ";
      num(b[static_cast<std::size_t>(r)]);
    }
    out << "\n";
  }
  return out.str();
}

NeuralNet NeuralNet::deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string line, tag;
  if (!std::getline(in, line) || line != "gridaimd-model v1") {
    throw std::runtime_error("not a gridaimd model file");
  }
  NeuralNet net;
  in >> tag;
  if (tag != "layers") throw std::runtime_error("model file missing layers record");
  for (int expect : kLayerSizes) {
    int got;
    if (!(in >> got) || got != expect) throw std::runtime_error("unexpected layer dimensions");
  }
  in >> tag >> line;  // activation relu
  if (tag != "activation" || line != "relu") throw std::runtime_error("unsupported activation");
  in >> tag >> net.k_intervals_;
  if (tag != "k_intervals" || net.k_intervals_ < 1) {
    throw std::runtime_error("model file missing k_intervals record");
  }
  in >> tag;
  if (tag != "stats") throw std::runtime_error("model file missing stats record");
  for (double& v : net.stats_.shift) in >> v;
  for (double& v : net.stats_.scale) in >> v;
  in >> net.stats_.label_shift >> net.stats_.label_scale;
  int trained_flag = 0;
  in >> tag >> trained_flag;
  net.trained_ = trained_flag != 0;
  in >> tag >> net.final_train_rmse_kva;
  in >> tag >> net.final_val_rmse_kva;
  for (int l = 0; l < kLayers; ++l) {
    int r, c;
    in >> tag >> r >> c;
    if (tag != "W" + std::to_string(l) || r != rows_of(l) || c != cols_of(l)) {
      throw std::runtime_error("malformed weight block in model file");
    }
    for (double& w : net.weights_[static_cast<std::size_t>(l)]) in >> w;
    in >> tag >> r;
    if (tag != "b" + std::to_string(l) || r != rows_of(l)) {
      throw std::runtime_error("malformed bias block in model file");
    }
    for (double& b : net.biases_[static_cast<std::size_t>(l)]) in >> b;
  }
  if (!in) throw std::runtime_error("truncated model file");
  return net;
}

void NeuralNet::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << serialize();
}

NeuralNet NeuralNet::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

std::size_t GradientProbe::parameter_count() const {
  std::size_t n = 0;
  for (int l = 0; l < kLayers; ++l) {
    n += net_->weights_[static_cast<std::size_t>(l)].size();
    n += net_->biases_[static_cast<std::size_t>(l)].size();
  }
  return n;
}

double GradientProbe::get(std::size_t flat_index) const {
  std::size_t flat = flat_index;
  for (int l = 0; l < kLayers; ++l) {
    const auto& w = net_->weights_[static_cast<std::size_t>(l)];
    if (flat < w.size()) return w[flat];
    flat -= w.size();
    const auto& b = net_->biases_[static_cast<std::size_t>(l)];
    if (flat < b.size()) return b[flat];
    flat -= b.size();
  }
  throw std::out_of_range("flat parameter index out of range");
}

void GradientProbe::set(std::size_t flat_index, double value) {
  std::size_t flat = flat_index;
  for (int l = 0; l < kLayers; ++l) {
    auto& w = net_->weights_[static_cast<std::size_t>(l)];
    if (flat < w.size()) {
      w[flat] = value;
      return;
    }
    flat -= w.size();
    auto& b = net_->biases_[static_cast<std::size_t>(l)];
    if (flat < b.size()) {
      b[flat] = value;
      return;
    }
    flat -= b.size();
  }
  throw std::out_of_range("flat parameter index out of range");
}

double GradientProbe::gradient(const NetGradients& grads, std::size_t flat_index) const {
  std::size_t flat = flat_index;
  for (int l = 0; l < kLayers; ++l) {
    const auto& w = grads.d_weights[static_cast<std::size_t>(l)];
    if (flat < w.size()) return w[flat];
    flat -= w.size();
    const auto& b = grads.d_biases[static_cast<std::size_t>(l)];
    if (flat < b.size()) return b[flat];
    flat -= b.size();
  }
  throw std::out_of_range("flat parameter index out of range");
}

}  // namespace gridaimd

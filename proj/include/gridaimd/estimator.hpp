#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gridaimd {

// Averaged per-window features, in model input order: V, V^2, delta, T_k.
using FeatureVector = std::array<double, 4>;

struct FeatureWindow {
  std::vector<double> v;      // per-unit, one sample per second
  std::vector<double> v_sq;   // per-unit squared
  std::vector<double> delta;  // radians
  int t_k = 1;                // interval index of the window's end time
};

struct NormStats {
  FeatureVector shift{};  // per-feature mean over training rows
  FeatureVector scale{};  // per-feature std (>= tiny floor)
  double label_shift = 0.0;
  double label_scale = 1.0;
};

struct TrainingDataset {
  std::vector<FeatureVector> features;  // raw window averages
  std::vector<double> labels_kva;
  std::vector<std::uint8_t> is_validation;
  NormStats stats;  // computed from training rows only
};

struct EstimatorConfig {
  int k_intervals = 24;
  int window_len = 60;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int batch_size = 64;
  int epochs = 200;
  double validation_fraction = 0.10;
  std::uint64_t seed = 0;
  int max_rows = 0;  // 0 = use every window; otherwise seeded stratified subsample
  // optional duplication of rows near a label of interest (e.g. the substation
  // rating, where the estimate is consumed as a comparison)
  double focus_label_kva = 0.0;  // 0 = off
  double focus_halfwidth_kva = 300.0;
};

// Fully connected 4 -> 30 -> 20 -> 10 -> 5 -> 1 regressor, rectifier hidden
// activations, identity output, trained on z-scored features and labels.
class NeuralNet {
 public:
  static constexpr std::array<int, 6> kLayerSizes{4, 30, 20, 10, 5, 1};

  NeuralNet();
  static NeuralNet initialized(std::uint64_t seed);

  bool trained() const { return trained_; }
  const NormStats& stats() const { return stats_; }
  int k_intervals() const { return k_intervals_; }

  // Forward pass on a normalized feature vector.
  double forward_normalized(const FeatureVector& x) const;

  std::string serialize() const;
  static NeuralNet deserialize(const std::string& text);
  void save(const std::string& path) const;
  static NeuralNet load(const std::string& path);

  double final_train_rmse_kva = 0.0;
  double final_val_rmse_kva = 0.0;

 private:
  friend NeuralNet train(const TrainingDataset&, const EstimatorConfig&);
  friend double mse_loss_and_gradients(const NeuralNet&, std::span<const FeatureVector>,
                                       std::span<const double>, struct NetGradients&);
  friend class GradientProbe;

  // weights_[l] is (rows = kLayerSizes[l+1]) x (cols = kLayerSizes[l]), row-major
  std::array<std::vector<double>, 5> weights_;
  std::array<std::vector<double>, 5> biases_;
  NormStats stats_;
  int k_intervals_ = 24;
  bool trained_ = false;
};

// T_k(t) = ceil(t k / 86400) for 0 < t <= 86400.
int time_interval(int t_s, int k);

// Window over the trailing `window_len` seconds ending at end_t_s (exclusive
// second index end_t_s-1; T_k evaluated at end_t_s).
FeatureWindow extract_features(std::span<const double> v_pu, std::span<const double> delta_rad,
                               int end_t_s, int k, int window_len = 60);

FeatureVector average_window(const FeatureWindow& window);
FeatureVector average_and_normalize(const FeatureWindow& window, const NormStats& stats);
FeatureVector normalize_features(const FeatureVector& averaged, const NormStats& stats);
FeatureVector denormalize_features(const FeatureVector& normalized, const NormStats& stats);

// Per-node 1 s history: local voltage/angle plus the feeder apparent power.
struct NodeHistory {
  std::vector<double> v_pu;
  std::vector<double> delta_rad;
  std::vector<double> feeder_s_kva;
};

// One row per non-overlapping window; label = mean feeder power over the
// window. Validation split and normalization stats are fixed here so that
// training sees stats from training rows only.
TrainingDataset build_dataset(std::span<const NodeHistory> histories, const EstimatorConfig& config);
TrainingDataset dataset_from_rows(std::vector<FeatureVector> features, std::vector<double> labels_kva,
                                  const EstimatorConfig& config);

NeuralNet train(const TrainingDataset& dataset, const EstimatorConfig& config);

// Denormalized estimate in kVA from raw (unnormalized) window averages.
double predict(const NeuralNet& net, const FeatureVector& averaged_features);

// Training-only oracle hook: loss and analytic gradients on a batch, exposed
// for the finite-difference checks.
struct NetGradients {
  std::array<std::vector<double>, 5> d_weights;
  std::array<std::vector<double>, 5> d_biases;
};
double mse_loss_and_gradients(const NeuralNet& net, std::span<const FeatureVector> x_normalized,
                              std::span<const double> y_normalized, NetGradients& out);

// Mutable access to parameters for the finite-difference probe.
class GradientProbe {
 public:
  explicit GradientProbe(NeuralNet& net) : net_(&net) {}
  std::size_t parameter_count() const;
  double get(std::size_t flat_index) const;
  void set(std::size_t flat_index, double value);
  double gradient(const NetGradients& grads, std::size_t flat_index) const;

 private:
  NeuralNet* net_;
};

}  // namespace gridaimd

#pragma once

#include <cstdint>
#include <optional>

#include "gridaimd/estimator.hpp"

namespace gridaimd {

struct AimdParams {
  double alpha_a = 1.0;    // additive step in amperes per period
  double beta = 0.5;       // multiplicative decrease factor
  double v_min_pu = 0.9;   // local voltage guard
  int period_s = 60;       // algorithm period
  double epsilon_kva = 0.0;  // margin on the estimated CE condition
};

enum class VerdictSource { IdealBroadcast, LocalEstimate };

struct CongestionVerdict {
  bool congested = false;
  VerdictSource source = VerdictSource::IdealBroadcast;
  std::optional<double> estimate_kva;  // present for local-estimate verdicts
};

// One AIMD transition: additive increase while uncongested and above the
// voltage guard, multiplicative decrease otherwise. Output stays in
// [0, max_current_a].
double aimd_step(double current_a, const CongestionVerdict& verdict, double v_local_pu,
                 const AimdParams& params, double max_current_a);

// CE when the feeder apparent power meets or exceeds the rating.
CongestionVerdict detect_ce_ideal(double s_kva, double s_rated_kva);

// CE when the locally estimated feeder power meets or exceeds rating - epsilon.
CongestionVerdict detect_ce_estimated(const NeuralNet& net, const FeatureWindow& window,
                                      double s_rated_kva, double epsilon_kva);

// Self-contained per-EV controller for the estimator-driven mode: accumulates
// its own bus's one-second measurements, and at each period boundary runs the
// NN estimate and the AIMD update. Sees nothing but (t, V, delta) of its own
// bus, which is what makes the isolation property checkable by replay.
class LocalEstimatorController {
 public:
  LocalEstimatorController(const NeuralNet* model, const AimdParams& params, double max_current_a,
                           int period_offset_s, int k_intervals);

  // Feed the measurement for second t; returns the commanded current to use
  // next second (changes only at period boundaries).
  double on_measurement(int t_s, double v_pu, double delta_rad, double s_rated_kva);

  double current() const { return current_a_; }
  std::int64_t comm_exchanges() const { return comm_exchanges_; }
  double last_estimate_kva() const { return last_estimate_kva_; }
  std::int64_t decision_count() const { return decision_count_; }

 private:
  const NeuralNet* model_;
  AimdParams params_;
  double max_current_a_;
  int period_offset_s_;
  int k_intervals_;
  double current_a_ = 0.0;
  double sum_v_ = 0.0, sum_v_sq_ = 0.0, sum_delta_ = 0.0;
  int samples_ = 0;
  double last_v_pu_ = 1.0;
  double last_estimate_kva_ = 0.0;
  std::int64_t decision_count_ = 0;
  std::int64_t comm_exchanges_ = 0;  // the one-time historical-data download
};

}  // namespace gridaimd

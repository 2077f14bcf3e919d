#include "gridaimd/controller.hpp"

#include <algorithm>
#include <stdexcept>

namespace gridaimd {

double aimd_step(double current_a, const CongestionVerdict& verdict, double v_local_pu,
                 const AimdParams& params, double max_current_a) {
  if (current_a < 0.0 || current_a > max_current_a) {
    throw std::invalid_argument("current must be in [0, max_current]");
  }
  if (params.alpha_a <= 0.0 || params.beta <= 0.0 || params.beta >= 1.0 || params.period_s <= 0) {
    throw std::invalid_argument("aimd params out of range");
  }
  double next;
  if (!verdict.congested && v_local_pu > params.v_min_pu) {
    next = current_a + params.alpha_a;
  } else {
    next = params.beta * current_a;
  }
  return std::clamp(next, 0.0, max_current_a);
}

CongestionVerdict detect_ce_ideal(double s_kva, double s_rated_kva) {
  if (s_rated_kva <= 0.0) throw std::invalid_argument("substation rating must be positive");
  return {s_kva >= s_rated_kva, VerdictSource::IdealBroadcast, std::nullopt};
}

CongestionVerdict detect_ce_estimated(const NeuralNet& net, const FeatureWindow& window,
                                      double s_rated_kva, double epsilon_kva) {
  if (s_rated_kva <= 0.0) throw std::invalid_argument("substation rating must be positive");
  if (epsilon_kva < 0.0) throw std::invalid_argument("margin must be non-negative");
  double estimate = predict(net, average_window(window));  // throws on untrained net
  return {estimate >= s_rated_kva - epsilon_kva, VerdictSource::LocalEstimate, estimate};
}

LocalEstimatorController::LocalEstimatorController(const NeuralNet* model, const AimdParams& params,
                                                   double max_current_a, int period_offset_s,
                                                   int k_intervals)
    : model_(model),
      params_(params),
      max_current_a_(max_current_a),
      period_offset_s_(period_offset_s),
      k_intervals_(k_intervals) {
  if (!model_ || !model_->trained()) {
    throw std::runtime_error("estimator-driven controller requires a trained model");
  }
  if (period_offset_s_ < 0 || period_offset_s_ >= params_.period_s) {
    throw std::invalid_argument("period offset must be in [0, period)");
  }
  comm_exchanges_ = 1;  // one historical-data download for training
}

double LocalEstimatorController::on_measurement(int t_s, double v_pu, double delta_rad,
                                                double s_rated_kva) {
  sum_v_ += v_pu;
  sum_v_sq_ += v_pu * v_pu;
  sum_delta_ += delta_rad;
  ++samples_;
  last_v_pu_ = v_pu;

  bool boundary = ((t_s + 1 - period_offset_s_) % params_.period_s) == 0;
  if (!boundary) return current_a_;

  if (samples_ >= params_.period_s) {
    double n = static_cast<double>(samples_);
    FeatureVector features{sum_v_ / n, sum_v_sq_ / n, sum_delta_ / n,
                           static_cast<double>(time_interval(t_s % 86400 + 1, k_intervals_))};
    last_estimate_kva_ = predict(*model_, features);
    CongestionVerdict verdict{last_estimate_kva_ >= s_rated_kva - params_.epsilon_kva,
                              VerdictSource::LocalEstimate, last_estimate_kva_};
    current_a_ = aimd_step(current_a_, verdict, last_v_pu_, params_, max_current_a_);
    ++decision_count_;
  }
  sum_v_ = sum_v_sq_ = sum_delta_ = 0.0;
  samples_ = 0;
  return current_a_;
}

}  // namespace gridaimd

#include <algorithm>
#include <cmath>

#include <stdexcept>

#include "doctest.h"

#include "gridaimd/estimator.hpp"
#include "gridaimd/rng.hpp"

using namespace gridaimd;

namespace {

// Linear dataset shaped like the closed-form voltage expression: a load level
// lambda scales every injection, so V^2 falls affinely in lambda while the
// label rises affinely. Any linear map is inside the network's hypothesis
// class, so training must drive the RMSE near zero.
TrainingDataset linear_dataset(int rows, std::uint64_t seed, const EstimatorConfig& cfg) {
  Rng rng(seed);
  std::vector<FeatureVector> features;
  std::vector<double> labels;
  for (int i = 0; i < rows; ++i) {
    double lambda = rng.uniform(0.2, 1.0);
    double v_sq = 1.0 - 0.08 * lambda;
    double v = std::sqrt(v_sq);
    double delta = -0.02 * lambda;
    double t_k = 1.0 + static_cast<double>(rng.below(24));
    features.push_back({v, v_sq, delta, t_k});
    labels.push_back(2500.0 * lambda);
  }
  return dataset_from_rows(std::move(features), std::move(labels), cfg);
}

}  // namespace

TEST_CASE("time_interval implements the ceiling formula") {
  CHECK(time_interval(1, 24) == 1);
  CHECK(time_interval(43200, 24) == 12);
  CHECK(time_interval(86400, 24) == 24);
  CHECK(time_interval(3600, 24) == 1);
  CHECK(time_interval(3601, 24) == 2);
  CHECK_THROWS_AS(time_interval(0, 24), std::out_of_range);
  CHECK_THROWS_AS(time_interval(86401, 24), std::out_of_range);
  CHECK_THROWS_AS(time_interval(10, 0), std::invalid_argument);
}

TEST_CASE("extract_features windows the trailing 60 seconds") {
  std::vector<double> v(120, 1.0), d(120, 0.0);
  for (int t = 60; t < 120; ++t) {
    v[static_cast<std::size_t>(t)] = 0.95;
    d[static_cast<std::size_t>(t)] = -0.01;
  }
  FeatureWindow w = extract_features(v, d, 120, 24);
  REQUIRE(w.v.size() == 60);
  for (double s : w.v) CHECK(s == doctest::Approx(0.95));
  for (double s : w.v_sq) CHECK(s == doctest::Approx(0.95 * 0.95));
  CHECK(w.t_k == 1);

  CHECK_THROWS(extract_features(std::vector<double>(59, 1.0), std::vector<double>(59, 0.0), 59, 24));
}

TEST_CASE("normalization identity and inverse round-trip") {
  NormStats stats;
  stats.shift = {0.97, 0.94, -0.005, 12.0};
  stats.scale = {0.01, 0.02, 0.002, 6.9};
  stats.label_shift = 1500.0;
  stats.label_scale = 700.0;

  FeatureWindow w;
  w.v.assign(60, stats.shift[0]);
  w.v_sq.assign(60, stats.shift[1]);
  w.delta.assign(60, stats.shift[2]);
  w.t_k = 12;
  FeatureVector z = average_and_normalize(w, stats);
  for (double f : z) CHECK(f == doctest::Approx(0.0));

  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    FeatureVector raw{rng.uniform(0.9, 1.0), rng.uniform(0.8, 1.0), rng.uniform(-0.05, 0.0),
                      rng.uniform(1, 24)};
    FeatureVector back = denormalize_features(normalize_features(raw, stats), stats);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(std::abs(back[i] - raw[i]) <= 1e-12 * std::max(1.0, std::abs(raw[i])));
    }
  }
}

TEST_CASE("prediction is invariant to sample order inside a window") {
  EstimatorConfig cfg;
  cfg.epochs = 40;
  cfg.seed = 5;
  NeuralNet net = train(linear_dataset(500, 11, cfg), cfg);

  Rng rng(17);
  FeatureWindow w;
  for (int i = 0; i < 60; ++i) {
    double v = rng.uniform(0.92, 1.0);
    w.v.push_back(v);
    w.v_sq.push_back(v * v);
    w.delta.push_back(rng.uniform(-0.02, 0.0));
  }
  w.t_k = 7;
  double before = predict(net, average_window(w));
  // reverse is a permutation; the mean is all that enters
  std::reverse(w.v.begin(), w.v.end());
  std::reverse(w.v_sq.begin(), w.v_sq.end());
  std::reverse(w.delta.begin(), w.delta.end());
  CHECK(predict(net, average_window(w)) == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("build_dataset yields one row per non-overlapping window") {
  EstimatorConfig cfg;
  NodeHistory h;
  h.v_pu.assign(86400, 0.97);
  h.delta_rad.assign(86400, -0.004);
  h.feeder_s_kva.assign(86400, 1234.0);
  TrainingDataset one_day = build_dataset(std::span<const NodeHistory>(&h, 1), cfg);
  CHECK(one_day.features.size() == 1440);

  std::vector<NodeHistory> month(30, h);
  TrainingDataset thirty = build_dataset(month, cfg);
  CHECK(thirty.features.size() == 43200);

  // constant system state: every row identical
  for (const FeatureVector& f : one_day.features) {
    CHECK(f[0] == doctest::Approx(0.97));
    CHECK(f[1] == doctest::Approx(0.97 * 0.97));
    CHECK(f[2] == doctest::Approx(-0.004));
  }
  for (double label : one_day.labels_kva) CHECK(label == doctest::Approx(1234.0));

  CHECK_THROWS_AS(build_dataset(std::span<const NodeHistory>(), cfg), std::invalid_argument);
}

TEST_CASE("analytic gradients match central finite differences to 1e-4") {
  EstimatorConfig cfg;
  cfg.seed = 21;
  NeuralNet net = NeuralNet::initialized(cfg.seed);

  Rng rng(42);
  std::vector<FeatureVector> x;
  std::vector<double> y;
  for (int i = 0; i < 10; ++i) {
    x.push_back({rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 1)});
    y.push_back(rng.normal(0, 1));
  }

  NetGradients grads;
  mse_loss_and_gradients(net, x, y, grads);

  GradientProbe probe(net);
  NetGradients scratch;
  double max_rel = 0.0;
  const double h = 1e-6;
  for (std::size_t i = 0; i < probe.parameter_count(); ++i) {
    double orig = probe.get(i);
    probe.set(i, orig + h);
    double up = mse_loss_and_gradients(net, x, y, scratch);
    probe.set(i, orig - h);
    double down = mse_loss_and_gradients(net, x, y, scratch);
    probe.set(i, orig);
    double numeric = (up - down) / (2.0 * h);
    double analytic = probe.gradient(grads, i);
    double rel = std::abs(analytic - numeric) / std::max(1e-6, std::abs(analytic) + std::abs(numeric));
    max_rel = std::max(max_rel, rel);
  }
  CHECK(max_rel <= 1e-4);
}

TEST_CASE("training fits an exactly-linear relation to under 1% of the label range") {
  EstimatorConfig cfg;
  cfg.seed = 7;
  cfg.epochs = 200;
  TrainingDataset ds = linear_dataset(2000, 13, cfg);
  NeuralNet net = train(ds, cfg);
  // label range is 2500 * [0.2, 1.0] = 2000 kVA wide
  CHECK(net.final_val_rmse_kva <= 0.01 * 2000.0);
}

TEST_CASE("training is deterministic given the seed") {
  EstimatorConfig cfg;
  cfg.seed = 99;
  cfg.epochs = 30;
  TrainingDataset ds = linear_dataset(400, 5, cfg);
  NeuralNet a = train(ds, cfg);
  NeuralNet b = train(ds, cfg);
  CHECK(a.serialize() == b.serialize());

  cfg.seed = 100;
  NeuralNet c = train(ds, cfg);
  CHECK(a.serialize() != c.serialize());
}

TEST_CASE("full-batch descent with a small step is monotone") {
  EstimatorConfig cfg;
  cfg.seed = 3;
  cfg.batch_size = 0;  // full batch
  cfg.momentum = 0.0;
  cfg.learning_rate = 1e-4;
  cfg.validation_fraction = 0.0;
  TrainingDataset ds = linear_dataset(200, 19, cfg);

  std::vector<FeatureVector> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < ds.features.size(); ++i) {
    x.push_back(normalize_features(ds.features[i], ds.stats));
    y.push_back((ds.labels_kva[i] - ds.stats.label_shift) / ds.stats.label_scale);
  }

  NetGradients grads;
  double prev = 1e300;
  EstimatorConfig stepper = cfg;
  for (int epoch = 1; epoch <= 12; ++epoch) {
    stepper.epochs = epoch;
    NeuralNet net = train(ds, stepper);
    double loss = mse_loss_and_gradients(net, x, y, grads);
    CHECK(loss <= prev + 1e-12);
    prev = loss;
  }
}

TEST_CASE("zero-weight net predicts the label shift; constant labels are matched") {
  EstimatorConfig cfg;
  cfg.seed = 1;
  cfg.epochs = 120;

  std::vector<FeatureVector> features;
  std::vector<double> labels;
  Rng rng(8);
  for (int i = 0; i < 600; ++i) {
    features.push_back({rng.uniform(0.9, 1.0), rng.uniform(0.8, 1.0), rng.uniform(-0.02, 0.0),
                        1.0 + static_cast<double>(rng.below(24))});
    labels.push_back(1800.0);
  }
  TrainingDataset ds = dataset_from_rows(std::move(features), std::move(labels), cfg);
  NeuralNet net = train(ds, cfg);
  FeatureVector any{0.95, 0.9, -0.01, 5.0};
  CHECK(predict(net, any) == doctest::Approx(1800.0).epsilon(0.01));
  // constant labels give label_scale floor 1 and shift = the constant, so a
  // zero net (forward pass 0) must predict exactly the shift
  CHECK(ds.stats.label_shift == doctest::Approx(1800.0));

  NeuralNet untrained;
  CHECK_THROWS(predict(untrained, any));
}

TEST_CASE("prediction on a training row stays within the reported training RMSE ballpark") {
  EstimatorConfig cfg;
  cfg.seed = 77;
  cfg.epochs = 150;
  TrainingDataset ds = linear_dataset(1500, 29, cfg);
  NeuralNet net = train(ds, cfg);
  // spot-check a handful of training rows
  int checked = 0;
  for (std::size_t i = 0; i < ds.features.size() && checked < 10; i += 151, ++checked) {
    double err = std::abs(predict(net, ds.features[i]) - ds.labels_kva[i]);
    CHECK(err <= 6.0 * std::max(net.final_train_rmse_kva, 1e-6));
  }
}

TEST_CASE("model serialization round-trips bit-exactly") {
  EstimatorConfig cfg;
  cfg.seed = 31;
  cfg.epochs = 25;
  NeuralNet net = train(linear_dataset(300, 23, cfg), cfg);
  NeuralNet back = NeuralNet::deserialize(net.serialize());
  CHECK(back.serialize() == net.serialize());
  FeatureVector probe{0.96, 0.92, -0.008, 3.0};
  CHECK(predict(back, probe) == predict(net, probe));
}

TEST_CASE("divergent training reports the offending epoch") {
  EstimatorConfig cfg;
  cfg.seed = 2;
  cfg.epochs = 400;
  cfg.learning_rate = 1e4;  // guaranteed blow-up
  TrainingDataset ds = linear_dataset(300, 37, cfg);
  CHECK_THROWS_WITH(train(ds, cfg), doctest::Contains("epoch"));
}

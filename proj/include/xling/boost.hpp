#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace xling {

// AdaBoost.R2 with weighted-least-squares linear base learners. Inputs are
// dense row-major matrices.

using Matrix = std::vector<std::vector<double>>;

enum class LossKind { Linear, Square, Exponential };

// How stages after the first see the sample weights: a seeded weighted
// bootstrap draw of n samples, or the weights themselves. The first stage
// always fits the full weighted sample.
enum class Sampling { Resample, Reweight };

std::string loss_name(LossKind loss);
LossKind parse_loss(const std::string& name);  // throws UsageError
std::string sampling_name(Sampling sampling);
Sampling parse_sampling(const std::string& name);  // throws UsageError

struct LinearLearner {
  double intercept = 0.0;
  std::vector<double> coef;

  double predict(std::span<const double> x) const;
};

// Minimizes sum_i w_i (y_i - b0 - x_i . b)^2. Rank-deficient designs get the
// minimum-norm solution.
LinearLearner weighted_least_squares(const Matrix& x, std::span<const double> y,
                                     std::span<const double> w);

// Smallest value p such that the weight of values <= p reaches half the total.
double weighted_median(std::span<const double> values, std::span<const double> weights);

struct BoostOptions {
  LossKind loss = LossKind::Linear;
  double learning_rate = 1.0;
  std::size_t stages = 50;
  Sampling sampling = Sampling::Resample;
  std::uint64_t seed = 0;
  // Uniform when empty.
  std::vector<double> initial_weights;
};

struct BoostStage {
  LinearLearner learner;  // in standardized feature space
  double weight = 0.0;
};

struct BoostedRegressor {
  LossKind loss = LossKind::Linear;
  double learning_rate = 1.0;
  Sampling sampling = Sampling::Resample;
  std::uint64_t seed = 0;
  std::vector<double> mean;   // per feature
  std::vector<double> scale;  // per feature, 1 for constant columns
  std::vector<BoostStage> stages;

  std::vector<double> standardize(std::span<const double> x) const;
  double stage_prediction(std::size_t stage, std::span<const double> x) const;
  double predict(std::span<const double> x) const;
  // Stage learner mapped back to raw feature units.
  LinearLearner raw_learner(std::size_t stage) const;
};

// Sample weights after each accepted stage are appended to `weight_trace`
// when it is non-null.
BoostedRegressor fit_boosted(const Matrix& x, std::span<const double> y,
                             const BoostOptions& options,
                             std::vector<std::vector<double>>* weight_trace = nullptr);

}  // namespace xling

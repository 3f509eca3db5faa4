#include "xling/boost.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "xling/errors.hpp"

namespace xling {

std::string loss_name(LossKind loss) {
  switch (loss) {
    case LossKind::Linear: return "linear";
    case LossKind::Square: return "square";
    case LossKind::Exponential: return "exponential";
  }
  return "linear";
}

LossKind parse_loss(const std::string& name) {
  if (name == "linear") return LossKind::Linear;
  if (name == "square") return LossKind::Square;
  if (name == "exponential") return LossKind::Exponential;
  throw UsageError("unknown loss '" + name + "' (linear, square, exponential)");
}

std::string sampling_name(Sampling sampling) {
  return sampling == Sampling::Resample ? "resample" : "reweight";
}

Sampling parse_sampling(const std::string& name) {
  if (name == "resample") return Sampling::Resample;
  if (name == "reweight") return Sampling::Reweight;
  throw UsageError("unknown sampling '" + name + "' (resample, reweight)");
}

double LinearLearner::predict(std::span<const double> x) const {
  double out = intercept;
  for (std::size_t j = 0; j < coef.size(); ++j) out += coef[j] * x[j];
  return out;
}

LinearLearner weighted_least_squares(const Matrix& x, std::span<const double> y,
                                     std::span<const double> w) {
  const auto n = static_cast<Eigen::Index>(x.size());
  const auto p = static_cast<Eigen::Index>(x.empty() ? 0 : x[0].size());
  Eigen::MatrixXd a(n, p + 1);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = std::sqrt(std::max(0.0, w[static_cast<std::size_t>(i)]));
    a(i, 0) = s;
    for (Eigen::Index j = 0; j < p; ++j)
      a(i, j + 1) = s * x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    b(i) = s * y[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd sol = a.completeOrthogonalDecomposition().solve(b);
  LinearLearner out;
  out.intercept = sol(0);
  out.coef.resize(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) out.coef[static_cast<std::size_t>(j)] = sol(j + 1);
  return out;
}

double weighted_median(std::span<const double> values, std::span<const double> weights) {
  if (values.empty()) throw DegenerateInputError("weighted median of nothing");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  const double half = 0.5 * std::accumulate(weights.begin(), weights.end(), 0.0);
  double mass = 0.0;
  for (std::size_t i : order) {
    mass += weights[i];
    if (mass >= half) return values[i];
  }
  return values[order.back()];
}

std::vector<double> BoostedRegressor::standardize(std::span<const double> x) const {
  if (x.size() != mean.size())
    throw DegenerateInputError("feature width " + std::to_string(x.size()) +
                               " does not match the model (" + std::to_string(mean.size()) + ")");
  std::vector<double> z(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - mean[j]) / scale[j];
  return z;
}

double BoostedRegressor::stage_prediction(std::size_t stage, std::span<const double> x) const {
  return stages.at(stage).learner.predict(standardize(x));
}

double BoostedRegressor::predict(std::span<const double> x) const {
  const auto z = standardize(x);
  std::vector<double> preds, weights;
  for (const auto& s : stages) {
    preds.push_back(s.learner.predict(z));
    weights.push_back(s.weight);
  }
  return weighted_median(preds, weights);
}

LinearLearner BoostedRegressor::raw_learner(std::size_t stage) const {
  const auto& l = stages.at(stage).learner;
  LinearLearner raw;
  raw.intercept = l.intercept;
  raw.coef.resize(l.coef.size());
  for (std::size_t j = 0; j < l.coef.size(); ++j) {
    raw.coef[j] = l.coef[j] / scale[j];
    raw.intercept -= raw.coef[j] * mean[j];
  }
  return raw;
}

BoostedRegressor fit_boosted(const Matrix& x, std::span<const double> y,
                             const BoostOptions& options,
                             std::vector<std::vector<double>>* weight_trace) {
  const std::size_t n = x.size();
  if (n != y.size()) throw DegenerateInputError("feature and target counts differ");
  if (n < 2) throw DegenerateInputError("at least two training samples are required");
  if (options.stages < 1) throw UsageError("stage count must be >= 1");
  if (!(options.learning_rate > 0.0)) throw UsageError("learning rate must be > 0");
  const std::size_t p = x[0].size();
  for (const auto& row : x)
    if (row.size() != p) throw DegenerateInputError("ragged feature matrix");

  BoostedRegressor model;
  model.loss = options.loss;
  model.learning_rate = options.learning_rate;
  model.sampling = options.sampling;
  model.seed = options.seed;
  model.mean.assign(p, 0.0);
  model.scale.assign(p, 1.0);
  for (std::size_t j = 0; j < p; ++j) {
    double m = 0.0;
    for (const auto& row : x) m += row[j];
    m /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& row : x) var += (row[j] - m) * (row[j] - m);
    var /= static_cast<double>(n);
    model.mean[j] = m;
    model.scale[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  Matrix z;
  z.reserve(n);
  for (const auto& row : x) z.push_back(model.standardize(row));

  const double y_max = std::abs(*std::max_element(y.begin(), y.end(), [](double a, double b) {
    return std::abs(a) < std::abs(b);
  }));
  if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) {
    BoostStage constant;
    constant.learner.intercept = y[0];
    constant.learner.coef.assign(p, 0.0);
    constant.weight = 1.0;
    model.stages.push_back(std::move(constant));
    return model;
  }

  std::vector<double> w = options.initial_weights;
  if (w.empty()) w.assign(n, 1.0 / static_cast<double>(n));
  if (w.size() != n) throw DegenerateInputError("initial weight count differs from samples");
  const double w_sum = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(w_sum > 0.0)) throw DegenerateInputError("initial weights must have positive mass");
  for (auto& v : w) v /= w_sum;

  std::mt19937_64 rng(options.seed);
  std::vector<double> draw_counts(n);
  std::vector<double> err(n), loss(n);
  for (std::size_t t = 0; t < options.stages; ++t) {
    BoostStage stage;
    if (t == 0 || options.sampling == Sampling::Reweight) {
      stage.learner = weighted_least_squares(z, y, w);
    } else {
      std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
      std::fill(draw_counts.begin(), draw_counts.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) draw_counts[pick(rng)] += 1.0;
      stage.learner = weighted_least_squares(z, y, draw_counts);
    }
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      err[i] = std::abs(y[i] - stage.learner.predict(z[i]));
      d = std::max(d, err[i]);
    }
    if (d <= 1e-12 * (1.0 + y_max)) {
      stage.weight = 1.0;
      model.stages.push_back(std::move(stage));
      if (weight_trace) weight_trace->push_back(w);
      break;
    }
    double mean_loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = err[i] / d;
      switch (options.loss) {
        case LossKind::Linear: loss[i] = r; break;
        case LossKind::Square: loss[i] = r * r; break;
        case LossKind::Exponential: loss[i] = 1.0 - std::exp(-r); break;
      }
      mean_loss += w[i] * loss[i];
    }
    if (mean_loss >= 0.5 || mean_loss <= 0.0) {
      if (model.stages.empty()) {
        stage.weight = 1.0;
        model.stages.push_back(std::move(stage));
        if (weight_trace) weight_trace->push_back(w);
      }
      break;
    }
    const double beta = mean_loss / (1.0 - mean_loss);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] *= std::pow(beta, options.learning_rate * (1.0 - loss[i]));
      total += w[i];
    }
    for (auto& v : w) v /= total;
    stage.weight = options.learning_rate * std::log(1.0 / beta);
    model.stages.push_back(std::move(stage));
    if (weight_trace) weight_trace->push_back(w);
  }
  return model;
}

}  // namespace xling

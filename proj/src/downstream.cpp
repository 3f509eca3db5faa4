#include "xling/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <thread>

#include "xling/errors.hpp"

namespace xling {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t pos; (pos = s.find(sep, start)) != std::string::npos; start = pos + 1)
    out.push_back(s.substr(start, pos - start));
  out.push_back(s.substr(start));
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool has_label(const std::vector<std::string>& labels, const std::string& l) {
  return std::find(labels.begin(), labels.end(), l) != labels.end();
}

// Full-batch gradient descent on mean logistic loss + l2/2 |w|^2 (bias not
// penalized), step 1/L with L a bound on the gradient's Lipschitz constant.
void fit_binary(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                const TrainOptions& opt, std::vector<double>& w, double& b,
                std::size_t& epochs) {
  const std::size_t n = x.size(), k = x[0].size();
  double max_sq = 0.0;
  for (const auto& row : x) {
    double sq = 1.0;
    for (double v : row) sq += v * v;
    max_sq = std::max(max_sq, sq);
  }
  const double step = 1.0 / (0.25 * max_sq + opt.l2);
  w.assign(k, 0.0);
  b = 0.0;
  std::vector<double> gw(k);
  for (epochs = 0; epochs < opt.max_epochs; ++epochs) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = b;
      for (std::size_t j = 0; j < k; ++j) z += w[j] * x[i][j];
      const double r = sigmoid(z) - y[i];
      gb += r;
      for (std::size_t j = 0; j < k; ++j) gw[j] += r * x[i][j];
    }
    double norm = 0.0;
    gb /= static_cast<double>(n);
    norm += gb * gb;
    for (std::size_t j = 0; j < k; ++j) {
      gw[j] = gw[j] / static_cast<double>(n) + opt.l2 * w[j];
      norm += gw[j] * gw[j];
    }
    if (std::sqrt(norm) < opt.tolerance) break;
    b -= step * gb;
    for (std::size_t j = 0; j < k; ++j) w[j] -= step * gw[j];
  }
}

}  // namespace

LabelSelection select_labels(const std::vector<std::vector<std::string>>& raw_labels,
                             std::size_t count) {
  if (count < 1) throw UsageError("label count must be >= 1");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : raw_labels) {
    std::set<std::string> unique(doc.begin(), doc.end());
    for (const auto& l : unique) ++df[l];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(df.begin(), df.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  LabelSelection out;
  out.reduced = ranked.size() < count;
  for (std::size_t i = 0; i < std::min(count, ranked.size()); ++i)
    out.universe.push_back(ranked[i].first);
  return out;
}

LabeledThetaSet restrict_labels(const LabeledThetaSet& set,
                                const std::vector<std::string>& universe) {
  LabeledThetaSet out;
  for (std::size_t d = 0; d < set.size(); ++d) {
    std::vector<std::string> kept;
    for (const auto& l : set.labels[d])
      if (has_label(universe, l) && !has_label(kept, l)) kept.push_back(l);
    if (kept.empty()) continue;
    out.ids.push_back(d < set.ids.size() ? set.ids[d] : std::to_string(d));
    out.thetas.push_back(set.thetas[d]);
    out.labels.push_back(std::move(kept));
  }
  return out;
}

double Classifier::probability(std::size_t label, const std::vector<double>& theta) const {
  if (constant[label] != 0) return constant[label] > 0 ? 1.0 : 0.0;
  double z = bias[label];
  for (std::size_t j = 0; j < theta.size(); ++j) z += weights[label][j] * theta[j];
  return sigmoid(z);
}

std::vector<std::string> Classifier::predict(const std::vector<double>& theta) const {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < labels.size(); ++l)
    if (probability(l, theta) >= 0.5) out.push_back(labels[l]);
  return out;
}

Classifier train_classifier(const LabeledThetaSet& train,
                            const std::vector<std::string>& universe,
                            const TrainOptions& options) {
  if (train.size() == 0) throw DegenerateInputError("empty training set");
  const std::size_t k = train.thetas[0].size();
  for (const auto& row : train.thetas)
    if (row.size() != k) throw DegenerateInputError("ragged theta rows");
  Classifier c;
  c.labels = universe;
  const std::size_t m = universe.size();
  c.weights.assign(m, std::vector<double>(k, 0.0));
  c.bias.assign(m, 0.0);
  c.constant.assign(m, 0);
  c.epochs.assign(m, 0);
  auto train_label = [&](std::size_t l) {
    std::vector<double> y(train.size());
    for (std::size_t d = 0; d < train.size(); ++d) y[d] = has_label(train.labels[d], universe[l]);
    const double pos = std::accumulate(y.begin(), y.end(), 0.0);
    if (pos == 0.0) c.constant[l] = -1;
    else if (pos == static_cast<double>(y.size())) c.constant[l] = 1;
    else fit_binary(train.thetas, y, options, c.weights[l], c.bias[l], c.epochs[l]);
  };
  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(m, 1));
  if (workers == 1) {
    for (std::size_t l = 0; l < m; ++l) train_label(l);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t l = t; l < m; l += workers) train_label(l);
      });
    for (auto& th : pool) th.join();
  }
  return c;
}

double F1Counts::precision() const {
  return tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
}
double F1Counts::recall() const {
  return tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
}
double F1Counts::f1() const {
  const auto denom = 2 * tp + fp + fn;
  return denom ? 2.0 * static_cast<double>(tp) / static_cast<double>(denom) : 0.0;
}

F1Counts count_decisions(const Classifier& classifier, const LabeledThetaSet& test) {
  if (test.size() == 0) throw DegenerateInputError("empty test set");
  F1Counts counts;
  for (std::size_t d = 0; d < test.size(); ++d) {
    if (!classifier.weights.empty() && test.thetas[d].size() != classifier.weights[0].size())
      throw DegenerateInputError("test theta width does not match the classifier");
    for (std::size_t l = 0; l < classifier.labels.size(); ++l) {
      const bool predicted = classifier.probability(l, test.thetas[d]) >= 0.5;
      const bool actual = has_label(test.labels[d], classifier.labels[l]);
      counts.tp += predicted && actual;
      counts.fp += predicted && !actual;
      counts.fn += !predicted && actual;
    }
  }
  return counts;
}

double evaluate_f1(const Classifier& classifier, const LabeledThetaSet& test) {
  return count_decisions(classifier, test).f1();
}

ShuffleBaseline shuffled_baseline(const LabeledThetaSet& train, const LabeledThetaSet& test,
                                  const std::vector<std::string>& universe,
                                  std::uint64_t seed, const TrainOptions& options,
                                  double sigmas) {
  if (test.size() == 0) throw DegenerateInputError("empty test set");
  std::mt19937_64 rng(seed);
  LabeledThetaSet shuffled_train = train;
  std::shuffle(shuffled_train.labels.begin(), shuffled_train.labels.end(), rng);
  LabeledThetaSet shuffled_test = test;
  std::shuffle(shuffled_test.labels.begin(), shuffled_test.labels.end(), rng);
  const auto classifier = train_classifier(shuffled_train, universe, options);

  // Per label, true positives among the predicted documents are
  // hypergeometric; the binomial moments below bound them from above.
  ShuffleBaseline out;
  double positives = 0.0, predicted = 0.0, mean_tp = 0.0, var_tp = 0.0;
  F1Counts counts;
  for (std::size_t l = 0; l < universe.size(); ++l) {
    double pos_l = 0.0, pred_l = 0.0;
    for (std::size_t d = 0; d < shuffled_test.size(); ++d) {
      const bool actual = has_label(shuffled_test.labels[d], universe[l]);
      const bool pred = classifier.probability(l, shuffled_test.thetas[d]) >= 0.5;
      pos_l += actual;
      pred_l += pred;
      counts.tp += pred && actual;
      counts.fp += pred && !actual;
      counts.fn += !pred && actual;
    }
    const double p = pos_l / static_cast<double>(shuffled_test.size());
    positives += pos_l;
    predicted += pred_l;
    mean_tp += pred_l * p;
    var_tp += pred_l * p * (1.0 - p);
  }
  out.base_rate = positives / static_cast<double>(shuffled_test.size() * universe.size());
  out.predicted_positive = counts.tp + counts.fp;
  out.f1 = counts.f1();
  const double denom = predicted + positives;
  if (denom > 0.0) {
    out.expected_f1 = 2.0 * mean_tp / denom;
    out.bound = sigmas * 2.0 * std::sqrt(var_tp) / denom;
  }
  out.within_bound = std::abs(out.f1 - out.expected_f1) <= out.bound + 1e-12;
  return out;
}

std::map<std::string, std::vector<std::string>> load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::map<std::string, std::vector<std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 2) throw ParseError(path.string(), line_no, "expected 2 columns");
    std::vector<std::string> cats;
    for (const auto& c : split(cols[1], ','))
      if (auto t = trim(c); !t.empty()) cats.push_back(t);
    out[trim(cols[0])] = std::move(cats);
  }
  return out;
}

LabeledThetaSet load_thetas(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  LabeledThetaSet out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cols = split(trim(line), '\t');
    if (cols.size() < 2) throw ParseError(path.string(), line_no, "expected id and probabilities");
    std::vector<double> row;
    try {
      for (std::size_t j = 1; j < cols.size(); ++j) row.push_back(std::stod(cols[j]));
    } catch (const std::exception&) {
      throw ParseError(path.string(), line_no, "malformed probability");
    }
    if (!out.thetas.empty() && row.size() != out.thetas[0].size())
      throw ParseError(path.string(), line_no, "row width differs from the first row");
    out.ids.push_back(cols[0]);
    out.thetas.push_back(std::move(row));
  }
  out.labels.resize(out.thetas.size());
  return out;
}

LabeledThetaSet attach_labels(LabeledThetaSet thetas,
                              const std::map<std::string, std::vector<std::string>>& labels) {
  LabeledThetaSet out;
  for (std::size_t d = 0; d < thetas.size(); ++d) {
    auto it = labels.find(thetas.ids[d]);
    if (it == labels.end()) continue;
    out.ids.push_back(thetas.ids[d]);
    out.thetas.push_back(std::move(thetas.thetas[d]));
    out.labels.push_back(it->second);
  }
  return out;
}

void write_results_tsv(std::ostream& out,
                       const std::vector<std::pair<std::string, double>>& results) {
  out << "model\tf1\n";
  out.precision(12);
  for (const auto& [id, f1] : results) out << id << '\t' << f1 << '\n';
}

}  // namespace xling

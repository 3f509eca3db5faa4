#include "xling/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "xling/errors.hpp"
#include "xling/metrics.hpp"

namespace xling {

namespace {

constexpr std::size_t kDesignWidth = kFeatureCount + 2;

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// Population statistics.
MeanStd mean_std(const std::vector<double>& v) {
  MeanStd out;
  if (v.empty()) return out;
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(v.size()));
  return out;
}

Side aux_side(const ExtractionContext& ctx) {
  const auto& lang = ctx.ref_corpus->language(ctx.pivot);
  if (ctx.aux_corpus->language(Side::A) == lang) return Side::A;
  if (ctx.aux_corpus->language(Side::B) == lang) return Side::B;
  return ctx.pivot;
}

using VectorCache = std::unordered_map<std::string, ContextVector>;

FeatureVector extract_one(const MultilingualTopic& topic, const ExtractionContext& ctx,
                          const VectorCache* ref_vectors, const VectorCache* aux_vectors) {
  if (!ctx.ref_index) throw DegenerateInputError("feature extraction needs a reference index");
  const std::size_t c = topic.cardinality();
  if (c < 2) throw DegenerateInputError("topic cardinality must be at least 2");
  const auto& index = *ctx.ref_index;

  FeatureVector f;
  f[Feature::Cardinality] = static_cast<double>(c);
  const double cross = cnpmi(index, topic);
  const double npmi_a = topic_npmi(index, topic.words_a, Side::A, c);
  const double npmi_b = topic_npmi(index, topic.words_b, Side::B, c);
  f[Feature::Cnpmi] = cross;
  f[Feature::Inpmi] = 0.5 * (npmi_a + npmi_b);
  if (ctx.dict) f[Feature::Mta] = mta(*ctx.dict, topic);
  else f.mark_missing(Feature::Mta);
  f[Feature::TwcA] = twc(index, topic.words_a, Side::A);
  f[Feature::TwcB] = twc(index, topic.words_b, Side::B);

  auto set_finite = [&](Feature which, double v) {
    if (std::isfinite(v)) f[which] = v;
    else f.mark_missing(which);
  };
  set_finite(Feature::McAB, mismatch_coefficient(cross, npmi_a));
  set_finite(Feature::McBA, mismatch_coefficient(cross, npmi_b));
  set_finite(Feature::IccAB, internal_comparison_coefficient(npmi_a, npmi_b));
  set_finite(Feature::IccBA, internal_comparison_coefficient(npmi_b, npmi_a));

  const auto& pivot_words = topic.words(ctx.pivot);
  std::vector<double> years;
  if (ctx.era)
    for (const auto& w : pivot_words)
      if (auto y = ctx.era->year(w)) years.push_back(*y);
  if (years.empty()) {
    f.mark_missing(Feature::EraMean);
    f.mark_missing(Feature::EraStd);
  } else {
    const auto s = mean_std(years);
    f[Feature::EraMean] = s.mean;
    f[Feature::EraStd] = s.std;
  }

  if (ref_vectors && aux_vectors) {
    std::vector<double> sims;
    static const ContextVector empty{};
    for (const auto& w : pivot_words) {
      auto r = ref_vectors->find(w);
      auto a = aux_vectors->find(w);
      sims.push_back(cosine_similarity(r == ref_vectors->end() ? empty : r->second,
                                       a == aux_vectors->end() ? empty : a->second));
    }
    const auto s = mean_std(sims);
    f[Feature::DriftMean] = s.mean;
    f[Feature::DriftStd] = s.std;
  } else {
    f.mark_missing(Feature::DriftMean);
    f.mark_missing(Feature::DriftStd);
  }
  return f;
}

}  // namespace

const std::array<std::string, kFeatureCount>& feature_names() {
  static const std::array<std::string, kFeatureCount> names{
      "cardinality", "cnpmi",  "inpmi",    "mta",      "twc_a",     "twc_b",     "mc_ab",
      "mc_ba",       "icc_ab", "icc_ba",   "era_mean", "era_std",   "drift_mean", "drift_std"};
  return names;
}

double mismatch_coefficient(double cnpmi_value, double npmi_l1) {
  return cnpmi_value / (npmi_l1 + kGapSmoothing);
}

double internal_comparison_coefficient(double npmi_l1, double npmi_l2) {
  return (npmi_l1 + kGapSmoothing) / (npmi_l2 + kGapSmoothing);
}

FeatureVector extract_features(const MultilingualTopic& topic, const ExtractionContext& ctx) {
  return extract_features(std::span<const MultilingualTopic>(&topic, 1), ctx).front();
}

std::vector<FeatureVector> extract_features(std::span<const MultilingualTopic> topics,
                                            const ExtractionContext& ctx, unsigned workers) {
  VectorCache ref_vectors, aux_vectors;
  const bool drift = ctx.ref_corpus && ctx.aux_corpus;
  if (drift) {
    std::set<std::string> unique;
    for (const auto& t : topics)
      for (const auto& w : t.words(ctx.pivot)) unique.insert(w);
    const std::vector<std::string> words(unique.begin(), unique.end());
    ref_vectors = context_vectors(*ctx.ref_corpus, ctx.pivot, words, ctx.drift_window);
    aux_vectors = context_vectors(*ctx.aux_corpus, aux_side(ctx), words, ctx.drift_window);
  }
  const VectorCache* rv = drift ? &ref_vectors : nullptr;
  const VectorCache* av = drift ? &aux_vectors : nullptr;

  std::vector<FeatureVector> out(topics.size());
  const unsigned n_workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(topics.size())));
  if (n_workers <= 1) {
    for (std::size_t i = 0; i < topics.size(); ++i) out[i] = extract_one(topics[i], ctx, rv, av);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(n_workers);
  for (unsigned w = 0; w < n_workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < topics.size(); i += n_workers)
          out[i] = extract_one(topics[i], ctx, rv, av);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::vector<double> design_row(const FeatureVector& f,
                               const std::array<double, kFeatureCount>& impute) {
  std::vector<double> row(kDesignWidth);
  for (std::size_t j = 0; j < kFeatureCount; ++j)
    row[j] = (f.missing >> j & 1u) ? impute[j] : f.values[j];
  row[kFeatureCount] = f.is_missing(Feature::EraMean) ? 1.0 : 0.0;
  row[kFeatureCount + 1] = f.is_missing(Feature::DriftMean) ? 1.0 : 0.0;
  return row;
}

double EstimatorModel::predict(const FeatureVector& f) const {
  return regressor.predict(design_row(f, impute));
}

double predict(const EstimatorModel& model, const FeatureVector& f) { return model.predict(f); }

EstimatorModel fit(std::span<const FeatureVector> features, std::span<const double> targets,
                   const BoostOptions& options, std::vector<std::vector<double>>* weight_trace) {
  if (features.size() != targets.size())
    throw DegenerateInputError("feature and target counts differ");
  for (double t : targets)
    if (!std::isfinite(t)) throw DegenerateInputError("training targets must be finite");
  EstimatorModel model;
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& f : features)
      if (!(f.missing >> j & 1u)) {
        sum += f.values[j];
        ++n;
      }
    model.impute[j] = n ? sum / static_cast<double>(n) : 0.0;
  }
  Matrix x;
  x.reserve(features.size());
  for (const auto& f : features) x.push_back(design_row(f, model.impute));
  model.regressor = fit_boosted(x, targets, options, weight_trace);
  return model;
}

std::vector<std::vector<std::string>> language_folds(std::vector<std::string> languages,
                                                     std::uint64_t seed) {
  std::sort(languages.begin(), languages.end());
  languages.erase(std::unique(languages.begin(), languages.end()), languages.end());
  if (languages.size() < 3)
    throw FoldError("cross-validation needs at least 3 training languages, got " +
                    std::to_string(languages.size()));
  std::mt19937_64 rng(seed);
  std::shuffle(languages.begin(), languages.end(), rng);
  std::vector<std::vector<std::string>> folds(3);
  for (std::size_t i = 0; i < languages.size(); ++i) folds[i % 3].push_back(languages[i]);
  return folds;
}

CvResult cross_validate(const std::map<std::string, TrainingSet>& by_language,
                        const HyperGrid& grid, std::uint64_t seed, unsigned workers) {
  std::vector<std::string> names;
  for (const auto& [name, _] : by_language) names.push_back(name);
  CvResult result;
  result.folds = language_folds(names, seed);
  result.stages = grid.stages;
  if (grid.learning_rates.empty() || grid.losses.empty())
    throw UsageError("hyperparameter grid is empty");

  struct Point {
    double lr;
    LossKind loss;
  };
  std::vector<Point> points;
  for (double lr : grid.learning_rates)
    for (LossKind loss : grid.losses) points.push_back({lr, loss});

  auto gather = [&](auto&& keep) {
    TrainingSet out;
    for (const auto& [name, set] : by_language)
      if (keep(name)) {
        out.features.insert(out.features.end(), set.features.begin(), set.features.end());
        out.targets.insert(out.targets.end(), set.targets.begin(), set.targets.end());
      }
    return out;
  };
  std::vector<TrainingSet> train_sets, test_sets;
  for (const auto& fold : result.folds) {
    auto in_fold = [&](const std::string& n) {
      return std::find(fold.begin(), fold.end(), n) != fold.end();
    };
    train_sets.push_back(gather([&](const std::string& n) { return !in_fold(n); }));
    test_sets.push_back(gather(in_fold));
  }

  auto evaluate = [&](const Point& p) {
    double total = 0.0;
    for (std::size_t k = 0; k < result.folds.size(); ++k) {
      BoostOptions opt;
      opt.loss = p.loss;
      opt.learning_rate = p.lr;
      opt.stages = grid.stages;
      opt.seed = seed;
      const auto model = fit(train_sets[k].features, train_sets[k].targets, opt);
      std::vector<double> preds;
      for (const auto& f : test_sets[k].features) preds.push_back(model.predict(f));
      try {
        total += pearson(preds, test_sets[k].targets);
      } catch (const UndefinedCorrelationError&) {
      } catch (const DegenerateInputError&) {
      }
    }
    return total / static_cast<double>(result.folds.size());
  };

  std::vector<double> scores(points.size());
  const unsigned n_workers =
      std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(points.size())));
  if (n_workers <= 1) {
    for (std::size_t i = 0; i < points.size(); ++i) scores[i] = evaluate(points[i]);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(n_workers);
    for (unsigned w = 0; w < n_workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < points.size(); i += n_workers) scores[i] = evaluate(points[i]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::size_t best = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    result.scores.push_back({points[i].lr, points[i].loss, scores[i]});
    if (scores[i] > scores[best]) best = i;
  }
  result.learning_rate = points[best].lr;
  result.loss = points[best].loss;
  return result;
}

// ---------------------------------------------------------------------------

std::string model_to_json(const EstimatorModel& model) {
  using nlohmann::ordered_json;
  const auto& r = model.regressor;
  ordered_json j;
  j["format"] = "xling-estimator";
  j["version"] = EstimatorModel::kVersion;
  j["loss"] = loss_name(r.loss);
  j["learning_rate"] = r.learning_rate;
  j["sampling"] = sampling_name(r.sampling);
  j["seed"] = r.seed;
  auto columns = ordered_json::array();
  for (const auto& n : feature_names()) columns.push_back(n);
  columns.push_back("era_missing");
  columns.push_back("drift_missing");
  j["columns"] = columns;
  j["impute"] = model.impute;
  j["mean"] = r.mean;
  j["scale"] = r.scale;
  auto stages = ordered_json::array();
  for (const auto& s : r.stages)
    stages.push_back({{"weight", s.weight},
                      {"intercept", s.learner.intercept},
                      {"coef", s.learner.coef}});
  j["stages"] = stages;
  return j.dump(2);
}

EstimatorModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("estimator model: ") + e.what());
  }
  try {
    if (j.at("format") != "xling-estimator") throw FormatError("not an estimator model");
    if (j.at("version").get<int>() != EstimatorModel::kVersion)
      throw FormatError("unsupported estimator model version " + j.at("version").dump());
    EstimatorModel m;
    auto& r = m.regressor;
    r.loss = parse_loss(j.at("loss").get<std::string>());
    r.learning_rate = j.at("learning_rate").get<double>();
    r.sampling = parse_sampling(j.at("sampling").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    m.impute = j.at("impute").get<std::array<double, kFeatureCount>>();
    r.mean = j.at("mean").get<std::vector<double>>();
    r.scale = j.at("scale").get<std::vector<double>>();
    if (r.mean.size() != kDesignWidth || r.scale.size() != kDesignWidth)
      throw FormatError("estimator model has the wrong feature width");
    for (const auto& s : j.at("stages")) {
      BoostStage stage;
      stage.weight = s.at("weight").get<double>();
      stage.learner.intercept = s.at("intercept").get<double>();
      stage.learner.coef = s.at("coef").get<std::vector<double>>();
      if (stage.learner.coef.size() != kDesignWidth)
        throw FormatError("estimator stage has the wrong width");
      r.stages.push_back(std::move(stage));
    }
    if (r.stages.empty()) throw FormatError("estimator model has no stages");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("estimator model: ") + e.what());
  } catch (const UsageError& e) {
    throw FormatError(e.what());
  }
}

void save_model(const EstimatorModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << model_to_json(model) << '\n';
}

EstimatorModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

void write_features_tsv(std::ostream& out, std::span<const FeatureRow> rows) {
  out << "id\ttarget";
  for (const auto& n : feature_names()) out << '\t' << n;
  out << "\tmissing\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << r.id << '\t';
    if (std::isnan(r.target)) out << "nan";
    else out << r.target;
    for (double v : r.features.values) out << '\t' << v;
    out << '\t' << r.features.missing << '\n';
  }
}

std::vector<FeatureRow> read_features_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::vector<FeatureRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 || line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() != kFeatureCount + 3)
      throw ParseError(path.string(), line_no,
                       "expected " + std::to_string(kFeatureCount + 3) + " columns");
    FeatureRow r;
    r.id = cols[0];
    try {
      r.target = cols[1] == "nan" ? std::nan("") : std::stod(cols[1]);
      for (std::size_t j = 0; j < kFeatureCount; ++j) r.features.values[j] = std::stod(cols[j + 2]);
      r.features.missing = static_cast<std::uint32_t>(std::stoul(cols.back()));
    } catch (const std::exception&) {
      throw ParseError(path.string(), line_no, "malformed number");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace xling

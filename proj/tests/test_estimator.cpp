#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "support/oracle.hpp"
#include "xling/errors.hpp"
#include "xling/estimator.hpp"
#include "xling/metrics.hpp"

using namespace xling;
using doctest::Approx;

namespace {

struct Regression {
  Matrix x;
  std::vector<double> y;
};

Regression random_regression(std::mt19937_64& rng, std::size_t n, std::size_t p) {
  std::normal_distribution<double> g(0.0, 1.0);
  Regression r;
  std::vector<double> truth(p);
  for (auto& t : truth) t = g(rng);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(p);
    double y = 0.5;
    for (std::size_t j = 0; j < p; ++j) {
      row[j] = 3.0 * g(rng) + static_cast<double>(j);
      y += truth[j] * row[j];
    }
    r.x.push_back(row);
    r.y.push_back(y + g(rng));
  }
  return r;
}

double mse(const BoostedRegressor& m, const Regression& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    const double e = m.predict(r.x[i]) - r.y[i];
    s += e * e;
  }
  return s / static_cast<double>(r.x.size());
}

FeatureVector features_from(std::initializer_list<std::pair<Feature, double>> values) {
  FeatureVector f;
  for (auto [k, v] : values) f[k] = v;
  return f;
}

}  // namespace

TEST_CASE("gap coefficients") {
  CHECK(mismatch_coefficient(0.2, 0.1) == Approx(0.2 / 0.101).epsilon(1e-15));
  CHECK(mismatch_coefficient(0.2, 0.1) == Approx(1.98019801980198).epsilon(1e-12));
  CHECK(internal_comparison_coefficient(0.3, 0.3) == 1.0);
  CHECK(internal_comparison_coefficient(-0.2, -0.2) == 1.0);
}

TEST_CASE("weighted median") {
  std::vector<double> three{0.1, 0.5, 0.9}, eq{1, 1, 1};
  CHECK(weighted_median(three, eq) == 0.5);
  std::vector<double> two{0.1, 0.9}, w13{1, 3};
  CHECK(weighted_median(two, w13) == 0.9);
  std::vector<double> one{0.3}, w1{2};
  CHECK(weighted_median(one, w1) == 0.3);

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + 2 * (rng() % 10);  // odd sizes have one median
    std::vector<double> v(n), w(n, 0.7);
    for (auto& x : v) x = std::uniform_real_distribution<double>(-5, 5)(rng);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    CHECK(weighted_median(v, w) == sorted[n / 2]);
  }
}

TEST_CASE("weighted least squares matches the normal equations") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t p = 1 + rng() % 5;
    auto r = random_regression(rng, 10 + rng() % 30, p);
    std::vector<double> w(r.x.size());
    for (auto& v : w) v = std::uniform_real_distribution<double>(0.05, 2.0)(rng);
    const auto oracle = oracle::normal_equations(r.x, r.y, w);
    const auto fit = weighted_least_squares(r.x, r.y, w);
    CHECK(std::abs(fit.intercept - oracle[0]) <= 1e-9);
    for (std::size_t j = 0; j < p; ++j) CHECK(std::abs(fit.coef[j] - oracle[j + 1]) <= 1e-9);

    // one boosting stage reduces to the same fit, expressed in raw units
    BoostOptions opt;
    opt.stages = 1;
    opt.initial_weights = w;
    const auto model = fit_boosted(r.x, r.y, opt);
    REQUIRE(model.stages.size() == 1);
    const auto raw = model.raw_learner(0);
    CHECK(std::abs(raw.intercept - oracle[0]) <= 1e-9);
    for (std::size_t j = 0; j < p; ++j) CHECK(std::abs(raw.coef[j] - oracle[j + 1]) <= 1e-9);
    for (const auto& row : r.x) CHECK(model.predict(row) == Approx(fit.predict(row)).epsilon(1e-9));
  }
}

TEST_CASE("realizable targets stop after one exact stage") {
  std::mt19937_64 rng(2);
  Matrix x;
  std::vector<double> y;
  for (int i = 0; i < 30; ++i) {
    const double c = std::uniform_real_distribution<double>(-1, 1)(rng);
    x.push_back({c, std::uniform_real_distribution<double>(0, 1)(rng)});
    y.push_back(3.0 * c);
  }
  BoostOptions opt;
  opt.stages = 20;
  const auto m = fit_boosted(x, y, opt);
  CHECK(m.stages.size() == 1);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(m.predict(x[i]) - y[i]) < 1e-9);
}

TEST_CASE("constant targets give a constant model") {
  Matrix x{{1.0}, {2.0}, {3.0}};
  std::vector<double> y{0.4, 0.4, 0.4};
  const auto m = fit_boosted(x, y, {});
  REQUIRE(m.stages.size() == 1);
  CHECK(m.predict(std::vector<double>{100.0}) == 0.4);
}

TEST_CASE("sample weights stay a distribution after every stage") {
  std::mt19937_64 rng(3);
  for (LossKind loss : {LossKind::Linear, LossKind::Square, LossKind::Exponential}) {
    auto r = random_regression(rng, 40, 3);
    for (auto& y : r.y) y = y * y;  // not realizable
    BoostOptions opt;
    opt.loss = loss;
    opt.learning_rate = 0.5;
    opt.stages = 15;
    std::vector<std::vector<double>> trace;
    const auto m = fit_boosted(r.x, r.y, opt, &trace);
    CHECK(trace.size() == m.stages.size());
    for (const auto& w : trace) {
      CHECK(std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) <= 1e-9);
      for (double v : w) CHECK(v >= 0.0);
    }
    for (const auto& s : m.stages) CHECK(s.weight > 0.0);
  }
}

TEST_CASE("boosting beats one linear fit on a piecewise-linear target") {
  Matrix x;
  std::vector<double> y;
  for (int i = 0; i < 20; ++i) {
    const double t = -1.0 + 2.0 * i / 19.0;
    x.push_back({t});
    y.push_back(t < 0.3 ? 0.2 * t : 0.06 + 2.0 * (t - 0.3));
  }
  Regression r{x, y};
  BoostOptions one;
  one.stages = 1;
  const double single = mse(fit_boosted(x, y, one), r);
  for (LossKind loss : {LossKind::Square, LossKind::Exponential}) {
    int wins = 0;
    double ratio = 0.0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      BoostOptions ten;
      ten.stages = 10;
      ten.loss = loss;
      ten.seed = seed;
      const double boosted = mse(fit_boosted(x, y, ten), r);
      wins += boosted < single;
      ratio += boosted / single / 50.0;
    }
    CHECK(wins > 25);
    CHECK(ratio < 1.0);
  }
}

TEST_CASE("resampling is reproducible and reweighting is seed-free") {
  std::mt19937_64 rng(6);
  auto r = random_regression(rng, 30, 2);
  for (auto& v : r.y) v = std::abs(v);
  BoostOptions opt;
  opt.stages = 10;
  opt.seed = 4;
  const auto a = fit_boosted(r.x, r.y, opt);
  const auto b = fit_boosted(r.x, r.y, opt);
  for (const auto& row : r.x) CHECK(a.predict(row) == b.predict(row));
  opt.sampling = Sampling::Reweight;
  const auto c = fit_boosted(r.x, r.y, opt);
  opt.seed = 5;
  const auto d = fit_boosted(r.x, r.y, opt);
  for (const auto& row : r.x) CHECK(c.predict(row) == d.predict(row));
}

TEST_CASE("first stage respects weighted duplicates and column order") {
  std::mt19937_64 rng(8);
  auto r = random_regression(rng, 25, 3);
  BoostOptions opt;
  opt.stages = 1;
  const auto base = fit_boosted(r.x, r.y, opt);

  // duplicate sample 0 and halve both copies' weight
  Regression dup = r;
  dup.x.push_back(r.x[0]);
  dup.y.push_back(r.y[0]);
  BoostOptions dup_opt = opt;
  dup_opt.initial_weights.assign(dup.x.size(), 1.0);
  dup_opt.initial_weights[0] = dup_opt.initial_weights.back() = 0.5;
  const auto with_dup = fit_boosted(dup.x, dup.y, dup_opt);

  // reverse the columns
  Matrix reversed;
  for (auto row : r.x) {
    std::reverse(row.begin(), row.end());
    reversed.push_back(row);
  }
  const auto rev = fit_boosted(reversed, r.y, opt);
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    CHECK(with_dup.predict(r.x[i]) == Approx(base.predict(r.x[i])).epsilon(1e-9));
    CHECK(rev.predict(reversed[i]) == Approx(base.predict(r.x[i])).epsilon(1e-9));
  }
}

TEST_CASE("feature extraction") {
  // pivot words sit in both corpora; "old" words keep their neighbors,
  // "new" words change context completely between the two corpora
  auto ref = make_corpus("en", "xx",
                         {{"alpha", "beta", "gamma"}, {"alpha", "beta"}, {"delta", "eps"}, {"gamma"}},
                         {{"a1", "b1"}, {"a1"}, {"d1", "e1"}, {"g1"}});
  auto aux = make_corpus("fr", "en", {{"x"}, {"y"}},
                         {{"alpha", "beta", "gamma"}, {"delta", "zeta", "eps"}});
  auto index = build_index(ref);
  BilingualDictionary dict;
  dict.add("alpha", "a1");
  EraLexicon era;
  era.set("alpha", 1800);
  era.set("beta", 1846);
  era.set("delta", 1900);
  era.set("eps", 1946);

  ExtractionContext ctx;
  ctx.ref_index = &index;
  ctx.dict = &dict;
  ctx.era = &era;
  ctx.ref_corpus = &ref;
  ctx.aux_corpus = &aux;

  MultilingualTopic old_topic{"en", "xx", {"alpha", "beta"}, {"a1", "b1"}};
  MultilingualTopic new_topic{"en", "xx", {"delta", "eps"}, {"d1", "e1"}};
  const auto fo = extract_features(old_topic, ctx);
  const auto fn = extract_features(new_topic, ctx);
  CHECK(fo[Feature::EraMean] == 1823.0);
  CHECK(fo[Feature::EraStd] == 23.0);
  CHECK(fn[Feature::EraMean] == 1923.0);
  CHECK(fo[Feature::Cardinality] == 2.0);
  CHECK(fo[Feature::Mta] == 0.5);
  CHECK(fo[Feature::TwcA] == 1.0);
  CHECK(fo[Feature::Cnpmi] == Approx(cnpmi(index, old_topic)));
  CHECK(fo[Feature::McAB] ==
        Approx(mismatch_coefficient(fo[Feature::Cnpmi],
                                    topic_npmi(index, old_topic.words_a, Side::A, 2))));
  CHECK(fo.missing == 0);

  // alpha: ref context {beta, gamma, beta}, aux context {beta, gamma}
  const double alpha_sim = cosine_similarity(context_vector(ref, Side::A, "alpha"),
                                             context_vector(aux, Side::B, "alpha"));
  const double beta_sim = cosine_similarity(context_vector(ref, Side::A, "beta"),
                                            context_vector(aux, Side::B, "beta"));
  CHECK(fo[Feature::DriftMean] == Approx((alpha_sim + beta_sim) / 2));
  CHECK(fn[Feature::DriftMean] < fo[Feature::DriftMean]);

  SUBCASE("missing resources are masked") {
    ExtractionContext bare;
    bare.ref_index = &index;
    auto f = extract_features(old_topic, bare);
    CHECK(f.is_missing(Feature::Mta));
    CHECK(f.is_missing(Feature::EraMean));
    CHECK(f.is_missing(Feature::DriftStd));
    CHECK_FALSE(f.is_missing(Feature::Cnpmi));
    CHECK(f[Feature::EraMean] == 0.0);
    MultilingualTopic unknown{"en", "xx", {"q1", "q2"}, {"r1", "r2"}};
    CHECK(extract_features(unknown, ctx).is_missing(Feature::EraMean));
  }
  SUBCASE("batch and threaded extraction agree with single calls") {
    std::vector<MultilingualTopic> topics{old_topic, new_topic, old_topic};
    auto batch = extract_features(topics, ctx, 1);
    auto threaded = extract_features(topics, ctx, 3);
    CHECK(batch[0] == fo);
    CHECK(batch[1] == fn);
    CHECK(threaded == batch);
  }
  SUBCASE("cardinality below two") {
    MultilingualTopic tiny{"en", "xx", {"alpha"}, {"a1"}};
    CHECK_THROWS_AS(extract_features(tiny, ctx), DegenerateInputError);
  }
}

TEST_CASE("era imputation uses the training mean") {
  std::vector<FeatureVector> fs;
  std::vector<double> ys;
  for (int i = 0; i < 6; ++i) {
    auto f = features_from({{Feature::Cnpmi, 0.1 * i}, {Feature::EraMean, 1800.0 + 20 * i}});
    if (i == 5) f.mark_missing(Feature::EraMean);
    fs.push_back(f);
    ys.push_back(0.1 * i);
  }
  const auto model = fit(fs, ys, {});
  CHECK(model.impute[static_cast<std::size_t>(Feature::EraMean)] == Approx(1840.0));
  const auto row = design_row(fs[5], model.impute);
  CHECK(row[static_cast<std::size_t>(Feature::EraMean)] == Approx(1840.0));
  CHECK(row[kFeatureCount] == 1.0);
  CHECK(row[kFeatureCount + 1] == 0.0);
}

TEST_CASE("model JSON and feature TSV round trips") {
  testing_support::TempDir dir;
  std::mt19937_64 rng(5);
  std::vector<FeatureRow> rows;
  std::vector<FeatureVector> fs;
  std::vector<double> ys;
  for (int i = 0; i < 30; ++i) {
    FeatureRow r;
    r.id = "t" + std::to_string(i);
    for (auto& v : r.features.values) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    if (i % 4 == 0) r.features.mark_missing(Feature::DriftMean);
    r.target = r.features.values[1] * 2 + std::sin(r.features.values[2] * 3);
    rows.push_back(r);
    fs.push_back(r.features);
    ys.push_back(r.target);
  }
  rows[3].target = std::nan("");
  BoostOptions opt;
  opt.loss = LossKind::Square;
  opt.learning_rate = 0.5;
  opt.stages = 8;
  const auto model = fit(fs, ys, opt);
  save_model(model, dir.path() / "m.json");
  const auto back = load_model(dir.path() / "m.json");
  CHECK(back.regressor.loss == LossKind::Square);
  CHECK(back.regressor.stages.size() == model.regressor.stages.size());
  for (const auto& f : fs) CHECK(back.predict(f) == Approx(model.predict(f)).epsilon(1e-15));
  CHECK_THROWS_AS(model_from_json("{\"format\":\"xling-estimator\",\"version\":99}"), FormatError);
  CHECK_THROWS_AS(model_from_json("not json"), FormatError);

  {
    std::ofstream out(dir.path() / "f.tsv");
    write_features_tsv(out, rows);
  }
  const auto read = read_features_tsv(dir.path() / "f.tsv");
  REQUIRE(read.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(read[i].id == rows[i].id);
    CHECK(read[i].features == rows[i].features);
  }
  CHECK(std::isnan(read[3].target));
  CHECK(read[4].target == rows[4].target);
  CHECK_THROWS_AS(read_features_tsv(dir.file("bad.tsv", "h\nrow\tonly\n")), ParseError);
}

TEST_CASE("language folds") {
  auto folds = language_folds({"de", "fr", "sv", "zh"}, 11);
  REQUIRE(folds.size() == 3);
  CHECK(folds[0].size() == 2);
  CHECK(folds[1].size() == 1);
  CHECK(folds[2].size() == 1);
  std::vector<std::string> all;
  for (const auto& f : folds) all.insert(all.end(), f.begin(), f.end());
  std::sort(all.begin(), all.end());
  CHECK(all == std::vector<std::string>{"de", "fr", "sv", "zh"});
  CHECK(language_folds({"zh", "sv", "fr", "de"}, 11) == folds);
  CHECK_THROWS_AS(language_folds({"de", "fr"}, 1), FoldError);
}

namespace {

std::map<std::string, TrainingSet> pool(std::uint64_t seed, auto&& target) {
  std::mt19937_64 rng(seed);
  std::map<std::string, TrainingSet> out;
  for (const std::string lang : {"de", "fr", "sv", "zh", "am"}) {
    TrainingSet set;
    for (int i = 0; i < 40; ++i) {
      FeatureVector f;
      for (auto& v : f.values) v = std::uniform_real_distribution<double>(-1, 1)(rng);
      set.targets.push_back(target(f, rng));
      set.features.push_back(f);
    }
    out[lang] = std::move(set);
  }
  return out;
}

}  // namespace

TEST_CASE("cross validation") {
  auto data = pool(1, [](const FeatureVector& f, std::mt19937_64& rng) {
    return f[Feature::Cnpmi] + 0.1 * std::normal_distribution<double>()(rng);
  });

  SUBCASE("a single grid point is returned as is") {
    HyperGrid grid{{0.5}, {LossKind::Exponential}, 5};
    auto r = cross_validate(data, grid, 3);
    CHECK(r.learning_rate == 0.5);
    CHECK(r.loss == LossKind::Exponential);
    REQUIRE(r.scores.size() == 1);
    CHECK(r.scores[0].mean_pearson > 0.8);
  }
  SUBCASE("the best grid point by mean held-out correlation wins") {
    HyperGrid grid;
    grid.stages = 10;
    auto r = cross_validate(data, grid, 3);
    CHECK(r.scores.size() == 9);
    double best = -2;
    for (const auto& s : r.scores) best = std::max(best, s.mean_pearson);
    const auto chosen = std::find_if(r.scores.begin(), r.scores.end(), [&](const GridScore& s) {
      return s.learning_rate == r.learning_rate && s.loss == r.loss;
    });
    CHECK(chosen->mean_pearson == best);
    auto threaded = cross_validate(data, grid, 3, 4);
    CHECK(threaded.learning_rate == r.learning_rate);
    CHECK(threaded.loss == r.loss);
  }
  SUBCASE("square loss is selected when it dominates") {
    // targets quadratic in one feature; over several pools, whenever square
    // loss has the strictly best held-out correlation it must be chosen
    int dominated = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto quad = pool(seed, [](const FeatureVector& f, std::mt19937_64& rng) {
        const double c = f[Feature::Cnpmi];
        return c * c + 0.3 * std::normal_distribution<double>()(rng);
      });
      HyperGrid grid{{1.0}, {LossKind::Linear, LossKind::Square, LossKind::Exponential}, 50};
      auto r = cross_validate(quad, grid, seed);
      const double lin = r.scores[0].mean_pearson, sq = r.scores[1].mean_pearson,
                   ex = r.scores[2].mean_pearson;
      if (sq > lin && sq > ex) {
        ++dominated;
        CHECK(r.loss == LossKind::Square);
      } else {
        CHECK(r.loss != LossKind::Square);
      }
    }
    CHECK(dominated >= 1);
  }
  SUBCASE("fewer than three languages") {
    std::map<std::string, TrainingSet> two{{"de", data["de"]}, {"fr", data["fr"]}};
    CHECK_THROWS_AS(cross_validate(two, HyperGrid{}, 1), FoldError);
  }
}

TEST_CASE("old, drifting topics outrank recent ones at equal coverage") {
  // training data where the large-reference score rises with word age and
  // drift similarity once coverage is low
  std::mt19937_64 rng(17);
  std::vector<FeatureVector> fs;
  std::vector<double> ys;
  for (int i = 0; i < 80; ++i) {
    FeatureVector f;
    const double twc = std::uniform_real_distribution<double>(0.2, 1.0)(rng);
    const double era = std::uniform_real_distribution<double>(1500, 2000)(rng);
    const double drift = std::uniform_real_distribution<double>(0, 1)(rng);
    f[Feature::TwcA] = twc;
    f[Feature::EraMean] = era;
    f[Feature::DriftMean] = drift;
    fs.push_back(f);
    ys.push_back(0.3 * twc + 0.3 * (2000 - era) / 500 + 0.3 * drift);
  }
  BoostOptions opt;
  opt.stages = 20;
  const auto model = fit(fs, ys, opt);
  FeatureVector old_topic, recent_topic;
  old_topic[Feature::TwcA] = recent_topic[Feature::TwcA] = 0.25;
  old_topic[Feature::EraMean] = 1823;
  old_topic[Feature::DriftMean] = 0.9;
  recent_topic[Feature::EraMean] = 1923;
  recent_topic[Feature::DriftMean] = 0.1;
  CHECK(model.predict(old_topic) > model.predict(recent_topic));
}

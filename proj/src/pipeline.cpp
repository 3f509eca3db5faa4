#include "xling/pipeline.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "xling/cooccur.hpp"
#include "xling/corpus.hpp"
#include "xling/downstream.hpp"
#include "xling/errors.hpp"
#include "xling/estimator.hpp"
#include "xling/experiments.hpp"
#include "xling/lexicon.hpp"
#include "xling/metrics.hpp"
#include "xling/plm.hpp"
#include "xling/topic.hpp"

#ifndef XLING_VERSION
#define XLING_VERSION "0.0.0"
#endif

namespace xling {

namespace fs = std::filesystem;

std::string tool_version() { return XLING_VERSION; }

namespace {

const char* const kAlphaDeviation =
    "alpha: asymmetric Dirichlet prior re-estimated by a fixed-point maximum-likelihood "
    "update every optimize-interval sweeps";
const char* const kBoostDeviation =
    "boosting: stages after the first fit a seeded weighted bootstrap sample of the "
    "training set";
const char* const kClassifierDeviation =
    "classifier: one-vs-rest logistic regression by gradient descent, threshold 0.5, "
    "micro-averaged F1";

std::vector<ParameterInfo> language_params() {
  return {{"lang-a", "", "language code of the A side"},
          {"lang-b", "", "language code of the B side"}};
}

std::vector<ParameterInfo> plm_params() {
  return {{"topics", "20", "number of topics"},
          {"alpha", "0.1", "initial symmetric document-topic prior"},
          {"beta", "0.01", "topic-word prior"},
          {"iterations", "1000", "Gibbs sweeps per chain"},
          {"chains", "5", "independent chains; the best final log joint is kept"},
          {"optimize-interval", "50", "sweeps between alpha updates (0 disables)"},
          {"average-last", "0", "average counts over the last N sweeps"},
          {"max-cells", "268435456", "bound on topics * vocabulary size"}};
}

template <typename... Lists>
std::vector<ParameterInfo> concat(Lists... lists) {
  std::vector<ParameterInfo> out;
  (out.insert(out.end(), lists.begin(), lists.end()), ...);
  return out;
}

const std::vector<KindInfo>& kinds_table() {
  static const std::vector<KindInfo> table = [] {
    const PathInfo corpus_a{"corpus-a", true, "A side of the training corpus, one document per line"};
    const PathInfo corpus_b{"corpus-b", true, "B side of the training corpus, aligned by line"};
    const PathInfo ref_a{"ref-a", true, "A side of the reference corpus"};
    const PathInfo ref_b{"ref-b", true, "B side of the reference corpus"};
    const PathInfo topics{"topics", true, "topic file (JSON)"};
    const PathInfo dict{"dict", false, "bilingual dictionary TSV"};
    const ParameterInfo prune{"prune", "0.3", "drop types in more than this fraction of documents"};
    const ParameterInfo ref_prune{"ref-prune", "1.0", "pruning threshold for reference corpora"};
    const ParameterInfo index_cache{"index-cache", "", "binary index cache file"};

    std::vector<KindInfo> t;
    t.push_back({"index", "build and cache a co-occurrence index",
                 {corpus_a, corpus_b},
                 {{"index", true, "index cache file to write"}},
                 concat(language_params(), std::vector<ParameterInfo>{ref_prune})});
    t.push_back({"score", "score every topic with every metric",
                 {topics, ref_a, ref_b, dict},
                 {},
                 concat(language_params(),
                        std::vector<ParameterInfo>{ref_prune, index_cache,
                                                   {"cardinality", "", "top words per topic (default: all)"}})});
    t.push_back({"train-plm", "train a document-links topic model",
                 {corpus_a, corpus_b},
                 {{"model-dir", true, "directory for topics.json, theta_a.tsv, theta_b.tsv, phi.bin"}},
                 concat(language_params(), plm_params(),
                        std::vector<ParameterInfo>{prune,
                                                   {"link-fraction", "1.0", "fraction of pairs sharing theta"},
                                                   {"export-words", "20", "words per topic in topics.json"}})});
    t.push_back({"train-estimator", "cross-validate and fit the coherence estimator",
                 {{"train-dir", true, "directory of <language>.tsv feature files with targets"}},
                 {{"model", true, "estimator model JSON to write"}},
                 {{"learning-rates", "0.1,0.5,1.0", "grid of learning rates"},
                  {"losses", "linear,square,exponential", "grid of loss functions"},
                  {"stages", "50", "boosting stages"},
                  {"sampling", "resample", "resample or reweight"}}});
    t.push_back({"estimate", "predict coherence for topics or feature rows",
                 {{"model", true, "estimator model JSON"},
                  {"features", false, "feature TSV; alternative to topics + reference"},
                  {"topics", false, "topic file (JSON)"},
                  {"ref-a", false, "A side of the small reference corpus"},
                  {"ref-b", false, "B side of the small reference corpus"},
                  dict,
                  {"era", false, "word era lexicon TSV"},
                  {"aux-a", false, "A side of a large auxiliary corpus (drift)"},
                  {"aux-b", false, "B side of a large auxiliary corpus (drift)"}},
                 {{"features-out", false, "write extracted features TSV here"}},
                 concat(language_params(),
                        std::vector<ParameterInfo>{ref_prune,
                                                   {"pivot", "a", "side whose words carry era and drift (a or b)"},
                                                   {"drift-window", "5", "context window for drift"}})});
    t.push_back({"classify", "crosslingual document classification on theta features",
                 {{"theta-a", true, "theta TSV of the A side"},
                  {"theta-b", true, "theta TSV of the B side"},
                  {"labels", true, "label TSV (doc-id, comma-separated categories)"}},
                 {},
                 {{"label-count", "7", "number of most frequent categories kept"},
                  {"l2", "0.001", "L2 regularization strength"},
                  {"epochs", "1000", "maximum gradient descent epochs"},
                  {"test-fraction", "0.5", "held-out share of documents (0: train and test on all)"}}});
    t.push_back({"sweep-cardinality", "cnpmi and mta across topic cardinalities",
                 {topics, ref_a, ref_b, dict},
                 {},
                 concat(language_params(),
                        std::vector<ParameterInfo>{ref_prune, index_cache,
                                                   {"cardinalities", "10,20,30,40,50", "cardinality grid"}})});
    t.push_back({"sweep-links", "train at several link fractions and score each model",
                 {corpus_a, corpus_b, {"ref-a", false, "A side of the reference (default: training corpus)"},
                  {"ref-b", false, "B side of the reference (default: training corpus)"}},
                 {},
                 concat(language_params(), plm_params(),
                        std::vector<ParameterInfo>{prune, ref_prune,
                                                   {"fractions", "0,0.2,0.4,0.6,0.8,1", "link fraction grid"},
                                                   {"cardinality", "10", "words per topic scored"}})});
    t.push_back({"sweep-refsize", "score fixed topics against subsampled references",
                 {topics, ref_a, ref_b},
                 {},
                 concat(language_params(),
                        std::vector<ParameterInfo>{ref_prune,
                                                   {"fractions", "0.2,0.4,0.6,0.8,1", "reference fraction grid"},
                                                   {"cardinality", "10", "words per topic scored"},
                                                   {"tolerance", "0.02", "deviation above which a row is flagged"}})});
    return t;
  }();
  return table;
}

// ---- parameter access ----------------------------------------------------

std::string param(const ExperimentSpec& spec, const std::string& key) {
  if (auto it = spec.parameters.find(key); it != spec.parameters.end()) return it->second;
  for (const auto& p : kind_info(spec.kind).parameters)
    if (p.name == key) return p.default_value;
  throw UsageError("parameter '" + key + "' does not apply to " + spec.kind);
}

double to_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v))
    throw UsageError("parameter '" + key + "': '" + text + "' is not a number");
  return v;
}

std::size_t to_size(const std::string& key, const std::string& text) {
  const double v = to_double(key, text);
  if (v < 0 || v != std::floor(v))
    throw UsageError("parameter '" + key + "': '" + text + "' is not a non-negative integer");
  return static_cast<std::size_t>(v);
}

double num(const ExperimentSpec& spec, const std::string& key) {
  return to_double(key, param(spec, key));
}
std::size_t count(const ExperimentSpec& spec, const std::string& key) {
  return to_size(key, param(spec, key));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> number_list(const ExperimentSpec& spec, const std::string& key) {
  std::vector<double> out;
  for (const auto& s : split_list(param(spec, key))) out.push_back(to_double(key, s));
  if (out.empty()) throw UsageError("parameter '" + key + "' is empty");
  return out;
}

bool has_input(const ExperimentSpec& spec, const std::string& name) {
  return spec.inputs.count(name) > 0;
}
const fs::path& input(const ExperimentSpec& spec, const std::string& name) {
  auto it = spec.inputs.find(name);
  if (it == spec.inputs.end()) throw UsageError(spec.kind + " requires --" + name);
  return it->second;
}
const fs::path& output(const ExperimentSpec& spec, const std::string& name) {
  auto it = spec.outputs.find(name);
  if (it == spec.outputs.end()) throw UsageError(spec.kind + " requires --" + name);
  return it->second;
}

std::pair<std::string, std::string> languages(const ExperimentSpec& spec) {
  auto a = param(spec, "lang-a"), b = param(spec, "lang-b");
  return {a.empty() ? "a" : a, b.empty() ? "b" : b};
}

std::vector<MultilingualTopic> topics_input(const ExperimentSpec& spec) {
  const auto a = param(spec, "lang-a"), b = param(spec, "lang-b");
  if (!a.empty() && !b.empty()) return load_topics(input(spec, "topics"), std::make_pair(a, b));
  return load_topics(input(spec, "topics"));
}

CorpusPair reference_corpus(const ExperimentSpec& spec, const std::string& lang_a,
                            const std::string& lang_b) {
  return load_parallel_corpus(input(spec, "ref-a"), input(spec, "ref-b"), lang_a, lang_b,
                              num(spec, "ref-prune"));
}

CooccurrenceIndex reference_index(const ExperimentSpec& spec, const CorpusPair& ref,
                                  std::vector<std::string>& notes) {
  const auto cache = param(spec, "index-cache");
  const auto sum = checksum(ref);
  if (!cache.empty()) {
    if (auto loaded = load_index(cache, sum)) {
      notes.push_back("index loaded from cache");
      return std::move(*loaded);
    }
  }
  auto index = build_index(ref, std::nullopt, spec.workers);
  if (!cache.empty()) save_index(index, cache, sum);
  return index;
}

PlmConfig plm_config(const ExperimentSpec& spec) {
  PlmConfig config;
  for (const auto& p : plm_params()) apply_setting(config, p.name, param(spec, p.name));
  config.seed = spec.seed;
  config.workers = spec.workers;
  return config;
}

// ---- experiments ---------------------------------------------------------

void run_index(const ExperimentSpec& spec, Report& r) {
  const auto [la, lb] = languages(spec);
  const auto corpus = load_parallel_corpus(input(spec, "corpus-a"), input(spec, "corpus-b"), la,
                                           lb, num(spec, "ref-prune"));
  const auto index = build_index(corpus, std::nullopt, spec.workers);
  save_index(index, output(spec, "index"), checksum(corpus));
  char sum[17];
  std::snprintf(sum, sizeof sum, "%016" PRIx64, checksum(corpus));
  r.columns = {"key", "value"};
  r.rows = {{"documents", std::to_string(index.doc_count())},
            {"vocabulary_a", std::to_string(corpus.vocab(Side::A).size())},
            {"vocabulary_b", std::to_string(corpus.vocab(Side::B).size())},
            {"tracked_a", std::to_string(index.tracked_tokens(Side::A))},
            {"tracked_b", std::to_string(index.tracked_tokens(Side::B))},
            {"pair_entries", std::to_string(index.pair_entries())},
            {"corpus_checksum", sum}};
}

void run_score(const ExperimentSpec& spec, Report& r) {
  auto topics = topics_input(spec);
  if (const auto c = param(spec, "cardinality"); !c.empty()) {
    const auto n = to_size("cardinality", c);
    for (auto& t : topics) t = t.head(n);
  }
  const auto ref = reference_corpus(spec, topics[0].language_a, topics[0].language_b);
  const auto index = reference_index(spec, ref, r.notes);
  std::optional<BilingualDictionary> dict;
  if (has_input(spec, "dict")) dict = load_dictionary(input(spec, "dict"));
  const auto scores = score_topics(index, topics, dict ? &*dict : nullptr);
  r.columns = {"topic", "metric", "value"};
  for (const auto& s : scores)
    r.rows.push_back({std::to_string(s.topic_id), std::string(metric_name(s.metric)),
                      format_number(s.value)});
}

void run_train_plm(const ExperimentSpec& spec, Report& r) {
  r.deviations.push_back(kAlphaDeviation);
  const auto [la, lb] = languages(spec);
  const auto corpus =
      load_parallel_corpus(input(spec, "corpus-a"), input(spec, "corpus-b"), la, lb, num(spec, "prune"));
  auto config = plm_config(spec);
  apply_setting(config, "link-fraction", param(spec, "link-fraction"));
  validate(config);
  const auto out = train(corpus, config);
  const auto dir = output(spec, "model-dir");
  fs::create_directories(dir);
  const auto words = std::min({count(spec, "export-words"), corpus.vocab(Side::A).size(),
                               corpus.vocab(Side::B).size()});
  export_topics(out, words, dir / "topics.json");
  for (Side s : {Side::A, Side::B}) {
    std::ofstream f(dir / (s == Side::A ? "theta_a.tsv" : "theta_b.tsv"));
    write_theta_tsv(out, s, f);
    if (!f) throw Error("failed to write theta table in " + dir.string());
  }
  save_phi(out, dir / "phi.bin");
  r.columns = {"key", "value"};
  r.rows.push_back({"documents", std::to_string(corpus.doc_count())});
  r.rows.push_back({"topics", std::to_string(out.topics)});
  r.rows.push_back({"chosen_chain", std::to_string(out.chosen_chain)});
  for (std::size_t c = 0; c < out.chain_log_joint.size(); ++c)
    r.rows.push_back({"log_joint_chain_" + std::to_string(c), format_number(out.chain_log_joint[c])});
  for (std::size_t k = 0; k < out.alpha.size(); ++k)
    r.rows.push_back({"alpha_" + std::to_string(k), format_number(out.alpha[k])});
}

void run_train_estimator(const ExperimentSpec& spec, Report& r) {
  r.deviations.push_back(kBoostDeviation);
  const auto& dir = input(spec, "train-dir");
  std::map<std::string, TrainingSet> by_language;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".tsv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    auto& set = by_language[file.stem().string()];
    for (const auto& row : read_features_tsv(file)) {
      if (!std::isfinite(row.target))
        throw DegenerateInputError(file.string() + ": row '" + row.id + "' has no target");
      set.features.push_back(row.features);
      set.targets.push_back(row.target);
    }
  }
  HyperGrid grid;
  grid.learning_rates = number_list(spec, "learning-rates");
  grid.losses.clear();
  for (const auto& name : split_list(param(spec, "losses"))) grid.losses.push_back(parse_loss(name));
  if (grid.losses.empty()) throw UsageError("parameter 'losses' is empty");
  grid.stages = count(spec, "stages");
  const auto sampling = parse_sampling(param(spec, "sampling"));
  if (sampling == Sampling::Reweight) r.deviations.pop_back();

  const auto cv = cross_validate(by_language, grid, spec.seed, spec.workers);
  TrainingSet all;
  for (const auto& [lang, set] : by_language) {
    all.features.insert(all.features.end(), set.features.begin(), set.features.end());
    all.targets.insert(all.targets.end(), set.targets.begin(), set.targets.end());
  }
  BoostOptions options;
  options.learning_rate = cv.learning_rate;
  options.loss = cv.loss;
  options.stages = cv.stages;
  options.sampling = sampling;
  options.seed = spec.seed;
  const auto model = fit(all.features, all.targets, options);
  save_model(model, output(spec, "model"));

  for (std::size_t f = 0; f < cv.folds.size(); ++f) {
    std::string langs;
    for (const auto& l : cv.folds[f]) langs += (langs.empty() ? "" : ",") + l;
    r.notes.push_back("fold " + std::to_string(f) + ": " + langs);
  }
  r.notes.push_back("selected: learning_rate=" + format_number(cv.learning_rate) +
                    " loss=" + loss_name(cv.loss) +
                    " stages_fitted=" + std::to_string(model.regressor.stages.size()));
  r.columns = {"learning_rate", "loss", "mean_pearson"};
  for (const auto& s : cv.scores)
    r.rows.push_back({format_number(s.learning_rate), loss_name(s.loss), format_number(s.mean_pearson)});
}

void run_estimate(const ExperimentSpec& spec, Report& r) {
  r.deviations.push_back(kBoostDeviation);
  const auto model = load_model(input(spec, "model"));
  std::vector<FeatureRow> rows;
  if (has_input(spec, "features")) {
    if (has_input(spec, "topics"))
      throw UsageError("estimate takes either --features or --topics, not both");
    rows = read_features_tsv(input(spec, "features"));
  } else {
    const auto topics = topics_input(spec);
    const auto& la = topics[0].language_a;
    const auto& lb = topics[0].language_b;
    const auto ref = reference_corpus(spec, la, lb);
    const auto index = build_index(ref, restriction_for(topics), spec.workers);
    std::optional<BilingualDictionary> dict;
    std::optional<EraLexicon> era;
    std::optional<CorpusPair> aux;
    if (has_input(spec, "dict")) dict = load_dictionary(input(spec, "dict"));
    if (has_input(spec, "era")) era = load_era_lexicon(input(spec, "era"));
    if (has_input(spec, "aux-a") != has_input(spec, "aux-b"))
      throw UsageError("--aux-a and --aux-b go together");
    if (has_input(spec, "aux-a"))
      aux = load_parallel_corpus(input(spec, "aux-a"), input(spec, "aux-b"), la, lb,
                                 num(spec, "ref-prune"));
    ExtractionContext ctx;
    ctx.ref_index = &index;
    ctx.dict = dict ? &*dict : nullptr;
    ctx.era = era ? &*era : nullptr;
    ctx.ref_corpus = &ref;
    ctx.aux_corpus = aux ? &*aux : nullptr;
    const auto pivot = param(spec, "pivot");
    if (pivot != "a" && pivot != "b") throw UsageError("parameter 'pivot' must be a or b");
    ctx.pivot = pivot == "a" ? Side::A : Side::B;
    ctx.drift_window = static_cast<int>(count(spec, "drift-window"));
    const auto features = extract_features(topics, ctx, spec.workers);
    for (std::size_t t = 0; t < topics.size(); ++t)
      rows.push_back({std::to_string(t), std::nan(""), features[t]});
    if (auto it = spec.outputs.find("features-out"); it != spec.outputs.end()) {
      std::ofstream f(it->second);
      write_features_tsv(f, rows);
      if (!f) throw Error("failed to write " + it->second.string());
    }
  }
  r.columns = {"id", "estimate"};
  for (const auto& row : rows) r.rows.push_back({row.id, format_number(predict(model, row.features))});
}

void run_classify(const ExperimentSpec& spec, Report& r) {
  r.deviations.push_back(kClassifierDeviation);
  const auto labels = load_labels(input(spec, "labels"));
  auto theta_a = attach_labels(load_thetas(input(spec, "theta-a")), labels);
  auto theta_b = attach_labels(load_thetas(input(spec, "theta-b")), labels);

  std::map<std::string, std::size_t> pos_b;
  for (std::size_t i = 0; i < theta_b.size(); ++i) pos_b[theta_b.ids[i]] = i;
  std::vector<std::pair<std::size_t, std::size_t>> common;
  for (std::size_t i = 0; i < theta_a.size(); ++i)
    if (auto it = pos_b.find(theta_a.ids[i]); it != pos_b.end()) common.push_back({i, it->second});
  if (common.empty()) throw DegenerateInputError("no labeled documents appear in both theta tables");

  std::vector<std::vector<std::string>> raw;
  for (const auto& [i, j] : common) raw.push_back(theta_a.labels[i]);
  const auto requested = count(spec, "label-count");
  const auto selection = select_labels(raw, requested);
  if (selection.reduced)
    r.notes.push_back("warning: only " + std::to_string(selection.universe.size()) +
                      " categories available; " + std::to_string(requested) + " requested");
  std::string universe;
  for (const auto& l : selection.universe) universe += (universe.empty() ? "" : ",") + l;
  r.notes.push_back("labels: " + universe);

  const double test_fraction = num(spec, "test-fraction");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw UsageError("parameter 'test-fraction' must lie in [0, 1)");
  std::vector<std::size_t> order(common.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(order.size())));
  std::set<std::size_t> test_set(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));

  auto subset = [&](const LabeledThetaSet& src, bool side_a, bool test) {
    LabeledThetaSet out;
    for (std::size_t k = 0; k < common.size(); ++k) {
      if (n_test > 0 && test_set.count(k) != static_cast<std::size_t>(test)) continue;
      const auto idx = side_a ? common[k].first : common[k].second;
      out.ids.push_back(src.ids[idx]);
      out.thetas.push_back(src.thetas[idx]);
      out.labels.push_back(src.labels[idx]);
    }
    return restrict_labels(out, selection.universe);
  };
  TrainOptions options;
  options.l2 = num(spec, "l2");
  options.max_epochs = count(spec, "epochs");
  options.workers = spec.workers;
  if (options.l2 < 0) throw UsageError("parameter 'l2' must be >= 0");

  r.columns = {"model", "f1"};
  for (bool a_to_b : {true, false}) {
    const auto& src = a_to_b ? theta_a : theta_b;
    const auto& dst = a_to_b ? theta_b : theta_a;
    const auto train_set = subset(src, a_to_b, false);
    const auto test_set_rows = subset(dst, !a_to_b, true);
    if (train_set.size() == 0) throw DegenerateInputError("no training documents keep a label");
    const auto classifier = train_classifier(train_set, selection.universe, options);
    const std::string id = a_to_b ? "a->b" : "b->a";
    r.rows.push_back({id, format_number(evaluate_f1(classifier, test_set_rows))});
  }
  r.notes.push_back("documents: " + std::to_string(common.size() - n_test) + " train, " +
                    std::to_string(n_test == 0 ? common.size() : n_test) + " test");
}

void run_sweep_cardinality(const ExperimentSpec& spec, Report& r) {
  const auto topics = topics_input(spec);
  const auto ref = reference_corpus(spec, topics[0].language_a, topics[0].language_b);
  const auto index = reference_index(spec, ref, r.notes);
  std::optional<BilingualDictionary> dict;
  if (has_input(spec, "dict")) dict = load_dictionary(input(spec, "dict"));
  std::vector<std::size_t> cs;
  for (const auto& s : split_list(param(spec, "cardinalities"))) cs.push_back(to_size("cardinalities", s));
  const auto rows = run_cardinality_sweep(index, topics, dict ? &*dict : nullptr, cs);
  r.columns = {"cardinality", "metric", "mean"};
  for (const auto& row : rows)
    r.rows.push_back({std::to_string(row.cardinality), row.metric, format_number(row.mean)});
}

void run_sweep_links(const ExperimentSpec& spec, Report& r) {
  r.deviations.push_back(kAlphaDeviation);
  const auto [la, lb] = languages(spec);
  const auto corpus =
      load_parallel_corpus(input(spec, "corpus-a"), input(spec, "corpus-b"), la, lb, num(spec, "prune"));
  if (has_input(spec, "ref-a") != has_input(spec, "ref-b"))
    throw UsageError("--ref-a and --ref-b go together");
  std::optional<CorpusPair> ref;
  if (has_input(spec, "ref-a")) {
    ref = reference_corpus(spec, la, lb);
  } else {
    ref = load_parallel_corpus(input(spec, "corpus-a"), input(spec, "corpus-b"), la, lb,
                               num(spec, "ref-prune"));
    r.notes.push_back("reference: training corpus");
  }
  const auto index = build_index(*ref, std::nullopt, spec.workers);
  const auto rows = run_link_sweep(corpus, index, plm_config(spec), number_list(spec, "fractions"),
                                   count(spec, "cardinality"), spec.workers);
  r.columns = {"fraction", "mean_cnpmi"};
  for (const auto& row : rows) r.rows.push_back({format_number(row.fraction), format_number(row.mean_cnpmi)});
}

void run_sweep_refsize(const ExperimentSpec& spec, Report& r) {
  const auto topics = topics_input(spec);
  const auto ref = reference_corpus(spec, topics[0].language_a, topics[0].language_b);
  const double tolerance = num(spec, "tolerance");
  const auto rows = run_reference_size_sweep(ref, topics, number_list(spec, "fractions"), spec.seed,
                                             count(spec, "cardinality"), tolerance, spec.workers);
  r.columns = {"fraction", "documents", "mean_cnpmi", "deviation", "flagged"};
  for (const auto& row : rows) {
    r.rows.push_back({format_number(row.fraction), std::to_string(row.documents),
                      format_number(row.mean_cnpmi), format_number(row.deviation),
                      row.flagged ? "yes" : "no"});
    if (row.flagged)
      r.notes.push_back("fraction " + format_number(row.fraction) + " deviates by " +
                        format_number(row.deviation) + " from the full reference");
  }
}

std::string canonical_kind(const std::string& kind) {
  if (kind == "cardinality-sweep") return "sweep-cardinality";
  if (kind == "link-sweep") return "sweep-links";
  if (kind == "reference-size-sweep") return "sweep-refsize";
  return kind;
}

}  // namespace

const std::vector<KindInfo>& experiment_kinds() { return kinds_table(); }

const KindInfo& kind_info(const std::string& kind) {
  const auto name = canonical_kind(kind);
  for (const auto& k : kinds_table())
    if (k.name == name) return k;
  std::string known;
  for (const auto& k : kinds_table()) known += (known.empty() ? "" : ", ") + k.name;
  throw UsageError("unknown experiment kind '" + kind + "' (" + known + ")");
}

void validate(const ExperimentSpec& spec) {
  const auto& info = kind_info(spec.kind);
  for (const auto& [key, value] : spec.parameters) {
    const bool known = std::any_of(info.parameters.begin(), info.parameters.end(),
                                   [&](const ParameterInfo& p) { return p.name == key; });
    if (!known) throw UsageError("parameter '" + key + "' does not apply to " + info.name);
  }
  for (const auto& [key, path] : spec.inputs) {
    const bool known = std::any_of(info.inputs.begin(), info.inputs.end(),
                                   [&](const PathInfo& p) { return p.name == key; });
    if (!known) throw UsageError("input '" + key + "' does not apply to " + info.name);
    if (!fs::exists(path)) throw UsageError("input " + key + ": " + path.string() + " does not exist");
  }
  for (const auto& p : info.inputs)
    if (p.required && !spec.inputs.count(p.name)) throw UsageError(info.name + " requires --" + p.name);
  for (const auto& p : info.outputs)
    if (p.required && !spec.outputs.count(p.name)) throw UsageError(info.name + " requires --" + p.name);
  for (const auto& [key, path] : spec.outputs) {
    const bool known = std::any_of(info.outputs.begin(), info.outputs.end(),
                                   [&](const PathInfo& p) { return p.name == key; });
    if (!known) throw UsageError("output '" + key + "' does not apply to " + info.name);
  }
  if (spec.workers < 1) throw UsageError("worker count must be >= 1");
  // Numeric parameters: anything whose default parses as a number must too.
  for (const auto& p : info.parameters) {
    const auto value = param(spec, p.name);
    if (value.empty() || p.default_value.empty()) continue;
    if (p.default_value.find(',') != std::string::npos) {
      bool numeric = true;
      for (const auto& item : split_list(p.default_value)) {
        try {
          to_double(p.name, item);
        } catch (const UsageError&) {
          numeric = false;
        }
      }
      if (numeric)
        for (const auto& item : split_list(value)) to_double(p.name, item);
      continue;
    }
    bool numeric = true;
    try {
      to_double(p.name, p.default_value);
    } catch (const UsageError&) {
      numeric = false;
    }
    if (numeric) to_double(p.name, value);
  }
  if (info.name == "train-plm" || info.name == "sweep-links") {
    auto config = plm_config(spec);
    if (info.name == "train-plm") apply_setting(config, "link-fraction", param(spec, "link-fraction"));
    validate(config);
  }
}

std::string config_hash(const ExperimentSpec& spec) {
  const auto& info = kind_info(spec.kind);
  std::string canonical = "kind=" + info.name + "\nseed=" + std::to_string(spec.seed) + "\n";
  for (const auto& p : info.parameters) canonical += p.name + "=" + param(spec, p.name) + "\n";
  for (const auto& [key, path] : spec.inputs) canonical += "input:" + key + "=" + path.filename().string() + "\n";
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

std::string render(const Report& report) {
  std::ostringstream out;
  out << "# tool: xling " << tool_version() << '\n';
  out << "# kind: " << report.kind << '\n';
  out << "# seed: " << report.seed << '\n';
  out << "# config: " << report.config_hash << '\n';
  for (const auto& d : report.deviations) out << "# deviation: " << d << '\n';
  for (const auto& n : report.notes) out << "# note: " << n << '\n';
  for (std::size_t i = 0; i < report.columns.size(); ++i)
    out << (i ? "\t" : "") << report.columns[i];
  if (!report.columns.empty()) out << '\n';
  for (const auto& row : report.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "\t" : "") << row[i];
    out << '\n';
  }
  return out.str();
}

Report run_experiment(const ExperimentSpec& spec) {
  validate(spec);
  Report r;
  r.kind = kind_info(spec.kind).name;
  r.seed = spec.seed;
  r.config_hash = config_hash(spec);
  if (r.kind == "index") run_index(spec, r);
  else if (r.kind == "score") run_score(spec, r);
  else if (r.kind == "train-plm") run_train_plm(spec, r);
  else if (r.kind == "train-estimator") run_train_estimator(spec, r);
  else if (r.kind == "estimate") run_estimate(spec, r);
  else if (r.kind == "classify") run_classify(spec, r);
  else if (r.kind == "sweep-cardinality") run_sweep_cardinality(spec, r);
  else if (r.kind == "sweep-links") run_sweep_links(spec, r);
  else if (r.kind == "sweep-refsize") run_sweep_refsize(spec, r);
  return r;
}

Report run_pipeline(const ExperimentSpec& spec) {
  if (spec.report.empty()) throw UsageError("no report path given");
  validate(spec);
  const fs::path partial = spec.report.string() + ".partial";
  if (spec.report.has_parent_path()) fs::create_directories(spec.report.parent_path());
  {
    std::ofstream out(partial, std::ios::trunc);
    if (!out) throw Error("cannot write " + partial.string());
    out << "# tool: xling " << tool_version() << "\n# kind: " << kind_info(spec.kind).name
        << "\n# status: running\n";
  }
  Report report;
  try {
    report = run_experiment(spec);
  } catch (const std::exception& e) {
    std::ofstream out(partial, std::ios::app);
    out << "# error: " << e.what() << '\n';
    throw;
  }
  {
    std::ofstream out(partial, std::ios::trunc | std::ios::binary);
    out << render(report);
    out.flush();
    if (!out) throw Error("failed writing " + partial.string());
  }
  fs::rename(partial, spec.report);
  return report;
}

}  // namespace xling

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <sstream>

#include "xling/boost.hpp"
#include "xling/cooccur.hpp"
#include "xling/corpus.hpp"
#include "xling/downstream.hpp"
#include "xling/errors.hpp"
#include "xling/estimator.hpp"
#include "xling/lexicon.hpp"
#include "xling/metrics.hpp"
#include "xling/pipeline.hpp"
#include "xling/plm.hpp"
#include "xling/topic.hpp"

namespace py = pybind11;
using namespace xling;

namespace {

LabeledThetaSet labeled(const std::vector<std::vector<double>>& thetas,
                        const std::vector<std::vector<std::string>>& labels) {
  if (thetas.size() != labels.size()) throw UsageError("thetas and labels differ in length");
  LabeledThetaSet set;
  set.thetas = thetas;
  set.labels = labels;
  for (std::size_t i = 0; i < thetas.size(); ++i) set.ids.push_back(std::to_string(i));
  return set;
}

TrainOptions train_options(double l2, std::size_t max_epochs, double tolerance, unsigned workers) {
  TrainOptions o;
  o.l2 = l2;
  o.max_epochs = max_epochs;
  o.tolerance = tolerance;
  o.workers = workers;
  return o;
}

py::dict report_dict(const Report& r) {
  py::dict d;
  d["kind"] = r.kind;
  d["seed"] = r.seed;
  d["config_hash"] = r.config_hash;
  d["deviations"] = r.deviations;
  d["notes"] = r.notes;
  d["columns"] = r.columns;
  d["rows"] = r.rows;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Crosslingual topic coherence metrics, polylingual topic model and coherence estimator";
  m.attr("__version__") = tool_version();

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<AlignmentError>(m, "AlignmentError", error.ptr());
  py::register_exception<EmptyCorpusError>(m, "EmptyCorpusError", error.ptr());
  py::register_exception<ParseError>(m, "ParseError", error.ptr());
  py::register_exception<FormatError>(m, "FormatError", error.ptr());
  py::register_exception<DegenerateInputError>(m, "DegenerateInputError", error.ptr());
  py::register_exception<UndefinedCorrelationError>(m, "UndefinedCorrelationError", error.ptr());
  py::register_exception<CapacityError>(m, "CapacityError", error.ptr());
  py::register_exception<FoldError>(m, "FoldError", error.ptr());
  py::register_exception<UsageError>(m, "UsageError", error.ptr());

  py::enum_<Side>(m, "Side").value("A", Side::A).value("B", Side::B);
  py::enum_<MtaMode>(m, "MtaMode").value("MATCHING", MtaMode::Matching).value("RAW_COUNT", MtaMode::RawCount);
  py::enum_<LossKind>(m, "Loss")
      .value("LINEAR", LossKind::Linear)
      .value("SQUARE", LossKind::Square)
      .value("EXPONENTIAL", LossKind::Exponential);
  py::enum_<Sampling>(m, "Sampling").value("RESAMPLE", Sampling::Resample).value("REWEIGHT", Sampling::Reweight);

  // Corpus -----------------------------------------------------------------
  py::class_<CorpusPair>(m, "CorpusPair")
      .def_property_readonly("language_a", [](const CorpusPair& c) { return c.language(Side::A); })
      .def_property_readonly("language_b", [](const CorpusPair& c) { return c.language(Side::B); })
      .def_property_readonly("doc_count", &CorpusPair::doc_count)
      .def("__len__", &CorpusPair::doc_count)
      .def("vocabulary", [](const CorpusPair& c, Side s) { return c.vocab(s).tokens(); }, py::arg("side"))
      .def("documents",
           [](const CorpusPair& c, Side s) {
             std::vector<std::vector<std::string>> out;
             for (const auto& d : c.docs()) {
               auto& doc = out.emplace_back();
               for (auto id : d.tokens(s)) doc.push_back(c.vocab(s).token(id));
             }
             return out;
           },
           py::arg("side"))
      .def("swapped", &CorpusPair::swapped)
      .def("checksum", [](const CorpusPair& c) { return checksum(c); })
      .def("__repr__", [](const CorpusPair& c) {
        return "<CorpusPair " + c.language(Side::A) + "-" + c.language(Side::B) + " docs=" +
               std::to_string(c.doc_count()) + ">";
      });

  m.def("make_corpus", &make_corpus, py::arg("language_a"), py::arg("language_b"), py::arg("docs_a"),
        py::arg("docs_b"), "Build an aligned corpus from pre-tokenized documents.");
  m.def("load_corpus", &load_parallel_corpus, py::arg("path_a"), py::arg("path_b"), py::arg("language_a"),
        py::arg("language_b"), py::arg("prune") = 0.3, py::call_guard<py::gil_scoped_release>());
  m.def("prune", &prune, py::arg("corpus"), py::arg("threshold"));
  m.def("subsample", &subsample, py::arg("corpus"), py::arg("fraction"), py::arg("seed"));
  m.def("tokenize", [](const std::string& line) { return split_tokens(line); }, py::arg("line"));

  // Topics and lexicons ----------------------------------------------------
  py::class_<MultilingualTopic>(m, "Topic")
      .def(py::init([](std::string la, std::string lb, std::vector<std::string> wa, std::vector<std::string> wb) {
             MultilingualTopic t{std::move(la), std::move(lb), std::move(wa), std::move(wb)};
             validate(t);
             return t;
           }),
           py::arg("language_a"), py::arg("language_b"), py::arg("words_a"), py::arg("words_b"))
      .def_readonly("language_a", &MultilingualTopic::language_a)
      .def_readonly("language_b", &MultilingualTopic::language_b)
      .def_readonly("words_a", &MultilingualTopic::words_a)
      .def_readonly("words_b", &MultilingualTopic::words_b)
      .def_property_readonly("cardinality", &MultilingualTopic::cardinality)
      .def("head", &MultilingualTopic::head, py::arg("c"))
      .def("swapped", &MultilingualTopic::swapped)
      .def("__repr__", [](const MultilingualTopic& t) {
        return "<Topic " + t.language_a + "-" + t.language_b + " c=" + std::to_string(t.cardinality()) + ">";
      });
  m.def("load_topics", [](const std::filesystem::path& p) { return load_topics(p); }, py::arg("path"));
  m.def("parse_topics", [](const std::string& text) { return parse_topics(text); }, py::arg("json_text"));
  m.def("serialize_topics", [](const std::vector<MultilingualTopic>& t) { return serialize_topics(t); },
        py::arg("topics"));

  py::class_<BilingualDictionary>(m, "Dictionary")
      .def(py::init<>())
      .def(py::init([](const std::vector<std::pair<std::string, std::string>>& entries) {
             BilingualDictionary d;
             for (const auto& [a, b] : entries) d.add(a, b);
             return d;
           }),
           py::arg("entries"))
      .def("add", &BilingualDictionary::add, py::arg("token_a"), py::arg("token_b"))
      .def("__contains__",
           [](const BilingualDictionary& d, const std::pair<std::string, std::string>& e) {
             return d.contains(e.first, e.second);
           })
      .def("translations", &BilingualDictionary::translations_of_a, py::arg("token_a"))
      .def("__len__", &BilingualDictionary::size);
  m.def("load_dictionary", &load_dictionary, py::arg("path"));

  py::class_<EraLexicon>(m, "EraLexicon")
      .def(py::init<>())
      .def("set", &EraLexicon::set, py::arg("token"), py::arg("year"))
      .def("year", &EraLexicon::year, py::arg("token"))
      .def("__len__", &EraLexicon::size);
  m.def("load_era_lexicon", &load_era_lexicon, py::arg("path"));

  // Co-occurrence and metrics ---------------------------------------------
  py::class_<CooccurrenceIndex>(m, "CooccurrenceIndex")
      .def_property_readonly("doc_count", &CooccurrenceIndex::doc_count)
      .def("df", &CooccurrenceIndex::df, py::arg("side"), py::arg("token"))
      .def("joint", &CooccurrenceIndex::joint, py::arg("side"), py::arg("w1"), py::arg("w2"))
      .def("joint_cross", &CooccurrenceIndex::joint_cross, py::arg("token_a"), py::arg("token_b"))
      .def_property_readonly("pair_entries", &CooccurrenceIndex::pair_entries);

  m.def(
      "build_index",
      [](const CorpusPair& corpus, std::optional<std::vector<MultilingualTopic>> topics, unsigned workers) {
        std::optional<TokenRestriction> restriction;
        if (topics) restriction = restriction_for(*topics);
        py::gil_scoped_release release;
        return build_index(corpus, restriction, workers);
      },
      py::arg("corpus"), py::arg("topics") = py::none(), py::arg("workers") = 1,
      "Count document frequencies; restrict to the words of `topics` when given.");
  m.def("save_index", [](const CooccurrenceIndex& index, const std::filesystem::path& path,
                         const CorpusPair& corpus) { save_index(index, path, checksum(corpus)); },
        py::arg("index"), py::arg("path"), py::arg("corpus"));
  m.def("load_index", [](const std::filesystem::path& path, const CorpusPair& corpus) {
    return load_index(path, checksum(corpus));
  }, py::arg("path"), py::arg("corpus"));

  m.def("npmi", [](const CooccurrenceIndex& index, const std::vector<std::string>& words, Side side,
                   std::optional<std::size_t> c) { return topic_npmi(index, words, side, c.value_or(words.size())); },
        py::arg("index"), py::arg("words"), py::arg("side"), py::arg("c") = py::none());
  m.def("inpmi", py::overload_cast<const CooccurrenceIndex&, const MultilingualTopic&>(&inpmi), py::arg("index"),
        py::arg("topic"));
  m.def("cnpmi", py::overload_cast<const CooccurrenceIndex&, const MultilingualTopic&>(&cnpmi), py::arg("index"),
        py::arg("topic"));
  m.def("mta", &mta, py::arg("dictionary"), py::arg("topic"), py::arg("mode") = MtaMode::Matching);
  m.def("twc", [](const CooccurrenceIndex& index, const std::vector<std::string>& words,
                  Side side) { return twc(index, words, side); },
        py::arg("index"), py::arg("words"), py::arg("side"));
  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) { return pearson(x, y); },
        py::arg("x"), py::arg("y"));
  m.def(
      "score_topics",
      [](const CooccurrenceIndex& index, const std::vector<MultilingualTopic>& topics,
         const BilingualDictionary* dict) {
        py::list out;
        for (const auto& s : score_topics(index, topics, dict))
          out.append(py::make_tuple(s.topic_id, std::string(metric_name(s.metric)), s.value));
        return out;
      },
      py::arg("index"), py::arg("topics"), py::arg("dictionary") = nullptr,
      "Return (topic, metric, value) tuples for every metric.");

  // Topic model ------------------------------------------------------------
  py::class_<PlmConfig>(m, "PlmConfig")
      .def(py::init<>())
      .def_readwrite("topics", &PlmConfig::topics)
      .def_readwrite("alpha", &PlmConfig::alpha)
      .def_readwrite("beta", &PlmConfig::beta)
      .def_readwrite("iterations", &PlmConfig::iterations)
      .def_readwrite("chains", &PlmConfig::chains)
      .def_readwrite("optimize_interval", &PlmConfig::optimize_interval)
      .def_readwrite("link_fraction", &PlmConfig::link_fraction)
      .def_readwrite("seed", &PlmConfig::seed)
      .def_readwrite("average_last", &PlmConfig::average_last)
      .def_readwrite("workers", &PlmConfig::workers);

  py::class_<PlmOutput>(m, "PlmModel")
      .def_readonly("topics", &PlmOutput::topics)
      .def_readonly("alpha", &PlmOutput::alpha)
      .def_readonly("chosen_chain", &PlmOutput::chosen_chain)
      .def_readonly("chain_log_joint", &PlmOutput::chain_log_joint)
      .def("theta", [](const PlmOutput& o, Side s) { return o.theta[static_cast<int>(s)]; }, py::arg("side"))
      .def("phi", [](const PlmOutput& o, Side s) { return o.phi[static_cast<int>(s)]; }, py::arg("side"))
      .def("vocabulary", [](const PlmOutput& o, Side s) { return o.vocab(s).tokens(); }, py::arg("side"))
      .def("top_topics", [](const PlmOutput& o, std::size_t c) { return top_topics(o, c); }, py::arg("c") = 10)
      .def("save_phi", [](const PlmOutput& o, const std::filesystem::path& p) { save_phi(o, p); }, py::arg("path"));

  m.def("train_plm", [](const CorpusPair& corpus, const PlmConfig& config) { return train(corpus, config); },
        py::arg("corpus"), py::arg("config"), py::call_guard<py::gil_scoped_release>());

  // Estimator --------------------------------------------------------------
  m.def("feature_names", [] {
    const auto& n = feature_names();
    return std::vector<std::string>(n.begin(), n.end());
  });

  py::class_<FeatureVector>(m, "FeatureVector")
      .def(py::init([](const std::vector<std::optional<double>>& values) {
             if (values.size() != kFeatureCount)
               throw UsageError("expected " + std::to_string(kFeatureCount) + " feature values");
             FeatureVector f;
             for (std::size_t i = 0; i < kFeatureCount; ++i) {
               if (values[i]) f.values[i] = *values[i];
               else f.mark_missing(static_cast<Feature>(i));
             }
             return f;
           }),
           py::arg("values"), "Missing features are given as None.")
      .def("to_list", [](const FeatureVector& f) {
        std::vector<std::optional<double>> out;
        for (std::size_t i = 0; i < kFeatureCount; ++i)
          out.push_back(f.is_missing(static_cast<Feature>(i)) ? std::nullopt : std::optional<double>(f.values[i]));
        return out;
      })
      .def("__eq__", &FeatureVector::operator==);

  m.def(
      "extract_features",
      [](const std::vector<MultilingualTopic>& topics, const CooccurrenceIndex& ref_index,
         const BilingualDictionary* dict, const EraLexicon* era, const CorpusPair* ref_corpus,
         const CorpusPair* aux_corpus, Side pivot, int drift_window, unsigned workers) {
        ExtractionContext ctx;
        ctx.ref_index = &ref_index;
        ctx.dict = dict;
        ctx.era = era;
        ctx.ref_corpus = ref_corpus;
        ctx.aux_corpus = aux_corpus;
        ctx.pivot = pivot;
        ctx.drift_window = drift_window;
        py::gil_scoped_release release;
        return extract_features(topics, ctx, workers);
      },
      py::arg("topics"), py::arg("ref_index"), py::arg("dictionary") = nullptr, py::arg("era") = nullptr,
      py::arg("ref_corpus") = nullptr, py::arg("aux_corpus") = nullptr, py::arg("pivot") = Side::A,
      py::arg("drift_window") = 5, py::arg("workers") = 1);

  py::class_<BoostOptions>(m, "BoostOptions")
      .def(py::init<>())
      .def_readwrite("loss", &BoostOptions::loss)
      .def_readwrite("learning_rate", &BoostOptions::learning_rate)
      .def_readwrite("stages", &BoostOptions::stages)
      .def_readwrite("sampling", &BoostOptions::sampling)
      .def_readwrite("seed", &BoostOptions::seed);

  py::class_<EstimatorModel>(m, "EstimatorModel")
      .def("predict", &EstimatorModel::predict, py::arg("features"))
      .def("predict_many",
           [](const EstimatorModel& model, const std::vector<FeatureVector>& fs) {
             std::vector<double> out;
             for (const auto& f : fs) out.push_back(model.predict(f));
             return out;
           },
           py::arg("features"))
      .def_property_readonly("stages", [](const EstimatorModel& model) { return model.regressor.stages.size(); })
      .def("to_json", [](const EstimatorModel& model) { return model_to_json(model); })
      .def("save", [](const EstimatorModel& model, const std::filesystem::path& p) { save_model(model, p); },
           py::arg("path"));

  m.def("fit_estimator",
        [](const std::vector<FeatureVector>& features, const std::vector<double>& targets,
           const BoostOptions& options) { return fit(features, targets, options); },
        py::arg("features"), py::arg("targets"), py::arg("options") = BoostOptions{},
        py::call_guard<py::gil_scoped_release>());
  m.def("load_estimator", &load_model, py::arg("path"));
  m.def("estimator_from_json", &model_from_json, py::arg("text"));

  m.def(
      "cross_validate",
      [](const std::map<std::string, std::pair<std::vector<FeatureVector>, std::vector<double>>>& data,
         std::vector<double> learning_rates, std::vector<LossKind> losses, std::size_t stages, std::uint64_t seed,
         unsigned workers) {
        std::map<std::string, TrainingSet> sets;
        for (const auto& [lang, d] : data) sets[lang] = {d.first, d.second};
        HyperGrid grid;
        grid.learning_rates = std::move(learning_rates);
        grid.losses = std::move(losses);
        grid.stages = stages;
        CvResult cv;
        {
          py::gil_scoped_release release;
          cv = cross_validate(sets, grid, seed, workers);
        }
        py::dict out;
        out["learning_rate"] = cv.learning_rate;
        out["loss"] = cv.loss;
        out["stages"] = cv.stages;
        out["folds"] = cv.folds;
        py::list scores;
        for (const auto& s : cv.scores) scores.append(py::make_tuple(s.learning_rate, s.loss, s.mean_pearson));
        out["scores"] = scores;
        return out;
      },
      py::arg("data"), py::arg("learning_rates") = HyperGrid{}.learning_rates,
      py::arg("losses") = HyperGrid{}.losses, py::arg("stages") = HyperGrid{}.stages, py::arg("seed") = 1,
      py::arg("workers") = 1,
      "Leave-languages-out grid search. `data` maps a language code to (features, targets).");

  // Downstream classification ---------------------------------------------
  py::class_<Classifier>(m, "Classifier")
      .def_readonly("labels", &Classifier::labels)
      .def_readonly("weights", &Classifier::weights)
      .def_readonly("bias", &Classifier::bias)
      .def_readonly("epochs", &Classifier::epochs)
      .def("probability", &Classifier::probability, py::arg("label"), py::arg("theta"))
      .def("predict", &Classifier::predict, py::arg("theta"));

  m.def("select_labels",
        [](const std::vector<std::vector<std::string>>& labels, std::size_t count) {
          const auto s = select_labels(labels, count);
          return py::make_tuple(s.universe, s.reduced);
        },
        py::arg("labels"), py::arg("count") = 7, "Return (most frequent labels, reduced flag).");
  m.def(
      "train_classifier",
      [](const std::vector<std::vector<double>>& thetas, const std::vector<std::vector<std::string>>& labels,
         const std::vector<std::string>& universe, double l2, std::size_t max_epochs, double tolerance,
         unsigned workers) {
        const auto set = labeled(thetas, labels);
        py::gil_scoped_release release;
        return train_classifier(set, universe, train_options(l2, max_epochs, tolerance, workers));
      },
      py::arg("thetas"), py::arg("labels"), py::arg("universe"), py::arg("l2") = 1e-3, py::arg("max_epochs") = 1000,
      py::arg("tolerance") = 1e-6, py::arg("workers") = 1);
  m.def(
      "micro_f1",
      [](const Classifier& c, const std::vector<std::vector<double>>& thetas,
         const std::vector<std::vector<std::string>>& labels) {
        const auto counts = count_decisions(c, labeled(thetas, labels));
        py::dict out;
        out["tp"] = counts.tp;
        out["fp"] = counts.fp;
        out["fn"] = counts.fn;
        out["precision"] = counts.precision();
        out["recall"] = counts.recall();
        out["f1"] = counts.f1();
        return out;
      },
      py::arg("classifier"), py::arg("thetas"), py::arg("labels"));

  // Experiments ------------------------------------------------------------
  m.def("experiment_kinds", [] {
    std::vector<std::string> names;
    for (const auto& k : experiment_kinds()) names.push_back(k.name);
    return names;
  });
  m.def(
      "run_experiment",
      [](const std::string& kind, const std::map<std::string, std::filesystem::path>& inputs,
         const std::map<std::string, std::filesystem::path>& outputs,
         const std::map<std::string, std::string>& parameters, std::uint64_t seed, unsigned workers,
         std::optional<std::filesystem::path> report) {
        ExperimentSpec spec{kind, inputs, outputs, parameters, seed, workers, report.value_or("")};
        Report r;
        {
          py::gil_scoped_release release;
          r = report ? run_pipeline(spec) : run_experiment(spec);
        }
        auto d = report_dict(r);
        d["text"] = render(r);
        return d;
      },
      py::arg("kind"), py::arg("inputs") = std::map<std::string, std::filesystem::path>{},
      py::arg("outputs") = std::map<std::string, std::filesystem::path>{},
      py::arg("parameters") = std::map<std::string, std::string>{}, py::arg("seed") = 1, py::arg("workers") = 1,
      py::arg("report") = py::none(),
      "Run one experiment kind. With `report`, the rendered report is also written to that path.");
}

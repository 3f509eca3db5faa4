#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "support/synthetic.hpp"
#include "xling/errors.hpp"
#include "xling/estimator.hpp"
#include "xling/pipeline.hpp"
#include "xling/topic.hpp"

using namespace xling;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Workspace {
  fs::path dir;
  explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  fs::path operator/(const std::string& f) const { return dir / f; }
};

// Training corpus, reference corpus and a topic file on disk.
struct Fixture {
  Workspace ws;
  explicit Fixture(const std::string& name) : ws(name) {
    synthetic::PlantedSpec spec;
    spec.docs = 150;
    spec.doc_length = 30;
    write_parallel_corpus(synthetic::planted_corpus(spec, 1), ws / "train.la", ws / "train.lb");
    write_parallel_corpus(synthetic::head_reference(200, 10, 2), ws / "ref.la", ws / "ref.lb");
    const std::vector<MultilingualTopic> topics{synthetic::head_topic(), synthetic::head_topic(10, 60)};
    write_topics(ws / "topics.json", topics);
    std::ofstream d(ws / "dict.tsv");
    for (int i = 0; i < 10; ++i) d << "ha_" << i << "\thb_" << i << '\n';
  }
};

ExperimentSpec score_spec(const Fixture& fx) {
  ExperimentSpec s;
  s.kind = "score";
  s.inputs = {{"topics", fx.ws / "topics.json"}, {"ref-a", fx.ws / "ref.la"},
              {"ref-b", fx.ws / "ref.lb"}, {"dict", fx.ws / "dict.tsv"}};
  s.parameters = {{"cardinality", "20"}};
  s.seed = 4;
  s.report = fx.ws / "out" / "score.tsv";
  return s;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(XLING_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("kind table and lookups") {
  CHECK(experiment_kinds().size() == 9);
  CHECK(kind_info("cardinality-sweep").name == "sweep-cardinality");
  CHECK(kind_info("link-sweep").name == "sweep-links");
  CHECK(kind_info("reference-size-sweep").name == "sweep-refsize");
  CHECK_THROWS_AS(kind_info("bogus"), UsageError);
}

TEST_CASE("score report: header, rows, byte-identical reruns") {
  Fixture fx("xling_pipeline_score");
  auto spec = score_spec(fx);
  const auto report = run_pipeline(spec);
  const auto text = slurp(spec.report);
  CHECK_FALSE(fs::exists(spec.report.string() + ".partial"));
  CHECK(text.rfind("# tool: xling " + tool_version() + "\n", 0) == 0);
  CHECK(text.find("# seed: 4\n") != std::string::npos);
  CHECK(text.find("# config: " + config_hash(spec) + "\n") != std::string::npos);
  CHECK(text.find("topic\tmetric\tvalue\n") != std::string::npos);
  CHECK(text.find("0\tMTA\t0.5\n") != std::string::npos);
  // 2 topics x {npmi_a, npmi_b, inpmi, cnpmi, mta, twc_a, twc_b}
  CHECK(report.rows.size() == 14);

  run_pipeline(spec);
  CHECK(slurp(spec.report) == text);

  auto other = spec;
  other.seed = 5;
  CHECK(config_hash(other) != config_hash(spec));
  other = spec;
  other.parameters["cardinality"] = "30";
  CHECK(config_hash(other) != config_hash(spec));
  other = spec;
  other.workers = 3;
  CHECK(config_hash(other) == config_hash(spec));
}

TEST_CASE("validation failures are usage errors") {
  Fixture fx("xling_pipeline_validate");
  auto spec = score_spec(fx);

  auto bad = spec;
  bad.kind = "nonsense";
  CHECK_THROWS_AS(run_pipeline(bad), UsageError);
  bad = spec;
  bad.parameters["cardinality"] = "ten";
  CHECK_THROWS_AS(run_pipeline(bad), UsageError);
  bad = spec;
  bad.parameters["no-such-key"] = "1";
  CHECK_THROWS_AS(run_pipeline(bad), UsageError);
  bad = spec;
  bad.inputs.erase("topics");
  CHECK_THROWS_AS(run_pipeline(bad), UsageError);
  bad = spec;
  bad.inputs["topics"] = fx.ws / "missing.json";
  CHECK_THROWS_AS(run_pipeline(bad), UsageError);
  bad = spec;
  bad.kind = "sweep-links";
  bad.inputs = {{"corpus-a", fx.ws / "train.la"}, {"corpus-b", fx.ws / "train.lb"}};
  bad.parameters = {{"topics", "0"}};
  CHECK_THROWS_AS(run_pipeline(bad), UsageError);
  CHECK_FALSE(fs::exists(spec.report));
}

TEST_CASE("failed runs leave only a partial report") {
  Fixture fx("xling_pipeline_partial");
  auto spec = score_spec(fx);
  spec.parameters["cardinality"] = "55";  // deeper than the first topic
  CHECK_THROWS(run_pipeline(spec));
  CHECK_FALSE(fs::exists(spec.report));
  const auto partial = slurp(spec.report.string() + ".partial");
  CHECK(partial.find("# error: ") != std::string::npos);
}

TEST_CASE("cardinality sweep and reference-size sweep reports") {
  Fixture fx("xling_pipeline_sweeps");
  ExperimentSpec s;
  s.kind = "cardinality-sweep";
  s.inputs = {{"topics", fx.ws / "topics.json"}, {"ref-a", fx.ws / "ref.la"},
              {"ref-b", fx.ws / "ref.lb"}, {"dict", fx.ws / "dict.tsv"}};
  s.parameters = {{"index-cache", (fx.ws / "ref.xlci").string()}};
  s.report = fx.ws / "card.tsv";
  const auto r = run_pipeline(s);
  CHECK(r.rows.size() == 15);
  CHECK(fs::exists(fx.ws / "ref.xlci"));
  const auto text = slurp(s.report);
  run_pipeline(s);  // now served from the cache
  const auto cached = slurp(s.report);
  CHECK(cached.find("# note: index loaded from cache") != std::string::npos);

  ExperimentSpec q;
  q.kind = "sweep-refsize";
  q.inputs = {{"topics", fx.ws / "topics.json"}, {"ref-a", fx.ws / "ref.la"}, {"ref-b", fx.ws / "ref.lb"}};
  q.parameters = {{"fractions", "0.2,1"}};
  q.seed = 9;
  q.report = fx.ws / "refsize.tsv";
  const auto rr = run_pipeline(q);
  REQUIRE(rr.rows.size() == 2);
  CHECK(rr.rows[1][3] == "0");
  CHECK(rr.columns == std::vector<std::string>{"fraction", "documents", "mean_cnpmi", "deviation", "flagged"});
}

TEST_CASE("train-plm writes model artifacts and link sweep runs") {
  Fixture fx("xling_pipeline_plm");
  ExperimentSpec s;
  s.kind = "train-plm";
  s.inputs = {{"corpus-a", fx.ws / "train.la"}, {"corpus-b", fx.ws / "train.lb"}};
  s.outputs = {{"model-dir", fx.ws / "model"}};
  s.parameters = {{"topics", "5"}, {"iterations", "30"}, {"chains", "2"}, {"export-words", "8"}};
  s.seed = 3;
  s.report = fx.ws / "plm.tsv";
  const auto r = run_pipeline(s);
  CHECK(r.deviations.size() == 1);
  for (const char* f : {"topics.json", "theta_a.tsv", "theta_b.tsv", "phi.bin"})
    CHECK(fs::exists(fx.ws / "model" / f));
  const auto topics = load_topics(fx.ws / "model" / "topics.json");
  CHECK(topics.size() == 5);
  CHECK(topics[0].cardinality() == 8);

  ExperimentSpec l;
  l.kind = "sweep-links";
  l.inputs = s.inputs;
  l.parameters = {{"topics", "5"}, {"iterations", "30"}, {"chains", "1"}, {"fractions", "0,1"}};
  l.report = fx.ws / "links.tsv";
  const auto lr = run_pipeline(l);
  REQUIRE(lr.rows.size() == 2);
  CHECK(lr.rows[0][0] == "0");
  CHECK(lr.rows[1][0] == "1");
  const auto first = slurp(l.report);
  l.workers = 2;
  run_pipeline(l);
  CHECK(slurp(l.report) == first);
}

TEST_CASE("train-estimator then estimate") {
  Workspace ws("xling_pipeline_estimator");
  fs::create_directories(ws / "train");
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::uniform_real_distribution<double> u(-0.2, 0.4);
  auto make_rows = [&](std::size_t n) {
    std::vector<FeatureRow> rows;
    for (std::size_t i = 0; i < n; ++i) {
      FeatureRow row;
      row.id = "t" + std::to_string(i);
      for (auto& v : row.features.values) v = u(rng);
      row.features[Feature::Cardinality] = 10;
      row.target = 0.8 * row.features[Feature::Cnpmi] + 0.1 + noise(rng);
      rows.push_back(row);
    }
    return rows;
  };
  for (const char* lang : {"de", "fr", "sv", "zh"}) {
    std::ofstream f(ws / "train" / (std::string(lang) + ".tsv"));
    write_features_tsv(f, make_rows(30));
  }
  auto held_out = make_rows(10);
  for (auto& r : held_out) r.target = std::nan("");
  {
    std::ofstream f(ws / "am.tsv");
    write_features_tsv(f, held_out);
  }

  ExperimentSpec t;
  t.kind = "train-estimator";
  t.inputs = {{"train-dir", ws / "train"}};
  t.outputs = {{"model", ws / "model.json"}};
  t.parameters = {{"learning-rates", "0.5,1"}, {"losses", "linear,square"}, {"stages", "10"}};
  t.report = ws / "cv.tsv";
  const auto cv = run_pipeline(t);
  CHECK(cv.rows.size() == 4);
  CHECK(fs::exists(ws / "model.json"));

  ExperimentSpec e;
  e.kind = "estimate";
  e.inputs = {{"model", ws / "model.json"}, {"features", ws / "am.tsv"}};
  e.report = ws / "estimates.tsv";
  const auto est = run_pipeline(e);
  REQUIRE(est.rows.size() == 10);
  const auto model = load_model(ws / "model.json");
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(est.rows[i][0] == held_out[i].id);
    CHECK(est.rows[i][1] == format_number(predict(model, held_out[i].features)));
  }

  auto bad = t;
  bad.parameters["losses"] = "cubic";
  CHECK_THROWS_AS(run_pipeline(bad), UsageError);
}

TEST_CASE("estimate from topics and a reference") {
  Fixture fx("xling_pipeline_estimate_topics");
  // A throwaway model over constant features.
  std::vector<FeatureVector> f(4);
  std::vector<double> y{0.1, 0.2, 0.3, 0.4};
  for (std::size_t i = 0; i < 4; ++i) f[i][Feature::Cnpmi] = static_cast<double>(i);
  BoostOptions o;
  o.stages = 3;
  save_model(fit(f, y, o), fx.ws / "model.json");

  ExperimentSpec e;
  e.kind = "estimate";
  e.inputs = {{"model", fx.ws / "model.json"}, {"topics", fx.ws / "topics.json"},
              {"ref-a", fx.ws / "ref.la"}, {"ref-b", fx.ws / "ref.lb"}, {"dict", fx.ws / "dict.tsv"}};
  e.outputs = {{"features-out", fx.ws / "features.tsv"}};
  e.report = fx.ws / "est.tsv";
  const auto r = run_pipeline(e);
  CHECK(r.rows.size() == 2);
  const auto rows = read_features_tsv(fx.ws / "features.tsv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].features[Feature::Cardinality] == 50);
  CHECK(rows[0].features[Feature::Mta] == doctest::Approx(0.2));
  CHECK(rows[0].features.is_missing(Feature::EraMean));
}

TEST_CASE("classify reports both transfer directions") {
  Workspace ws("xling_pipeline_classify");
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::ofstream ta(ws / "theta_a.tsv"), tb(ws / "theta_b.tsv"), lab(ws / "labels.tsv");
  for (int d = 0; d < 200; ++d) {
    const double p = u(rng);
    const double q = std::min(1.0, std::max(0.0, p + 0.1 * (u(rng) - 0.5)));
    ta << d << '\t' << p << '\t' << 1 - p << '\n';
    tb << d << '\t' << q << '\t' << 1 - q << '\n';
    lab << d << '\t' << (p > 0.5 ? "sci" : "art") << (d % 3 == 0 ? ",misc" : "") << '\n';
  }
  ta.close();
  tb.close();
  lab.close();
  ExperimentSpec c;
  c.kind = "classify";
  c.inputs = {{"theta-a", ws / "theta_a.tsv"}, {"theta-b", ws / "theta_b.tsv"},
              {"labels", ws / "labels.tsv"}};
  c.parameters = {{"label-count", "2"}, {"l2", "0"}};
  c.report = ws / "f1.tsv";
  const auto r = run_pipeline(c);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0][0] == "a->b");
  CHECK(r.rows[1][0] == "b->a");
  CHECK(std::stod(r.rows[0][1]) > 0.8);
  CHECK(std::stod(r.rows[1][1]) > 0.8);

  c.parameters["label-count"] = "9";
  const auto warned = run_pipeline(c);
  CHECK(slurp(c.report).find("# note: warning: only 3 categories available") != std::string::npos);
  CHECK(warned.rows.size() == 2);
}

TEST_CASE("command-line exit statuses") {
  Fixture fx("xling_pipeline_cli");
  const auto base = "--topics " + (fx.ws / "topics.json").string() + " --ref-a " +
                    (fx.ws / "ref.la").string() + " --ref-b " + (fx.ws / "ref.lb").string();
  const auto out = (fx.ws / "cli.tsv").string();
  CHECK(run_cli("score " + base + " --output " + out) == 0);
  CHECK(fs::exists(out));
  CHECK(run_cli("nonsense --output " + out) == 2);
  CHECK(run_cli("score " + base + " --output " + out + " --cardinality ten") == 2);
  CHECK(run_cli("score " + base) == 2);  // no report path
  CHECK(run_cli("score -t x --output " + out) == 2);
  const auto failing = (fx.ws / "fail.tsv").string();
  CHECK(run_cli("score " + base + " --output " + failing + " --cardinality 55") == 1);
  CHECK_FALSE(fs::exists(failing));
  CHECK(fs::exists(failing + ".partial"));

  {
    std::ofstream cfg(fx.ws / "cfg.ini");
    cfg << "[score]\ncardinality = 20\n";
  }
  const auto via_config = (fx.ws / "cfg.tsv").string();
  CHECK(run_cli("--config " + (fx.ws / "cfg.ini").string() + " score " + base + " --output " +
                via_config) == 0);
  ExperimentSpec s;
  s.kind = "score";
  s.inputs = {{"topics", fx.ws / "topics.json"}, {"ref-a", fx.ws / "ref.la"}, {"ref-b", fx.ws / "ref.lb"}};
  s.parameters = {{"cardinality", "20"}};
  s.report = fx.ws / "lib.tsv";
  run_pipeline(s);
  CHECK(slurp(via_config) == slurp(s.report));

  const auto env_out = (fx.ws / "env.tsv").string();
  auto with_env = [&](const std::string& value) {
    const auto cmd = "XLING_WORKERS=" + value + " " + std::string(XLING_CLI) + " score " + base +
                     " --output " + env_out + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  CHECK(with_env("0") == 2);
  CHECK(with_env("abc") == 2);
  CHECK(with_env("3") == 0);
  CHECK(slurp(env_out) == slurp(out));
}

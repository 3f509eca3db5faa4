#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <optional>
#include <map>
#include <memory>
#include <string>

#include "xling/errors.hpp"
#include "xling/pipeline.hpp"

namespace {

constexpr int kUsageExit = 2;
constexpr int kFailureExit = 1;

struct Bindings {
  const xling::KindInfo* info = nullptr;
  CLI::App* app = nullptr;
  std::map<std::string, std::string> inputs, outputs, params;
  std::map<std::string, CLI::Option*> input_opts, output_opts, param_opts;
  std::string report;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  CLI::Option* workers_opt = nullptr;
};

// Worker count from the environment; nullopt when set but not a positive
// integer.
std::optional<unsigned> env_workers() {
  const char* text = std::getenv("XLING_WORKERS");
  if (!text || !*text) return 1u;
  unsigned value = 0;
  const char* end = text + std::strlen(text);
  const auto [ptr, ec] = std::from_chars(text, end, value);
  if (ec != std::errc() || ptr != end || value == 0) return std::nullopt;
  return value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crosslingual topic coherence toolkit", "xling"};
  app.set_version_flag("--version", "xling " + xling::tool_version());
  app.set_config("--config", "", "TOML/INI file with option overrides");
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Bindings>> all;
  for (const auto& info : xling::experiment_kinds()) {
    auto b = std::make_unique<Bindings>();
    b->info = &info;
    b->app = app.add_subcommand(info.name, info.help);
    auto* sub = b->app;
    sub->add_option("--output", b->report, "report file")->required();
    sub->add_option("--seed", b->seed, "random seed")->capture_default_str();
    b->workers_opt = sub->add_option("--workers", b->workers,
                                     "worker threads (default: $XLING_WORKERS, else 1)")
                         ->check(CLI::PositiveNumber);
    for (const auto& p : info.inputs)
      b->input_opts[p.name] =
          sub->add_option("--" + p.name, b->inputs[p.name], p.help + (p.required ? "" : " (optional)"));
    for (const auto& p : info.outputs)
      b->output_opts[p.name] =
          sub->add_option("--" + p.name, b->outputs[p.name], p.help + (p.required ? "" : " (optional)"));
    for (const auto& p : info.parameters) {
      auto* opt = sub->add_option("--" + p.name, b->params[p.name], p.help);
      if (!p.default_value.empty()) opt->default_str(p.default_value);
      b->param_opts[p.name] = opt;
    }
    all.push_back(std::move(b));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageExit;
  }

  for (const auto& b : all) {
    if (!b->app->parsed()) continue;
    xling::ExperimentSpec spec;
    spec.kind = b->info->name;
    spec.seed = b->seed;
    if (b->workers_opt->count() == 0) {
      const auto env = env_workers();
      if (!env) {
        std::cerr << "xling: XLING_WORKERS must be a positive integer\n";
        return kUsageExit;
      }
      b->workers = *env;
    }
    spec.workers = b->workers;
    spec.report = b->report;
    for (const auto& [name, opt] : b->input_opts)
      if (opt->count() > 0) spec.inputs[name] = b->inputs[name];
    for (const auto& [name, opt] : b->output_opts)
      if (opt->count() > 0) spec.outputs[name] = b->outputs[name];
    for (const auto& [name, opt] : b->param_opts)
      if (opt->count() > 0) spec.parameters[name] = b->params[name];
    try {
      xling::run_pipeline(spec);
    } catch (const xling::UsageError& e) {
      std::cerr << "xling " << spec.kind << ": " << e.what() << '\n';
      return kUsageExit;
    } catch (const std::exception& e) {
      std::cerr << "xling " << spec.kind << ": " << e.what() << '\n';
      return kFailureExit;
    }
    std::cout << spec.report.string() << '\n';
    return 0;
  }
  return kUsageExit;
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace xling {

std::string tool_version();

// Declarative description of one subcommand: its file inputs, file outputs
// and tunable parameters with defaults.
struct ParameterInfo {
  std::string name;
  std::string default_value;  // empty means unset
  std::string help;
};

struct PathInfo {
  std::string name;
  bool required = false;
  std::string help;
};

struct KindInfo {
  std::string name;  // e.g. "sweep-links"
  std::string help;
  std::vector<PathInfo> inputs;
  std::vector<PathInfo> outputs;
  std::vector<ParameterInfo> parameters;
};

const std::vector<KindInfo>& experiment_kinds();

// Throws UsageError for an unknown kind. Accepts the subcommand names and
// the long forms "cardinality-sweep", "link-sweep", "reference-size-sweep".
const KindInfo& kind_info(const std::string& kind);

struct ExperimentSpec {
  std::string kind;
  std::map<std::string, std::filesystem::path> inputs;
  std::map<std::string, std::filesystem::path> outputs;
  std::map<std::string, std::string> parameters;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::filesystem::path report;
};

// Unknown kinds, unknown or malformed parameters, missing required inputs
// and inputs that do not exist raise UsageError.
void validate(const ExperimentSpec& spec);

// FNV-1a over the kind, seed, effective parameters and input file names.
std::string config_hash(const ExperimentSpec& spec);

struct Report {
  std::string kind;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<std::string> deviations;
  std::vector<std::string> notes;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

// '#'-prefixed header lines followed by a TSV table.
std::string render(const Report& report);

// Runs the experiment and returns its report without writing it.
Report run_experiment(const ExperimentSpec& spec);

// Runs the experiment and writes the report to `<report>.partial`, renamed
// to `spec.report` only once complete. On failure the partial file is left
// with an error line and the exception propagates.
Report run_pipeline(const ExperimentSpec& spec);

// Formats a double the way reports do.
std::string format_number(double value);

}  // namespace xling

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "xling/boost.hpp"
#include "xling/cooccur.hpp"
#include "xling/lexicon.hpp"
#include "xling/topic.hpp"

namespace xling {

// Coherence estimator: features measured against a small reference corpus,
// regressed onto coherence measured against a large one.

enum class Feature : std::size_t {
  Cardinality,
  Cnpmi,
  Inpmi,
  Mta,
  TwcA,
  TwcB,
  McAB,
  McBA,
  IccAB,
  IccBA,
  EraMean,
  EraStd,
  DriftMean,
  DriftStd,
};
inline constexpr std::size_t kFeatureCount = 14;

// Column names in Feature order, e.g. "cnpmi", "era_mean".
const std::array<std::string, kFeatureCount>& feature_names();

// Smoothing constant of the gap features.
inline constexpr double kGapSmoothing = 0.001;

struct FeatureVector {
  std::array<double, kFeatureCount> values{};
  // Bit f set when feature f could not be measured; its value is then 0 and
  // the model substitutes the training mean.
  std::uint32_t missing = 0;

  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
  bool is_missing(Feature f) const { return missing >> static_cast<std::size_t>(f) & 1u; }
  void mark_missing(Feature f) {
    missing |= 1u << static_cast<std::size_t>(f);
    (*this)[f] = 0.0;
  }
  bool operator==(const FeatureVector&) const = default;
};

// mc(l1; l2) = cnpmi / (npmi(l1) + smoothing)
double mismatch_coefficient(double cnpmi, double npmi_l1);
// icc(l1, l2) = (npmi(l1) + smoothing) / (npmi(l2) + smoothing)
double internal_comparison_coefficient(double npmi_l1, double npmi_l2);

struct ExtractionContext {
  const CooccurrenceIndex* ref_index = nullptr;  // required
  const BilingualDictionary* dict = nullptr;     // mta missing when null
  const EraLexicon* era = nullptr;               // era missing when null
  const CorpusPair* ref_corpus = nullptr;        // drift missing when null
  // Large corpus containing the pivot language (matched by language code,
  // falling back to the pivot side).
  const CorpusPair* aux_corpus = nullptr;
  Side pivot = Side::A;
  int drift_window = 5;
};

// Throws DegenerateInputError for cardinality < 2.
FeatureVector extract_features(const MultilingualTopic& topic, const ExtractionContext& ctx);

// Batch form; context vectors are computed once for all pivot words.
std::vector<FeatureVector> extract_features(std::span<const MultilingualTopic> topics,
                                            const ExtractionContext& ctx,
                                            unsigned workers = 1);

struct EstimatorModel {
  static constexpr int kVersion = 1;
  BoostedRegressor regressor;
  // Substituted for missing features: mean over training rows where measured.
  std::array<double, kFeatureCount> impute{};

  double predict(const FeatureVector& f) const;
};

// Regression row: the features (imputed) followed by era-missing and
// drift-missing indicators.
std::vector<double> design_row(const FeatureVector& f,
                               const std::array<double, kFeatureCount>& impute);

EstimatorModel fit(std::span<const FeatureVector> features, std::span<const double> targets,
                   const BoostOptions& options,
                   std::vector<std::vector<double>>* weight_trace = nullptr);

double predict(const EstimatorModel& model, const FeatureVector& f);

struct TrainingSet {
  std::vector<FeatureVector> features;
  std::vector<double> targets;
};

struct HyperGrid {
  std::vector<double> learning_rates{0.1, 0.5, 1.0};
  std::vector<LossKind> losses{LossKind::Linear, LossKind::Square, LossKind::Exponential};
  std::size_t stages = 50;
};

struct GridScore {
  double learning_rate;
  LossKind loss;
  double mean_pearson;
};

struct CvResult {
  double learning_rate = 1.0;
  LossKind loss = LossKind::Linear;
  std::size_t stages = 50;
  std::vector<GridScore> scores;
  std::vector<std::vector<std::string>> folds;
};

// Languages in three folds: a seeded shuffle dealt round-robin.
std::vector<std::vector<std::string>> language_folds(std::vector<std::string> languages,
                                                     std::uint64_t seed);

// Picks the grid point with the highest mean held-out Pearson correlation
// (earliest grid point on ties). Folds whose predictions or targets are
// constant score 0. Throws FoldError with fewer than three languages.
CvResult cross_validate(const std::map<std::string, TrainingSet>& by_language,
                        const HyperGrid& grid, std::uint64_t seed, unsigned workers = 1);

void save_model(const EstimatorModel& model, const std::filesystem::path& path);
EstimatorModel load_model(const std::filesystem::path& path);
std::string model_to_json(const EstimatorModel& model);
EstimatorModel model_from_json(const std::string& text);

// Header "id<TAB>target<TAB>features...<TAB>missing"; missing is the bit mask.
// Targets may be NaN when unknown.
struct FeatureRow {
  std::string id;
  double target = 0.0;
  FeatureVector features;
};
void write_features_tsv(std::ostream& out, std::span<const FeatureRow> rows);
std::vector<FeatureRow> read_features_tsv(const std::filesystem::path& path);

}  // namespace xling

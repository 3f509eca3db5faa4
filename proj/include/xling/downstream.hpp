#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace xling {

// Multi-label document classification on document-topic features.

struct LabeledThetaSet {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> thetas;
  std::vector<std::vector<std::string>> labels;

  std::size_t size() const { return thetas.size(); }
};

struct LabelSelection {
  std::vector<std::string> universe;  // by descending document frequency
  // True when fewer than the requested number of categories exist.
  bool reduced = false;
};

// The `count` categories with the highest document frequency; ties go to the
// lexicographically smaller name.
LabelSelection select_labels(const std::vector<std::vector<std::string>>& raw_labels,
                             std::size_t count);

// Keeps only labels in `universe` and drops documents left without any.
LabeledThetaSet restrict_labels(const LabeledThetaSet& set,
                                const std::vector<std::string>& universe);

struct TrainOptions {
  double l2 = 1e-3;
  std::size_t max_epochs = 1000;
  double tolerance = 1e-6;  // on the gradient norm
  unsigned workers = 1;     // labels are trained independently
};

// One-vs-rest logistic regression; each label has weights over the K topics
// plus a bias. A label that is always (or never) present in training gets a
// constant prediction.
struct Classifier {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> weights;
  std::vector<double> bias;
  std::vector<int> constant;  // -1 never, +1 always, 0 learned
  std::vector<std::size_t> epochs;

  double probability(std::size_t label, const std::vector<double>& theta) const;
  std::vector<std::string> predict(const std::vector<double>& theta) const;  // threshold 0.5
};

Classifier train_classifier(const LabeledThetaSet& train,
                            const std::vector<std::string>& universe,
                            const TrainOptions& options = {});

struct F1Counts {
  std::uint64_t tp = 0, fp = 0, fn = 0;
  double precision() const;
  double recall() const;
  double f1() const;
};

// Micro-averaged over every (document, label) decision. Throws
// DegenerateInputError on an empty test set or a feature width mismatch.
F1Counts count_decisions(const Classifier& classifier, const LabeledThetaSet& test);
double evaluate_f1(const Classifier& classifier, const LabeledThetaSet& test);

// Training and test labels are each permuted across documents with `seed`,
// which removes any link between topics and labels. Given the positive
// predictions per label, true positives are then hypergeometric;
// `expected_f1` and `bound` (`sigmas` binomial standard deviations, in F1
// units) follow from that.
struct ShuffleBaseline {
  double f1 = 0.0;
  double expected_f1 = 0.0;
  double bound = 0.0;
  double base_rate = 0.0;
  std::uint64_t predicted_positive = 0;
  bool within_bound = false;
};
ShuffleBaseline shuffled_baseline(const LabeledThetaSet& train, const LabeledThetaSet& test,
                                  const std::vector<std::string>& universe,
                                  std::uint64_t seed, const TrainOptions& options = {},
                                  double sigmas = 4.0);

// "doc-id<TAB>cat1,cat2,..." per line.
std::map<std::string, std::vector<std::string>> load_labels(const std::filesystem::path& path);

// Theta TSV rows "doc-id<TAB>p_0<TAB>...". Returns ids and rows in file order.
LabeledThetaSet load_thetas(const std::filesystem::path& path);

// Attaches labels by document id; documents without a labels entry are
// dropped.
LabeledThetaSet attach_labels(LabeledThetaSet thetas,
                              const std::map<std::string, std::vector<std::string>>& labels);

void write_results_tsv(std::ostream& out,
                       const std::vector<std::pair<std::string, double>>& results);

}  // namespace xling

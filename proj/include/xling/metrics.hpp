#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xling/cooccur.hpp"
#include "xling/lexicon.hpp"
#include "xling/topic.hpp"

namespace xling {

enum class PairMode { MonoA, MonoB, Cross };

// Normalized PMI from probabilities:
//   log(p_ij / (p_i p_j)) / -log(p_ij)
// +1 means the words always co-occur. Returns 0 when p_ij or a marginal is
// zero, and when p_ij == 1.
double npmi_from_probabilities(double p_i, double p_j, double p_ij);

// For Cross mode w_i is a language A token and w_j a language B token.
double npmi_pair(const CooccurrenceIndex& index, std::string_view w_i,
                 std::string_view w_j, PairMode mode);

// Mean pair score over the C(C-1)/2 unordered pairs among the first `c` words.
// Throws DegenerateInputError when c < 2 or c exceeds the list.
double topic_npmi(const CooccurrenceIndex& index,
                  std::span<const std::string> words, Side side, std::size_t c);

// Average of the two monolingual topic scores.
double inpmi(const CooccurrenceIndex& index, const MultilingualTopic& topic);

// Mean over all C^2 ordered (A word, B word) pairs.
double cnpmi(const CooccurrenceIndex& index, const MultilingualTopic& topic);

// Multilingual topic over several language pairs: mean of the pairwise scores.
double cnpmi(std::span<const std::pair<const CooccurrenceIndex*,
                                       const MultilingualTopic*>> language_pairs);

enum class MtaMode {
  // Maximum bipartite matching of dictionary pairs, divided by C.
  Matching,
  // Number of (A word, B word) dictionary pairs, unnormalized.
  RawCount,
};

double mta(const BilingualDictionary& dict, const MultilingualTopic& topic,
           MtaMode mode = MtaMode::Matching);

// Fraction of words with nonzero document frequency in the reference.
double twc(const CooccurrenceIndex& index, std::span<const std::string> words,
           Side side);

// Sample Pearson correlation. Throws DegenerateInputError on length mismatch
// or fewer than 2 points, UndefinedCorrelationError on zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

enum class Metric { NpmiA, NpmiB, Inpmi, Cnpmi, Mta, TwcA, TwcB };

std::string_view metric_name(Metric m);

struct TopicScore {
  std::size_t topic_id = 0;
  Metric metric = Metric::Cnpmi;
  double value = 0.0;
};

// Every metric for every topic, ordered by topic id then metric name. MTA is
// omitted when no dictionary is given. Topics with C < 2 get no NPMI-family
// monolingual scores.
std::vector<TopicScore> score_topics(const CooccurrenceIndex& index,
                                     std::span<const MultilingualTopic> topics,
                                     const BilingualDictionary* dict = nullptr);

// Rows "topic-id<TAB>metric<TAB>value".
void write_scores_tsv(std::ostream& out, std::span<const TopicScore> scores);

// {"<topic id>": {"<metric>": value, ...}, ...}
std::string scores_to_json(std::span<const TopicScore> scores);

}  // namespace xling

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xling/cooccur.hpp"
#include "xling/corpus.hpp"
#include "xling/lexicon.hpp"
#include "xling/metrics.hpp"
#include "xling/plm.hpp"
#include "xling/topic.hpp"

namespace xling {

inline constexpr std::size_t kDefaultCardinalities[] = {10, 20, 30, 40, 50};
inline constexpr double kDefaultLinkFractions[] = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
inline constexpr double kDefaultReferenceFractions[] = {0.2, 0.4, 0.6, 0.8, 1.0};

struct CardinalityRow {
  std::size_t cardinality = 0;
  std::string metric;  // "cnpmi", "mta" (matching / C) or "mta_raw" (pair count)
  double mean = 0.0;
};

// Mean cnpmi (and both mta modes when `dict` is given) over all topics at each
// cardinality. Throws DegenerateInputError naming the first topic whose word
// lists are shorter than the largest cardinality.
std::vector<CardinalityRow> run_cardinality_sweep(const CooccurrenceIndex& index,
                                                  std::span<const MultilingualTopic> topics,
                                                  const BilingualDictionary* dict,
                                                  std::span<const std::size_t> cardinalities);

struct LinkRow {
  double fraction = 0.0;
  double mean_cnpmi = 0.0;
  std::vector<double> chain_log_joint;
};

// Trains one model per link fraction (everything else from `base`, including
// the seed) and scores the top-`cardinality` words of each topic against
// `reference`. Sweep points run on up to `workers` threads.
std::vector<LinkRow> run_link_sweep(const CorpusPair& corpus, const CooccurrenceIndex& reference,
                                    const PlmConfig& base, std::span<const double> fractions,
                                    std::size_t cardinality = 10, unsigned workers = 1);

struct ReferenceRow {
  double fraction = 0.0;
  std::size_t documents = 0;
  double mean_cnpmi = 0.0;
  double deviation = 0.0;  // absolute difference from the full reference
  bool flagged = false;    // deviation above the tolerance
};

// Rebuilds the index from a seeded subsample of the reference at each
// fraction. The full-reference score is always computed and used as the
// baseline for `deviation`.
std::vector<ReferenceRow> run_reference_size_sweep(const CorpusPair& reference,
                                                   std::span<const MultilingualTopic> topics,
                                                   std::span<const double> fractions,
                                                   std::uint64_t seed,
                                                   std::size_t cardinality = 10,
                                                   double tolerance = 0.02,
                                                   unsigned workers = 1);

// Mean cnpmi of the top-`cardinality` prefix of each topic.
double mean_cnpmi(const CooccurrenceIndex& index, std::span<const MultilingualTopic> topics,
                  std::size_t cardinality);

}  // namespace xling

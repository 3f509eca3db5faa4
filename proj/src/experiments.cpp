#include "xling/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "xling/errors.hpp"

namespace xling {

namespace {

// Runs body(i) for i in [0, n) on up to `workers` threads. The first
// exception is rethrown after all threads finish.
template <typename Body>
void parallel_for(std::size_t n, unsigned workers, Body body) {
  const std::size_t threads = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

void require_depth(std::span<const MultilingualTopic> topics, std::size_t c) {
  for (std::size_t t = 0; t < topics.size(); ++t) {
    const auto depth = std::min(topics[t].words_a.size(), topics[t].words_b.size());
    if (depth < c)
      throw DegenerateInputError("topic " + std::to_string(t) + " has " + std::to_string(depth) +
                                 " words per language; cardinality " + std::to_string(c) +
                                 " requested");
  }
}

}  // namespace

double mean_cnpmi(const CooccurrenceIndex& index, std::span<const MultilingualTopic> topics,
                  std::size_t cardinality) {
  if (topics.empty()) throw DegenerateInputError("no topics to score");
  require_depth(topics, cardinality);
  double sum = 0.0;
  for (const auto& t : topics) sum += cnpmi(index, t.head(cardinality));
  return sum / static_cast<double>(topics.size());
}

std::vector<CardinalityRow> run_cardinality_sweep(const CooccurrenceIndex& index,
                                                  std::span<const MultilingualTopic> topics,
                                                  const BilingualDictionary* dict,
                                                  std::span<const std::size_t> cardinalities) {
  if (cardinalities.empty()) throw UsageError("empty cardinality list");
  if (topics.empty()) throw DegenerateInputError("no topics to score");
  require_depth(topics, *std::max_element(cardinalities.begin(), cardinalities.end()));
  std::vector<CardinalityRow> rows;
  const double n = static_cast<double>(topics.size());
  for (std::size_t c : cardinalities) {
    if (c < 1) throw UsageError("cardinality must be >= 1");
    double cn = 0.0, matched = 0.0, raw = 0.0;
    for (const auto& t : topics) {
      const auto head = t.head(c);
      cn += cnpmi(index, head);
      if (dict) {
        matched += mta(*dict, head, MtaMode::Matching);
        raw += mta(*dict, head, MtaMode::RawCount);
      }
    }
    rows.push_back({c, "cnpmi", cn / n});
    if (dict) {
      rows.push_back({c, "mta", matched / n});
      rows.push_back({c, "mta_raw", raw / n});
    }
  }
  return rows;
}

std::vector<LinkRow> run_link_sweep(const CorpusPair& corpus, const CooccurrenceIndex& reference,
                                    const PlmConfig& base, std::span<const double> fractions,
                                    std::size_t cardinality, unsigned workers) {
  if (fractions.empty()) throw UsageError("empty link fraction list");
  for (double f : fractions) {
    PlmConfig check = base;
    check.link_fraction = f;
    validate(check);
  }
  std::vector<LinkRow> rows(fractions.size());
  parallel_for(fractions.size(), workers, [&](std::size_t i) {
    PlmConfig config = base;
    config.link_fraction = fractions[i];
    config.workers = 1;
    const auto output = train(corpus, config);
    const auto topics = top_topics(output, cardinality);
    rows[i].fraction = fractions[i];
    rows[i].mean_cnpmi = mean_cnpmi(reference, topics, cardinality);
    rows[i].chain_log_joint = output.chain_log_joint;
  });
  return rows;
}

std::vector<ReferenceRow> run_reference_size_sweep(const CorpusPair& reference,
                                                   std::span<const MultilingualTopic> topics,
                                                   std::span<const double> fractions,
                                                   std::uint64_t seed, std::size_t cardinality,
                                                   double tolerance, unsigned workers) {
  if (fractions.empty()) throw UsageError("empty reference fraction list");
  for (double f : fractions)
    if (!(f > 0.0 && f <= 1.0)) throw UsageError("reference fractions must lie in (0, 1]");
  require_depth(topics, cardinality);
  std::vector<MultilingualTopic> heads;
  for (const auto& t : topics) heads.push_back(t.head(cardinality));
  const auto restriction = restriction_for(heads);

  const double full = mean_cnpmi(build_index(reference, restriction, workers), heads, cardinality);
  std::vector<ReferenceRow> rows(fractions.size());
  parallel_for(fractions.size(), workers, [&](std::size_t i) {
    const auto sample = subsample(reference, fractions[i], seed);
    const auto index = build_index(sample, restriction);
    auto& row = rows[i];
    row.fraction = fractions[i];
    row.documents = sample.doc_count();
    row.mean_cnpmi = mean_cnpmi(index, heads, cardinality);
    row.deviation = std::abs(row.mean_cnpmi - full);
    row.flagged = row.deviation > tolerance;
  });
  return rows;
}

}  // namespace xling

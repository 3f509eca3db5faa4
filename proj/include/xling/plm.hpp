#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "xling/corpus.hpp"
#include "xling/topic.hpp"

namespace xling {

// Polylingual (document-links) topic model trained by collapsed Gibbs
// sampling. Linked document pairs share one document-topic count row;
// unlinked pairs contribute two independent documents to the pool.

struct PlmConfig {
  std::size_t topics = 20;
  double alpha = 0.1;  // symmetric document-topic prior (initial value)
  double beta = 0.01;  // symmetric topic-word prior, never optimized
  std::size_t iterations = 1000;
  std::size_t chains = 5;
  std::size_t optimize_interval = 50;  // 0 disables alpha optimization
  double link_fraction = 1.0;
  std::uint64_t seed = 1;
  // Estimate theta/phi from counts averaged over the last N sweeps; 0 uses
  // the final state only.
  std::size_t average_last = 0;
  // Upper bound on topics * (V_A + V_B).
  std::size_t max_cells = std::size_t{1} << 28;
  unsigned workers = 1;
};

// Throws UsageError when a field is out of range.
void validate(const PlmConfig& config);

// Applies one key=value setting (keys: topics, alpha, beta, iterations,
// chains, optimize-interval, link-fraction, seed, average-last, max-cells,
// workers). Throws UsageError on unknown keys or malformed values.
void apply_setting(PlmConfig& config, const std::string& key,
                   const std::string& value);

// Reads key=value lines; '#' starts a comment.
PlmConfig read_plm_config(std::istream& in, PlmConfig base = {});

struct PlmState {
  std::size_t topics = 0;
  std::vector<double> alpha;  // per topic
  double beta = 0.0;
  std::array<std::size_t, 2> vocab_size{};

  // Topic label per token, per document pair, per side.
  std::array<std::vector<std::vector<std::uint32_t>>, 2> assignments;
  // Document-topic row used by each pair's side. Linked pairs share a row.
  std::array<std::vector<std::size_t>, 2> theta_row;

  std::vector<std::uint32_t> doc_topic;    // rows x topics
  std::vector<std::uint32_t> doc_length;   // per row
  std::array<std::vector<std::uint32_t>, 2> word_topic;   // V x topics per side
  std::array<std::vector<std::uint32_t>, 2> topic_total;  // per side

  std::size_t rows() const { return doc_length.size(); }
  std::span<const std::uint32_t> row(std::size_t r) const {
    return {doc_topic.data() + r * topics, topics};
  }
  std::span<const std::uint32_t> word(Side s, TokenId w) const {
    return {word_topic[static_cast<int>(s)].data() + std::size_t{w} * topics, topics};
  }
};

// Rebuilds every count table from assignments and links. Used to verify
// sampler bookkeeping. `assignments[side][pair][position]`.
PlmState recount(const CorpusPair& corpus, std::size_t topics,
                 const std::vector<bool>& linked,
                 const std::array<std::vector<std::vector<std::uint32_t>>, 2>& assignments,
                 std::vector<double> alpha, double beta);

// True when all count tables agree with the assignments.
bool counts_consistent(const CorpusPair& corpus, const PlmState& state);

// Unnormalized full conditional of one token over topics, with the token's
// own assignment already removed from the counts:
//   (n_dk + alpha_k) * (n_kw + beta) / (n_k + V * beta)
std::vector<double> conditional_weights(std::span<const std::uint32_t> doc_topic,
                                        std::span<const double> alpha,
                                        std::span<const std::uint32_t> word_topic,
                                        std::span<const std::uint32_t> topic_total,
                                        double beta, std::size_t vocab_size);

// Fixed-point maximum-likelihood update of an asymmetric Dirichlet from
// per-document count histograms (rows x topics). Runs up to `max_rounds`
// rounds; values are clamped to [1e-6, 1e3].
std::vector<double> dirichlet_fixed_point(std::span<const std::uint32_t> counts,
                                          std::span<const std::uint32_t> totals,
                                          std::vector<double> alpha,
                                          std::size_t max_rounds = 20);

// Applies the fixed-point update to the state's document-topic counts.
std::vector<double> optimize_alpha(const PlmState& state);

// Pairs selected to share theta: a seeded shuffle marks the first
// round(fraction * n) pairs. Pairs already unlinked in the corpus stay
// unlinked.
std::vector<bool> select_links(const CorpusPair& corpus, double fraction,
                               std::uint64_t seed);

// Log joint probability of words and assignments under the collapsed model.
double log_joint(const PlmState& state);

// One Markov chain. Each language side draws from its own random stream, so
// with no links the two sides evolve exactly as two monolingual samplers.
class PlmSampler {
 public:
  PlmSampler(const CorpusPair& corpus, const PlmConfig& config,
             std::vector<bool> linked, std::uint64_t chain_seed);

  void sweep();
  void optimize_alpha();
  std::size_t sweeps() const { return sweeps_; }
  const PlmState& state() const { return state_; }

 private:
  void sample_side(std::size_t pair, Side side);

  const CorpusPair& corpus_;
  PlmState state_;
  std::array<std::mt19937_64, 2> rng_;
  std::vector<double> weights_;
  std::size_t sweeps_ = 0;
};

struct PlmOutput {
  std::string language_a;
  std::string language_b;
  std::size_t topics = 0;
  Vocabulary vocab_a;
  Vocabulary vocab_b;
  // Per document pair, per side. Linked pairs have identical rows.
  std::array<std::vector<std::vector<double>>, 2> theta;
  // topics x V per side.
  std::array<std::vector<std::vector<double>>, 2> phi;
  std::vector<double> alpha;
  std::size_t chosen_chain = 0;
  std::vector<double> chain_log_joint;

  const Vocabulary& vocab(Side s) const { return s == Side::A ? vocab_a : vocab_b; }
};

// Runs config.chains chains for config.iterations sweeps and returns
// posterior-mean estimates from the chain with the highest final log joint.
// `on_sweep`, when set, is called after every sweep of every chain.
PlmOutput train(const CorpusPair& corpus, const PlmConfig& config,
                const std::function<void(std::size_t chain, const PlmSampler&)>&
                    on_sweep = {});

// Posterior-mean estimates from (possibly averaged) counts.
PlmOutput estimate(const CorpusPair& corpus, const PlmState& state);

// Top-c words per language per topic by phi; ties go to the lower id.
std::vector<MultilingualTopic> top_topics(const PlmOutput& output, std::size_t c);

void export_topics(const PlmOutput& output, std::size_t c,
                   const std::filesystem::path& path);

// Rows "doc-id<TAB>p_0<TAB>...<TAB>p_{K-1}".
void write_theta_tsv(const PlmOutput& output, Side side, std::ostream& out);

// Binary phi cache: magic, version, K, both vocabularies, both phi matrices.
void save_phi(const PlmOutput& output, const std::filesystem::path& path);
PlmOutput load_phi(const std::filesystem::path& path);

}  // namespace xling

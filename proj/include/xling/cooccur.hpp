#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "xling/corpus.hpp"
#include "xling/topic.hpp"

namespace xling {

// Tokens to count, per language. Only these enter the df tables and pair
// tables of a restricted index.
struct TokenRestriction {
  std::unordered_set<std::string> a;
  std::unordered_set<std::string> b;
};

// Document-level occurrence statistics over a reference corpus. A token counts
// at most once per document. Cross-language pairs count document pairs where
// the first token is in the A half and the second in the B half.
class CooccurrenceIndex {
 public:
  std::size_t doc_count() const { return doc_count_; }
  const Vocabulary& vocab(Side s) const { return s == Side::A ? vocab_a_ : vocab_b_; }

  std::uint32_t df(Side side, std::string_view token) const;
  // Same-language co-document count; symmetric in its arguments.
  std::uint32_t joint(Side side, std::string_view w1, std::string_view w2) const;
  std::uint32_t joint_cross(std::string_view token_a, std::string_view token_b) const;

  std::uint32_t df_id(Side side, TokenId id) const;
  std::uint32_t joint_id(Side side, TokenId w1, TokenId w2) const;
  std::uint32_t joint_cross_id(TokenId a, TokenId b) const;

  // Number of tokens with nonzero df on a side.
  std::size_t tracked_tokens(Side side) const {
    return side == Side::A ? df_a_.size() : df_b_.size();
  }
  // Stored nonzero pair entries across all three pair tables.
  std::size_t pair_entries() const {
    return joint_aa_.size() + joint_bb_.size() + joint_ab_.size();
  }

  friend CooccurrenceIndex build_index(const CorpusPair&,
                                       const std::optional<TokenRestriction>&,
                                       unsigned);
  friend void save_index(const CooccurrenceIndex&, const std::filesystem::path&,
                         std::uint64_t);
  friend std::optional<CooccurrenceIndex> load_index(const std::filesystem::path&,
                                                     std::uint64_t);

 private:
  using Counts = std::unordered_map<std::uint64_t, std::uint32_t>;

  static std::uint64_t key(TokenId hi, TokenId lo) {
    return (static_cast<std::uint64_t>(hi) << 32) | lo;
  }
  static std::uint64_t mono_key(TokenId a, TokenId b) {
    return a < b ? key(a, b) : key(b, a);
  }

  std::size_t doc_count_ = 0;
  Vocabulary vocab_a_;
  Vocabulary vocab_b_;
  std::unordered_map<TokenId, std::uint32_t> df_a_;
  std::unordered_map<TokenId, std::uint32_t> df_b_;
  Counts joint_aa_;
  Counts joint_bb_;
  Counts joint_ab_;
};

// Counting may be split across `workers` threads; the result does not depend
// on the worker count.
CooccurrenceIndex build_index(const CorpusPair& corpus,
                              const std::optional<TokenRestriction>& restrict_to = {},
                              unsigned workers = 1);

// Restriction covering every word of the given topics.
TokenRestriction restriction_for(std::span<const MultilingualTopic> topics);

struct PairProbability {
  double a = 0.0;
  double b = 0.0;
  double joint = 0.0;
};

// Marginals and joint probability of a cross-language pair. Unknown tokens
// give zero marginals and zero joint.
PairProbability pair_probability(const CooccurrenceIndex& index,
                                 std::string_view token_a,
                                 std::string_view token_b);

// Same for two tokens of one language.
PairProbability mono_pair_probability(const CooccurrenceIndex& index, Side side,
                                      std::string_view w1, std::string_view w2);

// Binary cache. The corpus checksum is stored in the header; loading returns
// nullopt when the file is missing, has another format version, or was built
// from a corpus with a different checksum.
void save_index(const CooccurrenceIndex& index, const std::filesystem::path& path,
                std::uint64_t corpus_checksum);
std::optional<CooccurrenceIndex> load_index(const std::filesystem::path& path,
                                            std::uint64_t corpus_checksum);

// Windowed neighbor counts for one token. Keys are neighbor token strings.
struct ContextVector {
  std::string token;
  std::map<std::string, std::uint32_t> counts;
};

// Sums counts of tokens within +-window positions of every occurrence of
// `token` on one side of the corpus. Windows stop at document boundaries.
// An unknown token yields an empty vector.
ContextVector context_vector(const CorpusPair& corpus, Side side,
                             std::string_view token, int window = 5);

// One pass over the corpus for several tokens.
std::unordered_map<std::string, ContextVector> context_vectors(
    const CorpusPair& corpus, Side side, std::span<const std::string> tokens,
    int window = 5);

// Cosine of two count vectors; 0 when either has zero norm.
double cosine_similarity(const ContextVector& u, const ContextVector& v);

}  // namespace xling

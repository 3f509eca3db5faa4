#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace xling {

using TokenId = std::uint32_t;

// Which member of a language pair a token sequence or vocabulary belongs to.
enum class Side { A, B };

constexpr Side other(Side s) { return s == Side::A ? Side::B : Side::A; }

// Bidirectional token <-> identifier table. Identifiers are dense and assigned
// in first-insertion order.
class Vocabulary {
 public:
  TokenId insert(std::string_view token);
  std::optional<TokenId> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId, Hash, std::equal_to<>> ids_;
};

struct DocumentPair {
  std::size_t id = 0;
  std::vector<TokenId> tokens_a;
  std::vector<TokenId> tokens_b;
  // Whether both halves share one document-topic distribution in training.
  bool linked = true;

  const std::vector<TokenId>& tokens(Side s) const {
    return s == Side::A ? tokens_a : tokens_b;
  }
};

// Aligned bilingual document collection. Immutable once built.
class CorpusPair {
 public:
  CorpusPair() = default;
  CorpusPair(std::string language_a, std::string language_b,
             std::vector<DocumentPair> docs, Vocabulary vocab_a,
             Vocabulary vocab_b);

  const std::string& language(Side s) const {
    return s == Side::A ? language_a_ : language_b_;
  }
  const Vocabulary& vocab(Side s) const {
    return s == Side::A ? vocab_a_ : vocab_b_;
  }
  const std::vector<DocumentPair>& docs() const { return docs_; }
  std::size_t doc_count() const { return docs_.size(); }

  // Copy with the link flag replaced for every pair.
  CorpusPair with_links(const std::vector<bool>& linked) const;

  // Same corpus with the two languages exchanged.
  CorpusPair swapped() const;

 private:
  std::string language_a_;
  std::string language_b_;
  std::vector<DocumentPair> docs_;
  Vocabulary vocab_a_;
  Vocabulary vocab_b_;
};

using TokenizedDocument = std::vector<std::string>;

// True when the UTF-8 token contains at least one alphabetic code point.
bool has_letter(std::string_view token);

// Whitespace split of one pre-tokenized line.
TokenizedDocument split_tokens(std::string_view line);

// Builds a corpus from already tokenized documents. No filtering, no pruning.
// Vocabulary ids follow first appearance. Throws AlignmentError or
// EmptyCorpusError.
CorpusPair make_corpus(std::string language_a, std::string language_b,
                       const std::vector<TokenizedDocument>& docs_a,
                       const std::vector<TokenizedDocument>& docs_b);

// Removes every token type whose document frequency exceeds
// threshold * doc_count, independently for each language. Surviving ids keep
// their relative order.
CorpusPair prune(const CorpusPair& corpus, double threshold);

// Reads two aligned files (one document per line), drops tokens without a
// letter, and prunes frequent types.
CorpusPair load_parallel_corpus(const std::filesystem::path& path_a,
                                const std::filesystem::path& path_b,
                                std::string language_a, std::string language_b,
                                double prune_threshold = 0.3);

// Canonical on-disk form: one space-joined document per line.
void write_parallel_corpus(const CorpusPair& corpus,
                           const std::filesystem::path& path_a,
                           const std::filesystem::path& path_b);

// Keeps round(fraction * doc_count) pairs chosen by a seeded shuffle, in their
// original order. Vocabularies are shared with the source corpus.
CorpusPair subsample(const CorpusPair& corpus, double fraction,
                     std::uint64_t seed);

// FNV-1a over languages, vocabularies and token sequences.
std::uint64_t checksum(const CorpusPair& corpus);

}  // namespace xling

#include "xling/corpus.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_set>

#include "xling/errors.hpp"

namespace xling {

TokenId Vocabulary::insert(std::string_view token) {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.emplace_back(token);
  ids_.emplace(tokens_.back(), id);
  return id;
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  return std::nullopt;
}

CorpusPair::CorpusPair(std::string language_a, std::string language_b,
                       std::vector<DocumentPair> docs, Vocabulary vocab_a,
                       Vocabulary vocab_b)
    : language_a_(std::move(language_a)),
      language_b_(std::move(language_b)),
      docs_(std::move(docs)),
      vocab_a_(std::move(vocab_a)),
      vocab_b_(std::move(vocab_b)) {
  if (docs_.empty()) throw EmptyCorpusError("corpus has no documents");
}

CorpusPair CorpusPair::with_links(const std::vector<bool>& linked) const {
  if (linked.size() != docs_.size())
    throw std::invalid_argument("link mask size does not match corpus");
  CorpusPair out = *this;
  for (std::size_t d = 0; d < out.docs_.size(); ++d)
    out.docs_[d].linked = linked[d];
  return out;
}

CorpusPair CorpusPair::swapped() const {
  std::vector<DocumentPair> docs = docs_;
  for (auto& d : docs) std::swap(d.tokens_a, d.tokens_b);
  return CorpusPair(language_b_, language_a_, std::move(docs), vocab_b_, vocab_a_);
}

bool has_letter(std::string_view token) {
  const auto* s = reinterpret_cast<const uint8_t*>(token.data());
  const auto length = static_cast<int32_t>(token.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c >= 0 && u_isalpha(c)) return true;
  }
  return false;
}

TokenizedDocument split_tokens(std::string_view line) {
  TokenizedDocument out;
  std::size_t i = 0;
  auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' ||
           c == '\v';
  };
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

CorpusPair make_corpus(std::string language_a, std::string language_b,
                       const std::vector<TokenizedDocument>& docs_a,
                       const std::vector<TokenizedDocument>& docs_b) {
  if (docs_a.size() != docs_b.size())
    throw AlignmentError("document counts differ: " +
                         std::to_string(docs_a.size()) + " vs " +
                         std::to_string(docs_b.size()));
  if (docs_a.empty()) throw EmptyCorpusError("corpus has no documents");

  Vocabulary vocab_a, vocab_b;
  std::vector<DocumentPair> docs(docs_a.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    docs[d].id = d;
    docs[d].tokens_a.reserve(docs_a[d].size());
    for (const auto& t : docs_a[d]) docs[d].tokens_a.push_back(vocab_a.insert(t));
    docs[d].tokens_b.reserve(docs_b[d].size());
    for (const auto& t : docs_b[d]) docs[d].tokens_b.push_back(vocab_b.insert(t));
  }
  return CorpusPair(std::move(language_a), std::move(language_b),
                    std::move(docs), std::move(vocab_a), std::move(vocab_b));
}

namespace {

// Maps old ids to new ids for the types that survive pruning on one side.
std::vector<std::optional<TokenId>> surviving_ids(const CorpusPair& corpus,
                                                  Side side, double threshold,
                                                  Vocabulary& kept) {
  const auto& vocab = corpus.vocab(side);
  std::vector<std::size_t> df(vocab.size(), 0);
  std::vector<std::size_t> last_seen(vocab.size(), SIZE_MAX);
  for (const auto& doc : corpus.docs()) {
    for (TokenId t : doc.tokens(side)) {
      if (last_seen[t] != doc.id) {
        last_seen[t] = doc.id;
        ++df[t];
      }
    }
  }
  const double limit = threshold * static_cast<double>(corpus.doc_count());
  std::vector<std::optional<TokenId>> remap(vocab.size());
  for (TokenId t = 0; t < vocab.size(); ++t) {
    if (df[t] == 0) continue;
    if (static_cast<double>(df[t]) > limit) continue;
    remap[t] = kept.insert(vocab.token(t));
  }
  return remap;
}

}  // namespace

CorpusPair prune(const CorpusPair& corpus, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw std::invalid_argument("prune threshold must lie in (0, 1]");
  Vocabulary vocab_a, vocab_b;
  const auto remap_a = surviving_ids(corpus, Side::A, threshold, vocab_a);
  const auto remap_b = surviving_ids(corpus, Side::B, threshold, vocab_b);

  std::vector<DocumentPair> docs;
  docs.reserve(corpus.doc_count());
  for (const auto& src : corpus.docs()) {
    DocumentPair doc;
    doc.id = src.id;
    doc.linked = src.linked;
    for (TokenId t : src.tokens_a)
      if (remap_a[t]) doc.tokens_a.push_back(*remap_a[t]);
    for (TokenId t : src.tokens_b)
      if (remap_b[t]) doc.tokens_b.push_back(*remap_b[t]);
    docs.push_back(std::move(doc));
  }
  return CorpusPair(corpus.language(Side::A), corpus.language(Side::B),
                    std::move(docs), std::move(vocab_a), std::move(vocab_b));
}

namespace {

std::vector<TokenizedDocument> read_documents(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<TokenizedDocument> docs;
  std::string line;
  while (std::getline(in, line)) {
    TokenizedDocument doc;
    for (auto& t : split_tokens(line))
      if (has_letter(t)) doc.push_back(std::move(t));
    docs.push_back(std::move(doc));
  }
  if (docs.empty()) throw EmptyCorpusError(path.string() + " is empty");
  return docs;
}

}  // namespace

CorpusPair load_parallel_corpus(const std::filesystem::path& path_a,
                                const std::filesystem::path& path_b,
                                std::string language_a, std::string language_b,
                                double prune_threshold) {
  if (!(prune_threshold > 0.0 && prune_threshold <= 1.0))
    throw std::invalid_argument("prune threshold must lie in (0, 1]");
  const auto docs_a = read_documents(path_a);
  const auto docs_b = read_documents(path_b);
  if (docs_a.size() != docs_b.size())
    throw AlignmentError(path_a.string() + " has " +
                         std::to_string(docs_a.size()) + " lines but " +
                         path_b.string() + " has " +
                         std::to_string(docs_b.size()));
  return prune(make_corpus(std::move(language_a), std::move(language_b), docs_a,
                           docs_b),
               prune_threshold);
}

void write_parallel_corpus(const CorpusPair& corpus,
                           const std::filesystem::path& path_a,
                           const std::filesystem::path& path_b) {
  for (Side side : {Side::A, Side::B}) {
    std::ofstream out(side == Side::A ? path_a : path_b);
    if (!out) throw Error("cannot write corpus file");
    const auto& vocab = corpus.vocab(side);
    for (const auto& doc : corpus.docs()) {
      const auto& tokens = doc.tokens(side);
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out << ' ';
        out << vocab.token(tokens[i]);
      }
      out << '\n';
    }
  }
}

CorpusPair subsample(const CorpusPair& corpus, double fraction,
                     std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("sample fraction must lie in (0, 1]");
  const std::size_t n = corpus.doc_count();
  const auto keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(keep);
  std::sort(order.begin(), order.end());

  std::vector<DocumentPair> docs;
  docs.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    DocumentPair doc = corpus.docs()[order[i]];
    doc.id = i;
    docs.push_back(std::move(doc));
  }
  return CorpusPair(corpus.language(Side::A), corpus.language(Side::B),
                    std::move(docs), corpus.vocab(Side::A), corpus.vocab(Side::B));
}

namespace {

struct Fnv1a {
  std::uint64_t h = 14695981039346656037ull;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 1099511628211ull;
    }
  }
  void str(std::string_view s) {
    const std::uint64_t n = s.size();
    bytes(&n, sizeof n);
    bytes(s.data(), s.size());
  }
};

}  // namespace

std::uint64_t checksum(const CorpusPair& corpus) {
  Fnv1a f;
  for (Side side : {Side::A, Side::B}) {
    f.str(corpus.language(side));
    for (const auto& t : corpus.vocab(side).tokens()) f.str(t);
  }
  for (const auto& doc : corpus.docs()) {
    for (Side side : {Side::A, Side::B}) {
      const auto& tokens = doc.tokens(side);
      const std::uint64_t n = tokens.size();
      f.bytes(&n, sizeof n);
      f.bytes(tokens.data(), tokens.size() * sizeof(TokenId));
    }
  }
  return f.h;
}

}  // namespace xling

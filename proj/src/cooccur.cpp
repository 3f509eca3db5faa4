#include "xling/cooccur.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>
#include <vector>

#include "xling/errors.hpp"

namespace xling {

std::uint32_t CooccurrenceIndex::df_id(Side side, TokenId id) const {
  const auto& table = side == Side::A ? df_a_ : df_b_;
  auto it = table.find(id);
  return it == table.end() ? 0 : it->second;
}

std::uint32_t CooccurrenceIndex::joint_id(Side side, TokenId w1, TokenId w2) const {
  if (w1 == w2) return df_id(side, w1);
  const auto& table = side == Side::A ? joint_aa_ : joint_bb_;
  auto it = table.find(mono_key(w1, w2));
  return it == table.end() ? 0 : it->second;
}

std::uint32_t CooccurrenceIndex::joint_cross_id(TokenId a, TokenId b) const {
  auto it = joint_ab_.find(key(a, b));
  return it == joint_ab_.end() ? 0 : it->second;
}

std::uint32_t CooccurrenceIndex::df(Side side, std::string_view token) const {
  auto id = vocab(side).find(token);
  return id ? df_id(side, *id) : 0;
}

std::uint32_t CooccurrenceIndex::joint(Side side, std::string_view w1,
                                       std::string_view w2) const {
  auto i = vocab(side).find(w1);
  auto j = vocab(side).find(w2);
  return i && j ? joint_id(side, *i, *j) : 0;
}

std::uint32_t CooccurrenceIndex::joint_cross(std::string_view token_a,
                                             std::string_view token_b) const {
  auto i = vocab_a_.find(token_a);
  auto j = vocab_b_.find(token_b);
  return i && j ? joint_cross_id(*i, *j) : 0;
}

namespace {

struct PartialCounts {
  std::unordered_map<TokenId, std::uint32_t> df_a, df_b;
  std::unordered_map<std::uint64_t, std::uint32_t> aa, bb, ab;
};

std::vector<bool> allowed_mask(const Vocabulary& vocab,
                               const std::unordered_set<std::string>* allowed) {
  std::vector<bool> mask(vocab.size(), allowed == nullptr);
  if (allowed)
    for (const auto& t : *allowed)
      if (auto id = vocab.find(t)) mask[*id] = true;
  return mask;
}

std::vector<TokenId> unique_allowed(const std::vector<TokenId>& tokens,
                                    const std::vector<bool>& mask) {
  std::vector<TokenId> out;
  out.reserve(tokens.size());
  for (TokenId t : tokens)
    if (mask[t]) out.push_back(t);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

template <typename Map>
void merge_into(Map& dst, const Map& src) {
  for (const auto& [k, v] : src) dst[k] += v;
}

}  // namespace

CooccurrenceIndex build_index(const CorpusPair& corpus,
                              const std::optional<TokenRestriction>& restrict_to,
                              unsigned workers) {
  CooccurrenceIndex index;
  index.doc_count_ = corpus.doc_count();
  index.vocab_a_ = corpus.vocab(Side::A);
  index.vocab_b_ = corpus.vocab(Side::B);

  const auto mask_a =
      allowed_mask(index.vocab_a_, restrict_to ? &restrict_to->a : nullptr);
  const auto mask_b =
      allowed_mask(index.vocab_b_, restrict_to ? &restrict_to->b : nullptr);

  const auto& docs = corpus.docs();
  workers = std::max(1u, std::min<unsigned>(workers, docs.size()));
  std::vector<PartialCounts> parts(workers);

  auto count_range = [&](std::size_t begin, std::size_t end, PartialCounts& out) {
    using Key = std::uint64_t;
    for (std::size_t d = begin; d < end; ++d) {
      const auto a = unique_allowed(docs[d].tokens_a, mask_a);
      const auto b = unique_allowed(docs[d].tokens_b, mask_b);
      for (std::size_t i = 0; i < a.size(); ++i) {
        ++out.df_a[a[i]];
        for (std::size_t j = i + 1; j < a.size(); ++j)
          ++out.aa[(static_cast<Key>(a[i]) << 32) | a[j]];
        for (TokenId v : b) ++out.ab[(static_cast<Key>(a[i]) << 32) | v];
      }
      for (std::size_t i = 0; i < b.size(); ++i) {
        ++out.df_b[b[i]];
        for (std::size_t j = i + 1; j < b.size(); ++j)
          ++out.bb[(static_cast<Key>(b[i]) << 32) | b[j]];
      }
    }
  };

  const std::size_t chunk = (docs.size() + workers - 1) / workers;
  if (workers == 1) {
    count_range(0, docs.size(), parts[0]);
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(docs.size(), w * chunk);
      const std::size_t end = std::min(docs.size(), begin + chunk);
      threads.emplace_back(count_range, begin, end, std::ref(parts[w]));
    }
    for (auto& t : threads) t.join();
  }

  index.df_a_ = std::move(parts[0].df_a);
  index.df_b_ = std::move(parts[0].df_b);
  index.joint_aa_ = std::move(parts[0].aa);
  index.joint_bb_ = std::move(parts[0].bb);
  index.joint_ab_ = std::move(parts[0].ab);
  for (unsigned w = 1; w < workers; ++w) {
    merge_into(index.df_a_, parts[w].df_a);
    merge_into(index.df_b_, parts[w].df_b);
    merge_into(index.joint_aa_, parts[w].aa);
    merge_into(index.joint_bb_, parts[w].bb);
    merge_into(index.joint_ab_, parts[w].ab);
  }
  return index;
}

TokenRestriction restriction_for(std::span<const MultilingualTopic> topics) {
  TokenRestriction r;
  for (const auto& t : topics) {
    r.a.insert(t.words_a.begin(), t.words_a.end());
    r.b.insert(t.words_b.begin(), t.words_b.end());
  }
  return r;
}

PairProbability pair_probability(const CooccurrenceIndex& index,
                                 std::string_view token_a,
                                 std::string_view token_b) {
  const double n = static_cast<double>(index.doc_count());
  return {index.df(Side::A, token_a) / n, index.df(Side::B, token_b) / n,
          index.joint_cross(token_a, token_b) / n};
}

PairProbability mono_pair_probability(const CooccurrenceIndex& index, Side side,
                                      std::string_view w1, std::string_view w2) {
  const double n = static_cast<double>(index.doc_count());
  return {index.df(side, w1) / n, index.df(side, w2) / n,
          index.joint(side, w1, w2) / n};
}

// ---------------------------------------------------------------------------
// Binary cache
//
//   magic "XLCI" | u32 version | u64 corpus checksum | u64 doc count
//   vocab A, vocab B        : u64 count, then (u64 length, bytes) per token
//   df A, df B              : u64 count, then (u32 id, u32 df), sorted by id
//   pairs AA, BB, AB        : u64 count, then (u64 key, u32 count), sorted

namespace {

constexpr char kMagic[4] = {'X', 'L', 'C', 'I'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  template <typename T>
  void pod(T v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  template <typename Map>
  void sorted(const Map& m) {
    std::vector<std::pair<typename Map::key_type, typename Map::mapped_type>> v(
        m.begin(), m.end());
    std::sort(v.begin(), v.end());
    pod<std::uint64_t>(v.size());
    for (const auto& [k, c] : v) {
      pod(k);
      pod(c);
    }
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  explicit Reader(std::ifstream& in) : in_(in) {}
  template <typename T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in_) throw FormatError("truncated index cache");
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    if (!in_) throw FormatError("truncated index cache");
    return s;
  }
  template <typename Map>
  Map map() {
    Map m;
    const auto n = pod<std::uint64_t>();
    m.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      auto k = pod<typename Map::key_type>();
      m[k] = pod<typename Map::mapped_type>();
    }
    return m;
  }

 private:
  std::ifstream& in_;
};

}  // namespace

void save_index(const CooccurrenceIndex& index, const std::filesystem::path& path,
                std::uint64_t corpus_checksum) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  Writer w(out);
  out.write(kMagic, sizeof kMagic);
  w.pod(kVersion);
  w.pod(corpus_checksum);
  w.pod<std::uint64_t>(index.doc_count_);
  for (const auto* vocab : {&index.vocab_a_, &index.vocab_b_}) {
    w.pod<std::uint64_t>(vocab->size());
    for (const auto& t : vocab->tokens()) w.str(t);
  }
  w.sorted(index.df_a_);
  w.sorted(index.df_b_);
  w.sorted(index.joint_aa_);
  w.sorted(index.joint_bb_);
  w.sorted(index.joint_ab_);
  if (!out) throw Error("failed writing " + path.string());
}

std::optional<CooccurrenceIndex> load_index(const std::filesystem::path& path,
                                            std::uint64_t corpus_checksum) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[4];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) return std::nullopt;
  Reader r(in);
  if (r.pod<std::uint32_t>() != kVersion) return std::nullopt;
  if (r.pod<std::uint64_t>() != corpus_checksum) return std::nullopt;

  CooccurrenceIndex index;
  index.doc_count_ = r.pod<std::uint64_t>();
  for (auto* vocab : {&index.vocab_a_, &index.vocab_b_}) {
    const auto n = r.pod<std::uint64_t>();
    for (std::uint64_t i = 0; i < n; ++i) vocab->insert(r.str());
  }
  index.df_a_ = r.map<decltype(index.df_a_)>();
  index.df_b_ = r.map<decltype(index.df_b_)>();
  index.joint_aa_ = r.map<CooccurrenceIndex::Counts>();
  index.joint_bb_ = r.map<CooccurrenceIndex::Counts>();
  index.joint_ab_ = r.map<CooccurrenceIndex::Counts>();
  return index;
}

// ---------------------------------------------------------------------------
// Context vectors

std::unordered_map<std::string, ContextVector> context_vectors(
    const CorpusPair& corpus, Side side, std::span<const std::string> tokens,
    int window) {
  if (window < 1) throw std::invalid_argument("context window must be >= 1");
  const auto& vocab = corpus.vocab(side);
  std::unordered_map<std::string, ContextVector> out;
  // Per vocabulary id: index into `targets`, or -1.
  std::vector<int> slot(vocab.size(), -1);
  std::vector<std::unordered_map<TokenId, std::uint32_t>> raw;
  std::vector<std::string> targets;
  for (const auto& t : tokens) {
    out.try_emplace(t, ContextVector{t, {}});
    auto id = vocab.find(t);
    if (!id || slot[*id] >= 0) continue;
    slot[*id] = static_cast<int>(targets.size());
    targets.push_back(t);
    raw.emplace_back();
  }
  if (targets.empty()) return out;

  const auto w = static_cast<std::ptrdiff_t>(window);
  for (const auto& doc : corpus.docs()) {
    const auto& seq = doc.tokens(side);
    const auto n = static_cast<std::ptrdiff_t>(seq.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const int s = slot[seq[i]];
      if (s < 0) continue;
      auto& counts = raw[s];
      const auto lo = std::max<std::ptrdiff_t>(0, i - w);
      const auto hi = std::min<std::ptrdiff_t>(n - 1, i + w);
      for (auto j = lo; j <= hi; ++j)
        if (j != i) ++counts[seq[j]];
    }
  }
  for (std::size_t s = 0; s < targets.size(); ++s) {
    auto& cv = out[targets[s]];
    for (const auto& [id, c] : raw[s]) cv.counts[vocab.token(id)] = c;
  }
  return out;
}

ContextVector context_vector(const CorpusPair& corpus, Side side,
                             std::string_view token, int window) {
  const std::string t(token);
  auto all = context_vectors(corpus, side, std::span<const std::string>(&t, 1), window);
  return std::move(all.at(t));
}

double cosine_similarity(const ContextVector& u, const ContextVector& v) {
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (const auto& [_, c] : u.counts) nu += static_cast<double>(c) * c;
  for (const auto& [_, c] : v.counts) nv += static_cast<double>(c) * c;
  if (nu == 0.0 || nv == 0.0) return 0.0;
  const auto& small = u.counts.size() <= v.counts.size() ? u.counts : v.counts;
  const auto& large = u.counts.size() <= v.counts.size() ? v.counts : u.counts;
  for (const auto& [k, c] : small)
    if (auto it = large.find(k); it != large.end())
      dot += static_cast<double>(c) * it->second;
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), 0.0, 1.0);
}

}  // namespace xling

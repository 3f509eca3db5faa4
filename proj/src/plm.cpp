#include "xling/plm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>
#include <thread>

#include <boost/math/special_functions/digamma.hpp>

#include "xling/errors.hpp"

namespace xling {

namespace {

constexpr double kAlphaMin = 1e-6;
constexpr double kAlphaMax = 1e3;

int idx(Side s) { return static_cast<int>(s); }

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (!in || !(in >> std::ws).eof())
    throw UsageError("bad value for " + key + ": '" + value + "'");
  return out;
}

}  // namespace

void validate(const PlmConfig& c) {
  if (c.topics < 1) throw UsageError("topics must be >= 1");
  if (!(c.alpha > 0.0)) throw UsageError("alpha must be > 0");
  if (!(c.beta > 0.0)) throw UsageError("beta must be > 0");
  if (c.chains < 1) throw UsageError("chains must be >= 1");
  if (!(c.link_fraction >= 0.0 && c.link_fraction <= 1.0))
    throw UsageError("link-fraction must lie in [0, 1]");
  if (c.average_last > c.iterations)
    throw UsageError("average-last cannot exceed iterations");
}

void apply_setting(PlmConfig& c, const std::string& key, const std::string& value) {
  if (key == "topics") c.topics = parse_number<std::size_t>(key, value);
  else if (key == "alpha") c.alpha = parse_number<double>(key, value);
  else if (key == "beta") c.beta = parse_number<double>(key, value);
  else if (key == "iterations") c.iterations = parse_number<std::size_t>(key, value);
  else if (key == "chains") c.chains = parse_number<std::size_t>(key, value);
  else if (key == "optimize-interval") c.optimize_interval = parse_number<std::size_t>(key, value);
  else if (key == "link-fraction") c.link_fraction = parse_number<double>(key, value);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "average-last") c.average_last = parse_number<std::size_t>(key, value);
  else if (key == "max-cells") c.max_cells = parse_number<std::size_t>(key, value);
  else if (key == "workers") c.workers = parse_number<unsigned>(key, value);
  else throw UsageError("unknown plm setting: " + key);
}

PlmConfig read_plm_config(std::istream& in, PlmConfig base) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(line_no) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    apply_setting(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

// ---------------------------------------------------------------------------

PlmState recount(const CorpusPair& corpus, std::size_t topics,
                 const std::vector<bool>& linked,
                 const std::array<std::vector<std::vector<std::uint32_t>>, 2>& assignments,
                 std::vector<double> alpha, double beta) {
  PlmState s;
  s.topics = topics;
  s.alpha = std::move(alpha);
  s.beta = beta;
  s.assignments = assignments;
  const std::size_t n = corpus.doc_count();
  for (Side side : {Side::A, Side::B}) {
    s.vocab_size[idx(side)] = corpus.vocab(side).size();
    s.word_topic[idx(side)].assign(s.vocab_size[idx(side)] * topics, 0);
    s.topic_total[idx(side)].assign(topics, 0);
    s.theta_row[idx(side)].resize(n);
  }
  std::size_t rows = 0;
  for (std::size_t d = 0; d < n; ++d) {
    s.theta_row[0][d] = rows++;
    s.theta_row[1][d] = linked[d] ? s.theta_row[0][d] : rows++;
  }
  s.doc_topic.assign(rows * topics, 0);
  s.doc_length.assign(rows, 0);

  for (std::size_t d = 0; d < n; ++d) {
    for (Side side : {Side::A, Side::B}) {
      const auto& tokens = corpus.docs()[d].tokens(side);
      const auto& z = assignments[idx(side)][d];
      const std::size_t r = s.theta_row[idx(side)][d];
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        ++s.doc_topic[r * topics + z[i]];
        ++s.doc_length[r];
        ++s.word_topic[idx(side)][std::size_t{tokens[i]} * topics + z[i]];
        ++s.topic_total[idx(side)][z[i]];
      }
    }
  }
  return s;
}

bool counts_consistent(const CorpusPair& corpus, const PlmState& state) {
  std::vector<bool> linked(corpus.doc_count());
  for (std::size_t d = 0; d < linked.size(); ++d)
    linked[d] = state.theta_row[0][d] == state.theta_row[1][d];
  const PlmState fresh =
      recount(corpus, state.topics, linked, state.assignments, state.alpha, state.beta);
  if (fresh.doc_topic != state.doc_topic || fresh.doc_length != state.doc_length)
    return false;
  for (int s = 0; s < 2; ++s) {
    if (fresh.word_topic[s] != state.word_topic[s]) return false;
    if (fresh.topic_total[s] != state.topic_total[s]) return false;
  }
  // Row sums must equal row lengths, word-topic column sums the topic totals.
  for (std::size_t r = 0; r < state.rows(); ++r) {
    auto row = state.row(r);
    if (std::accumulate(row.begin(), row.end(), std::uint64_t{0}) != state.doc_length[r])
      return false;
  }
  for (int s = 0; s < 2; ++s) {
    std::vector<std::uint64_t> sums(state.topics, 0);
    for (std::size_t i = 0; i < state.word_topic[s].size(); ++i)
      sums[i % state.topics] += state.word_topic[s][i];
    for (std::size_t k = 0; k < state.topics; ++k)
      if (sums[k] != state.topic_total[s][k]) return false;
  }
  return true;
}

std::vector<double> conditional_weights(std::span<const std::uint32_t> doc_topic,
                                        std::span<const double> alpha,
                                        std::span<const std::uint32_t> word_topic,
                                        std::span<const std::uint32_t> topic_total,
                                        double beta, std::size_t vocab_size) {
  const double vb = static_cast<double>(vocab_size) * beta;
  std::vector<double> w(doc_topic.size());
  for (std::size_t k = 0; k < w.size(); ++k)
    w[k] = (doc_topic[k] + alpha[k]) * (word_topic[k] + beta) / (topic_total[k] + vb);
  return w;
}

std::vector<double> dirichlet_fixed_point(std::span<const std::uint32_t> counts,
                                          std::span<const std::uint32_t> totals,
                                          std::vector<double> alpha,
                                          std::size_t max_rounds) {
  using boost::math::digamma;
  const std::size_t k_count = alpha.size();
  const std::size_t rows = totals.size();
  for (std::size_t round = 0; round < max_rounds; ++round) {
    const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    double denom = 0.0;
    const double psi_sum = digamma(alpha_sum);
    for (std::size_t r = 0; r < rows; ++r)
      if (totals[r] > 0) denom += digamma(totals[r] + alpha_sum) - psi_sum;
    if (!(denom > 0.0)) return alpha;

    double change = 0.0;
    std::vector<double> next(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
      const double psi_k = digamma(alpha[k]);
      double num = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        const auto c = counts[r * k_count + k];
        if (c > 0) num += digamma(c + alpha[k]) - psi_k;
      }
      next[k] = std::clamp(alpha[k] * num / denom, kAlphaMin, kAlphaMax);
      change = std::max(change, std::abs(next[k] - alpha[k]));
    }
    alpha = std::move(next);
    if (change < 1e-10) break;
  }
  return alpha;
}

std::vector<double> optimize_alpha(const PlmState& state) {
  return dirichlet_fixed_point(state.doc_topic, state.doc_length, state.alpha);
}

std::vector<bool> select_links(const CorpusPair& corpus, double fraction,
                               std::uint64_t seed) {
  const std::size_t n = corpus.doc_count();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<bool> linked(n, false);
  for (std::size_t i = 0; i < std::min(take, n); ++i)
    linked[order[i]] = corpus.docs()[order[i]].linked;
  return linked;
}

double log_joint(const PlmState& s) {
  const std::size_t K = s.topics;
  double ll = 0.0;
  for (int side = 0; side < 2; ++side) {
    const double V = static_cast<double>(s.vocab_size[side]);
    if (V == 0) continue;
    const double lg_beta = std::lgamma(s.beta);
    ll += static_cast<double>(K) * std::lgamma(V * s.beta);
    for (std::size_t k = 0; k < K; ++k)
      ll -= std::lgamma(s.topic_total[side][k] + V * s.beta);
    for (auto c : s.word_topic[side])
      if (c > 0) ll += std::lgamma(c + s.beta) - lg_beta;
  }
  const double alpha_sum = std::accumulate(s.alpha.begin(), s.alpha.end(), 0.0);
  double lg_alpha = 0.0;
  for (double a : s.alpha) lg_alpha += std::lgamma(a);
  for (std::size_t r = 0; r < s.rows(); ++r) {
    ll += std::lgamma(alpha_sum) - lg_alpha - std::lgamma(s.doc_length[r] + alpha_sum);
    for (std::size_t k = 0; k < K; ++k) ll += std::lgamma(s.doc_topic[r * K + k] + s.alpha[k]);
  }
  return ll;
}

// ---------------------------------------------------------------------------

PlmSampler::PlmSampler(const CorpusPair& corpus, const PlmConfig& config,
                       std::vector<bool> linked, std::uint64_t chain_seed)
    : corpus_(corpus) {
  validate(config);
  const std::size_t K = config.topics;
  const std::size_t cells = K * (corpus.vocab(Side::A).size() + corpus.vocab(Side::B).size());
  if (cells > config.max_cells)
    throw CapacityError("topics x vocabulary = " + std::to_string(cells) +
                        " exceeds the limit of " + std::to_string(config.max_cells));
  if (linked.size() != corpus.doc_count())
    throw std::invalid_argument("link mask size does not match corpus");

  for (Side side : {Side::A, Side::B}) {
    std::seed_seq seq{static_cast<std::uint32_t>(chain_seed),
                      static_cast<std::uint32_t>(chain_seed >> 32),
                      static_cast<std::uint32_t>(idx(side))};
    rng_[idx(side)].seed(seq);
  }

  std::array<std::vector<std::vector<std::uint32_t>>, 2> z;
  for (Side side : {Side::A, Side::B}) {
    auto& rng = rng_[idx(side)];
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(K - 1));
    z[idx(side)].resize(corpus.doc_count());
    for (std::size_t d = 0; d < corpus.doc_count(); ++d) {
      auto& zd = z[idx(side)][d];
      zd.resize(corpus.docs()[d].tokens(side).size());
      for (auto& label : zd) label = pick(rng);
    }
  }
  state_ = recount(corpus, K, linked, z, std::vector<double>(K, config.alpha), config.beta);
  weights_.resize(K);
}

void PlmSampler::sample_side(std::size_t pair, Side side) {
  const int s = idx(side);
  const std::size_t K = state_.topics;
  const auto& tokens = corpus_.docs()[pair].tokens(side);
  auto& z = state_.assignments[s][pair];
  const std::size_t r = state_.theta_row[s][pair];
  std::uint32_t* row = state_.doc_topic.data() + r * K;
  std::uint32_t* totals = state_.topic_total[s].data();
  const double vb = static_cast<double>(state_.vocab_size[s]) * state_.beta;
  const double beta = state_.beta;
  const double* alpha = state_.alpha.data();
  auto& rng = rng_[s];

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::uint32_t* wt = state_.word_topic[s].data() + std::size_t{tokens[i]} * K;
    const std::uint32_t old = z[i];
    --row[old];
    --wt[old];
    --totals[old];

    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      total += (row[k] + alpha[k]) * (wt[k] + beta) / (totals[k] + vb);
      weights_[k] = total;
    }
    const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    std::uint32_t next = 0;
    while (next + 1 < K && weights_[next] <= u) ++next;

    z[i] = next;
    ++row[next];
    ++wt[next];
    ++totals[next];
  }
}

void PlmSampler::sweep() {
  for (std::size_t d = 0; d < corpus_.doc_count(); ++d) {
    sample_side(d, Side::A);
    sample_side(d, Side::B);
  }
  ++sweeps_;
}

void PlmSampler::optimize_alpha() { state_.alpha = xling::optimize_alpha(state_); }

// ---------------------------------------------------------------------------

namespace {

// theta/phi from count tables that may be averages over several sweeps.
PlmOutput estimate_from(const CorpusPair& corpus, const PlmState& shape,
                        const std::vector<double>& doc_topic,
                        const std::array<std::vector<double>, 2>& word_topic) {
  const std::size_t K = shape.topics;
  PlmOutput out;
  out.language_a = corpus.language(Side::A);
  out.language_b = corpus.language(Side::B);
  out.topics = K;
  out.vocab_a = corpus.vocab(Side::A);
  out.vocab_b = corpus.vocab(Side::B);
  out.alpha = shape.alpha;
  const double alpha_sum = std::accumulate(shape.alpha.begin(), shape.alpha.end(), 0.0);

  std::vector<std::vector<double>> rows(shape.rows(), std::vector<double>(K));
  for (std::size_t r = 0; r < shape.rows(); ++r) {
    double len = 0.0;
    for (std::size_t k = 0; k < K; ++k) len += doc_topic[r * K + k];
    for (std::size_t k = 0; k < K; ++k)
      rows[r][k] = (doc_topic[r * K + k] + shape.alpha[k]) / (len + alpha_sum);
  }
  for (int s = 0; s < 2; ++s) {
    out.theta[s].reserve(corpus.doc_count());
    for (std::size_t d = 0; d < corpus.doc_count(); ++d)
      out.theta[s].push_back(rows[shape.theta_row[s][d]]);

    const std::size_t V = shape.vocab_size[s];
    const double vb = static_cast<double>(V) * shape.beta;
    std::vector<double> totals(K, 0.0);
    for (std::size_t w = 0; w < V; ++w)
      for (std::size_t k = 0; k < K; ++k) totals[k] += word_topic[s][w * K + k];
    out.phi[s].assign(K, std::vector<double>(V));
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t w = 0; w < V; ++w)
        out.phi[s][k][w] = (word_topic[s][w * K + k] + shape.beta) / (totals[k] + vb);
  }
  return out;
}

struct ChainResult {
  PlmOutput output;
  double log_joint = 0.0;
};

ChainResult run_chain(const CorpusPair& corpus, const PlmConfig& config,
                      const std::vector<bool>& linked, std::size_t chain,
                      const std::function<void(std::size_t, const PlmSampler&)>& on_sweep) {
  const std::uint64_t chain_seed =
      config.seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(chain) + 1;
  PlmSampler sampler(corpus, config, linked, chain_seed);

  std::vector<double> avg_doc;
  std::array<std::vector<double>, 2> avg_word;
  const std::size_t first_averaged =
      config.average_last > 0 ? config.iterations - config.average_last + 1 : SIZE_MAX;

  for (std::size_t it = 1; it <= config.iterations; ++it) {
    sampler.sweep();
    if (config.optimize_interval > 0 && it % config.optimize_interval == 0)
      sampler.optimize_alpha();
    if (on_sweep) on_sweep(chain, sampler);
    if (it >= first_averaged) {
      const auto& s = sampler.state();
      if (avg_doc.empty()) {
        avg_doc.assign(s.doc_topic.size(), 0.0);
        for (int side = 0; side < 2; ++side) avg_word[side].assign(s.word_topic[side].size(), 0.0);
      }
      for (std::size_t i = 0; i < s.doc_topic.size(); ++i) avg_doc[i] += s.doc_topic[i];
      for (int side = 0; side < 2; ++side)
        for (std::size_t i = 0; i < s.word_topic[side].size(); ++i)
          avg_word[side][i] += s.word_topic[side][i];
    }
  }

  const auto& s = sampler.state();
  ChainResult result;
  result.log_joint = log_joint(s);
  if (avg_doc.empty()) {
    std::vector<double> doc(s.doc_topic.begin(), s.doc_topic.end());
    std::array<std::vector<double>, 2> word;
    for (int side = 0; side < 2; ++side)
      word[side].assign(s.word_topic[side].begin(), s.word_topic[side].end());
    result.output = estimate_from(corpus, s, doc, word);
  } else {
    const double m = static_cast<double>(config.average_last);
    for (auto& v : avg_doc) v /= m;
    for (auto& side : avg_word)
      for (auto& v : side) v /= m;
    result.output = estimate_from(corpus, s, avg_doc, avg_word);
  }
  return result;
}

}  // namespace

PlmOutput estimate(const CorpusPair& corpus, const PlmState& state) {
  std::vector<double> doc(state.doc_topic.begin(), state.doc_topic.end());
  std::array<std::vector<double>, 2> word;
  for (int s = 0; s < 2; ++s)
    word[s].assign(state.word_topic[s].begin(), state.word_topic[s].end());
  return estimate_from(corpus, state, doc, word);
}

PlmOutput train(const CorpusPair& corpus, const PlmConfig& config,
                const std::function<void(std::size_t, const PlmSampler&)>& on_sweep) {
  validate(config);
  const auto linked = select_links(corpus, config.link_fraction, config.seed);

  std::vector<ChainResult> results(config.chains);
  const unsigned workers =
      std::max(1u, std::min<unsigned>(config.workers, static_cast<unsigned>(config.chains)));
  if (workers == 1 || on_sweep) {
    for (std::size_t c = 0; c < config.chains; ++c)
      results[c] = run_chain(corpus, config, linked, c, on_sweep);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t c = w; c < config.chains; c += workers)
            results[c] = run_chain(corpus, config, linked, c, {});
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::size_t best = 0;
  std::vector<double> lls;
  for (std::size_t c = 0; c < results.size(); ++c) {
    lls.push_back(results[c].log_joint);
    if (results[c].log_joint > results[best].log_joint) best = c;
  }
  PlmOutput out = std::move(results[best].output);
  out.chosen_chain = best;
  out.chain_log_joint = std::move(lls);
  return out;
}

std::vector<MultilingualTopic> top_topics(const PlmOutput& output, std::size_t c) {
  std::vector<MultilingualTopic> topics;
  for (std::size_t k = 0; k < output.topics; ++k) {
    MultilingualTopic t{output.language_a, output.language_b, {}, {}};
    for (Side side : {Side::A, Side::B}) {
      const auto& phi = output.phi[idx(side)][k];
      if (c > phi.size())
        throw DegenerateInputError("cardinality " + std::to_string(c) +
                                   " exceeds vocabulary size " + std::to_string(phi.size()));
      std::vector<TokenId> ids(phi.size());
      std::iota(ids.begin(), ids.end(), 0);
      std::partial_sort(ids.begin(), ids.begin() + static_cast<long>(c), ids.end(),
                        [&](TokenId x, TokenId y) {
                          return phi[x] != phi[y] ? phi[x] > phi[y] : x < y;
                        });
      auto& words = side == Side::A ? t.words_a : t.words_b;
      for (std::size_t i = 0; i < c; ++i) words.push_back(output.vocab(side).token(ids[i]));
    }
    topics.push_back(std::move(t));
  }
  return topics;
}

void export_topics(const PlmOutput& output, std::size_t c,
                   const std::filesystem::path& path) {
  write_topics(path, top_topics(output, c));
}

void write_theta_tsv(const PlmOutput& output, Side side, std::ostream& out) {
  const auto& theta = output.theta[idx(side)];
  out.precision(12);
  for (std::size_t d = 0; d < theta.size(); ++d) {
    out << d;
    for (double p : theta[d]) out << '\t' << p;
    out << '\n';
  }
}

namespace {
constexpr char kPhiMagic[4] = {'X', 'L', 'P', 'H'};
constexpr std::uint32_t kPhiVersion = 1;
}  // namespace

void save_phi(const PlmOutput& output, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  auto pod = [&](auto v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
  auto str = [&](const std::string& s) {
    pod(static_cast<std::uint64_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  };
  out.write(kPhiMagic, 4);
  pod(kPhiVersion);
  pod(static_cast<std::uint64_t>(output.topics));
  str(output.language_a);
  str(output.language_b);
  for (Side side : {Side::A, Side::B}) {
    const auto& vocab = output.vocab(side);
    pod(static_cast<std::uint64_t>(vocab.size()));
    for (const auto& t : vocab.tokens()) str(t);
    for (const auto& row : output.phi[idx(side)])
      out.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!out) throw Error("failed writing " + path.string());
}

PlmOutput load_phi(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  auto fail = [&] { throw FormatError(path.string() + ": not a phi cache"); };
  auto pod = [&]<typename T>(T) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) fail();
    return v;
  };
  auto str = [&] {
    const auto n = pod(std::uint64_t{});
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) fail();
    return s;
  };
  char magic[4];
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kPhiMagic)) fail();
  if (pod(std::uint32_t{}) != kPhiVersion) fail();
  PlmOutput out;
  out.topics = pod(std::uint64_t{});
  out.language_a = str();
  out.language_b = str();
  for (Side side : {Side::A, Side::B}) {
    auto& vocab = side == Side::A ? out.vocab_a : out.vocab_b;
    const auto v = pod(std::uint64_t{});
    for (std::uint64_t i = 0; i < v; ++i) vocab.insert(str());
    out.phi[idx(side)].assign(out.topics, std::vector<double>(v));
    for (auto& row : out.phi[idx(side)]) {
      in.read(reinterpret_cast<char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
      if (!in) fail();
    }
  }
  return out;
}

}  // namespace xling

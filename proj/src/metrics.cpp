#include "xling/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

#include "xling/errors.hpp"

namespace xling {

double npmi_from_probabilities(double p_i, double p_j, double p_ij) {
  if (p_ij <= 0.0 || p_i <= 0.0 || p_j <= 0.0) return 0.0;
  if (p_ij >= 1.0) return 0.0;
  const double pmi = std::log(p_ij / (p_i * p_j));
  return std::clamp(pmi / -std::log(p_ij), -1.0, 1.0);
}

double npmi_pair(const CooccurrenceIndex& index, std::string_view w_i,
                 std::string_view w_j, PairMode mode) {
  PairProbability p;
  switch (mode) {
    case PairMode::MonoA: p = mono_pair_probability(index, Side::A, w_i, w_j); break;
    case PairMode::MonoB: p = mono_pair_probability(index, Side::B, w_i, w_j); break;
    case PairMode::Cross: p = pair_probability(index, w_i, w_j); break;
  }
  return npmi_from_probabilities(p.a, p.b, p.joint);
}

double topic_npmi(const CooccurrenceIndex& index,
                  std::span<const std::string> words, Side side, std::size_t c) {
  if (c < 2) throw DegenerateInputError("topic NPMI needs at least two words");
  if (c > words.size())
    throw DegenerateInputError("cardinality exceeds the word list");
  const PairMode mode = side == Side::A ? PairMode::MonoA : PairMode::MonoB;
  double sum = 0.0;
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = i + 1; j < c; ++j)
      sum += npmi_pair(index, words[i], words[j], mode);
  return sum / (static_cast<double>(c) * static_cast<double>(c - 1) / 2.0);
}

double inpmi(const CooccurrenceIndex& index, const MultilingualTopic& topic) {
  const std::size_t c = topic.cardinality();
  return (topic_npmi(index, topic.words_a, Side::A, c) +
          topic_npmi(index, topic.words_b, Side::B, c)) /
         2.0;
}

double cnpmi(const CooccurrenceIndex& index, const MultilingualTopic& topic) {
  const std::size_t c = topic.cardinality();
  if (c == 0 || topic.words_b.size() != c)
    throw DegenerateInputError("cnpmi needs equal nonempty word lists");
  double sum = 0.0;
  for (const auto& wa : topic.words_a)
    for (const auto& wb : topic.words_b)
      sum += npmi_pair(index, wa, wb, PairMode::Cross);
  return sum / (static_cast<double>(c) * static_cast<double>(c));
}

double cnpmi(std::span<const std::pair<const CooccurrenceIndex*,
                                       const MultilingualTopic*>> language_pairs) {
  if (language_pairs.empty())
    throw DegenerateInputError("no language pairs to average");
  double sum = 0.0;
  for (const auto& [index, topic] : language_pairs) sum += cnpmi(*index, *topic);
  return sum / static_cast<double>(language_pairs.size());
}

namespace {

// Kuhn's augmenting-path matching on a C x C bipartite graph.
std::size_t max_matching(const std::vector<std::vector<std::size_t>>& adj,
                         std::size_t right_size) {
  std::vector<std::ptrdiff_t> match_right(right_size, -1);
  std::vector<char> visited;
  std::function<bool(std::size_t)> augment = [&](std::size_t u) {
    for (std::size_t v : adj[u]) {
      if (visited[v]) continue;
      visited[v] = 1;
      if (match_right[v] < 0 || augment(static_cast<std::size_t>(match_right[v]))) {
        match_right[v] = static_cast<std::ptrdiff_t>(u);
        return true;
      }
    }
    return false;
  };
  std::size_t matched = 0;
  for (std::size_t u = 0; u < adj.size(); ++u) {
    visited.assign(right_size, 0);
    if (augment(u)) ++matched;
  }
  return matched;
}

}  // namespace

double mta(const BilingualDictionary& dict, const MultilingualTopic& topic,
           MtaMode mode) {
  const std::size_t c = topic.cardinality();
  if (c == 0) return 0.0;
  std::vector<std::vector<std::size_t>> adj(topic.words_a.size());
  std::size_t raw = 0;
  for (std::size_t i = 0; i < topic.words_a.size(); ++i)
    for (std::size_t j = 0; j < topic.words_b.size(); ++j)
      if (dict.contains(topic.words_a[i], topic.words_b[j])) {
        adj[i].push_back(j);
        ++raw;
      }
  if (mode == MtaMode::RawCount) return static_cast<double>(raw);
  return static_cast<double>(max_matching(adj, topic.words_b.size())) /
         static_cast<double>(c);
}

double twc(const CooccurrenceIndex& index, std::span<const std::string> words,
           Side side) {
  if (words.empty()) return 0.0;
  std::size_t present = 0;
  for (const auto& w : words)
    if (index.df(side, w) > 0) ++present;
  return static_cast<double>(present) / static_cast<double>(words.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw DegenerateInputError("pearson: sequences differ in length");
  if (x.size() < 2) throw DegenerateInputError("pearson: need at least 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw UndefinedCorrelationError("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::NpmiA: return "NPMI_A";
    case Metric::NpmiB: return "NPMI_B";
    case Metric::Inpmi: return "INPMI";
    case Metric::Cnpmi: return "CNPMI";
    case Metric::Mta: return "MTA";
    case Metric::TwcA: return "TWC_A";
    case Metric::TwcB: return "TWC_B";
  }
  return "?";
}

std::vector<TopicScore> score_topics(const CooccurrenceIndex& index,
                                     std::span<const MultilingualTopic> topics,
                                     const BilingualDictionary* dict) {
  std::vector<TopicScore> out;
  for (std::size_t t = 0; t < topics.size(); ++t) {
    const auto& topic = topics[t];
    const std::size_t c = topic.cardinality();
    std::vector<TopicScore> row;
    row.push_back({t, Metric::Cnpmi, cnpmi(index, topic)});
    if (c >= 2) {
      const double a = topic_npmi(index, topic.words_a, Side::A, c);
      const double b = topic_npmi(index, topic.words_b, Side::B, c);
      row.push_back({t, Metric::NpmiA, a});
      row.push_back({t, Metric::NpmiB, b});
      row.push_back({t, Metric::Inpmi, (a + b) / 2.0});
    }
    if (dict) row.push_back({t, Metric::Mta, mta(*dict, topic)});
    row.push_back({t, Metric::TwcA, twc(index, topic.words_a, Side::A)});
    row.push_back({t, Metric::TwcB, twc(index, topic.words_b, Side::B)});
    std::sort(row.begin(), row.end(), [](const TopicScore& x, const TopicScore& y) {
      return metric_name(x.metric) < metric_name(y.metric);
    });
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

void write_scores_tsv(std::ostream& out, std::span<const TopicScore> scores) {
  out << "topic\tmetric\tvalue\n";
  for (const auto& s : scores) {
    out << s.topic_id << '\t' << metric_name(s.metric) << '\t'
        << std::setprecision(12) << s.value << '\n';
  }
}

std::string scores_to_json(std::span<const TopicScore> scores) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& s : scores)
    doc[std::to_string(s.topic_id)][std::string(metric_name(s.metric))] = s.value;
  return doc.dump(2) + "\n";
}

}  // namespace xling

#pragma once

// Synthetic bilingual corpora with planted topics, for tests and the
// acceptance suite.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "xling/corpus.hpp"
#include "xling/lexicon.hpp"
#include "xling/topic.hpp"

namespace synthetic {

struct PlantedSpec {
  std::size_t topics = 5;
  std::size_t words_per_topic = 10;
  std::size_t docs = 500;
  std::size_t doc_length = 40;
  // Dirichlet concentration of per-document topic mixtures.
  double mixture = 0.1;
  std::string prefix_a = "a";
  std::string prefix_b = "b";
};

inline std::string word(const std::string& prefix, std::size_t topic, std::size_t i) {
  return prefix + "_t" + std::to_string(topic) + "_" + std::to_string(i);
}

// Ground-truth topics: topic k is words_per_topic words on each side.
inline std::vector<xling::MultilingualTopic> planted_topics(const PlantedSpec& spec) {
  std::vector<xling::MultilingualTopic> out;
  for (std::size_t k = 0; k < spec.topics; ++k) {
    xling::MultilingualTopic t{"la", "lb", {}, {}};
    for (std::size_t i = 0; i < spec.words_per_topic; ++i) {
      t.words_a.push_back(word(spec.prefix_a, k, i));
      t.words_b.push_back(word(spec.prefix_b, k, i));
    }
    out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<double> dirichlet(std::mt19937_64& rng, std::size_t k, double a) {
  std::gamma_distribution<double> g(a, 1.0);
  std::vector<double> v(k);
  double sum = 0;
  for (auto& x : v) sum += (x = g(rng) + 1e-300);
  for (auto& x : v) x /= sum;
  return v;
}

// Both halves of a pair share one topic mixture; words inside a topic follow
// a Zipf-like law.
inline xling::CorpusPair planted_corpus(const PlantedSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> zipf(spec.words_per_topic);
  for (std::size_t i = 0; i < zipf.size(); ++i) zipf[i] = 1.0 / static_cast<double>(i + 1);
  std::discrete_distribution<std::size_t> pick_word(zipf.begin(), zipf.end());

  std::vector<xling::TokenizedDocument> da, db;
  for (std::size_t d = 0; d < spec.docs; ++d) {
    const auto theta = dirichlet(rng, spec.topics, spec.mixture);
    std::discrete_distribution<std::size_t> pick_topic(theta.begin(), theta.end());
    xling::TokenizedDocument a, b;
    for (std::size_t i = 0; i < spec.doc_length; ++i)
      a.push_back(word(spec.prefix_a, pick_topic(rng), pick_word(rng)));
    for (std::size_t i = 0; i < spec.doc_length; ++i)
      b.push_back(word(spec.prefix_b, pick_topic(rng), pick_word(rng)));
    da.push_back(std::move(a));
    db.push_back(std::move(b));
  }
  return xling::make_corpus("la", "lb", da, db);
}

// A topic of `depth` words per side whose first `head` words are "ha_i" /
// "hb_i" and whose remaining words never occur in `head_reference`.
inline xling::MultilingualTopic head_topic(std::size_t head = 10, std::size_t depth = 50) {
  xling::MultilingualTopic t{"la", "lb", {}, {}};
  for (std::size_t i = 0; i < depth; ++i) {
    t.words_a.push_back((i < head ? "ha_" : "ta_") + std::to_string(i));
    t.words_b.push_back((i < head ? "hb_" : "tb_") + std::to_string(i));
  }
  return t;
}

// Half of the documents are on-topic and draw each head word (both sides)
// with probability 0.7; the rest hold only filler words.
inline xling::CorpusPair head_reference(std::size_t docs, std::size_t head, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution on_topic(0.5), keep(0.7);
  std::uniform_int_distribution<int> filler(0, 199);
  std::vector<xling::TokenizedDocument> da, db;
  for (std::size_t d = 0; d < docs; ++d) {
    xling::TokenizedDocument a, b;
    if (on_topic(rng)) {
      for (std::size_t i = 0; i < head; ++i) {
        if (keep(rng)) a.push_back("ha_" + std::to_string(i));
        if (keep(rng)) b.push_back("hb_" + std::to_string(i));
      }
    }
    for (int i = 0; i < 5; ++i) a.push_back("fa_" + std::to_string(filler(rng)));
    for (int i = 0; i < 5; ++i) b.push_back("fb_" + std::to_string(filler(rng)));
    da.push_back(std::move(a));
    db.push_back(std::move(b));
  }
  return xling::make_corpus("la", "lb", da, db);
}

// Dictionary translating only the head words, ha_i <-> hb_i.
inline xling::BilingualDictionary head_dictionary(std::size_t head = 10) {
  xling::BilingualDictionary d;
  for (std::size_t i = 0; i < head; ++i) d.add("ha_" + std::to_string(i), "hb_" + std::to_string(i));
  return d;
}

}  // namespace synthetic

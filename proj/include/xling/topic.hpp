#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xling/corpus.hpp"

namespace xling {

// One topic seen through both languages: ranked word lists, most probable
// first. Both lists have the same length, the topic's cardinality.
struct MultilingualTopic {
  std::string language_a;
  std::string language_b;
  std::vector<std::string> words_a;
  std::vector<std::string> words_b;

  std::size_t cardinality() const { return words_a.size(); }

  const std::vector<std::string>& words(Side s) const {
    return s == Side::A ? words_a : words_b;
  }

  // Top-c prefix of both lists. Throws DegenerateInputError if c exceeds the
  // available depth.
  MultilingualTopic head(std::size_t c) const;

  // Same topic with the two languages exchanged.
  MultilingualTopic swapped() const;
};

// Throws FormatError unless both lists are nonempty, equally long and free of
// duplicates.
void validate(const MultilingualTopic& topic);

// Topic file: a JSON list; each element maps language code -> ordered list of
// words. A word may be a plain string, a [word, probability] array, or an
// object {"word": ..., "prob": ...}; probabilities are ignored. When
// `languages` is empty the codes are taken from the first topic in key order.
std::vector<MultilingualTopic> load_topics(
    const std::filesystem::path& path,
    std::optional<std::pair<std::string, std::string>> languages = {});

std::vector<MultilingualTopic> parse_topics(
    std::string_view json_text,
    std::optional<std::pair<std::string, std::string>> languages = {});

std::string serialize_topics(std::span<const MultilingualTopic> topics);

void write_topics(const std::filesystem::path& path,
                  std::span<const MultilingualTopic> topics);

}  // namespace xling

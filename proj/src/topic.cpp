#include "xling/topic.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "xling/errors.hpp"

namespace xling {

using Json = nlohmann::ordered_json;

MultilingualTopic MultilingualTopic::head(std::size_t c) const {
  if (c > words_a.size() || c > words_b.size())
    throw DegenerateInputError("topic has " + std::to_string(cardinality()) +
                               " words per side, " + std::to_string(c) +
                               " requested");
  MultilingualTopic out{language_a, language_b, {}, {}};
  out.words_a.assign(words_a.begin(), words_a.begin() + static_cast<long>(c));
  out.words_b.assign(words_b.begin(), words_b.begin() + static_cast<long>(c));
  return out;
}

MultilingualTopic MultilingualTopic::swapped() const {
  return {language_b, language_a, words_b, words_a};
}

void validate(const MultilingualTopic& topic) {
  if (topic.words_a.empty())
    throw FormatError("topic has no words");
  if (topic.words_a.size() != topic.words_b.size())
    throw FormatError("topic cardinality differs between languages: " +
                      std::to_string(topic.words_a.size()) + " vs " +
                      std::to_string(topic.words_b.size()));
  for (const auto* list : {&topic.words_a, &topic.words_b}) {
    std::unordered_set<std::string> seen;
    for (const auto& w : *list)
      if (!seen.insert(w).second) throw FormatError("duplicate topic word: " + w);
  }
}

namespace {

std::vector<std::string> word_list(const Json& list, std::size_t topic_no,
                                   const std::string& lang) {
  if (!list.is_array())
    throw FormatError("topic " + std::to_string(topic_no) + ", language " +
                      lang + ": expected a list");
  std::vector<std::string> words;
  for (const auto& entry : list) {
    if (entry.is_string()) {
      words.push_back(entry.get<std::string>());
    } else if (entry.is_array() && !entry.empty() && entry[0].is_string()) {
      words.push_back(entry[0].get<std::string>());
    } else if (entry.is_object() && entry.contains("word") &&
               entry["word"].is_string()) {
      words.push_back(entry["word"].get<std::string>());
    } else {
      throw FormatError("topic " + std::to_string(topic_no) + ", language " +
                        lang + ": unrecognized word entry");
    }
  }
  return words;
}

}  // namespace

std::vector<MultilingualTopic> parse_topics(
    std::string_view json_text,
    std::optional<std::pair<std::string, std::string>> languages) {
  std::vector<MultilingualTopic> topics;
  if (json_text.find_first_not_of(" \t\r\n") == std::string_view::npos)
    return topics;
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("topic file is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw FormatError("topic file must be a JSON list");

  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& obj = doc[i];
    if (!obj.is_object())
      throw FormatError("topic " + std::to_string(i) + " is not an object");
    if (!languages) {
      if (obj.size() != 2)
        throw FormatError("topic " + std::to_string(i) +
                          " must name exactly two languages");
      auto it = obj.begin();
      std::string first = it.key();
      ++it;
      languages.emplace(std::move(first), it.key());
    }
    const auto& [lang_a, lang_b] = *languages;
    for (const auto* lang : {&lang_a, &lang_b})
      if (!obj.contains(*lang))
        throw FormatError("topic " + std::to_string(i) +
                          " is missing language block '" + *lang + "'");
    MultilingualTopic topic{lang_a, lang_b, word_list(obj[lang_a], i, lang_a),
                            word_list(obj[lang_b], i, lang_b)};
    try {
      validate(topic);
    } catch (const FormatError& e) {
      throw FormatError("topic " + std::to_string(i) + ": " + e.what());
    }
    topics.push_back(std::move(topic));
  }
  return topics;
}

std::vector<MultilingualTopic> load_topics(
    const std::filesystem::path& path,
    std::optional<std::pair<std::string, std::string>> languages) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_topics(buffer.str(), std::move(languages));
}

std::string serialize_topics(std::span<const MultilingualTopic> topics) {
  Json doc = Json::array();
  for (const auto& t : topics) {
    Json obj = Json::object();
    obj[t.language_a] = t.words_a;
    obj[t.language_b] = t.words_b;
    doc.push_back(std::move(obj));
  }
  return doc.dump(1) + "\n";
}

void write_topics(const std::filesystem::path& path,
                  std::span<const MultilingualTopic> topics) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << serialize_topics(topics);
}

}  // namespace xling

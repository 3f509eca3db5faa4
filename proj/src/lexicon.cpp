#include "xling/lexicon.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

#include "xling/errors.hpp"

namespace xling {

bool BilingualDictionary::add(const std::string& token_a,
                              const std::string& token_b) {
  if (!entries_.emplace(token_a, token_b).second) return false;
  by_a_[token_a].push_back(token_b);
  by_b_[token_b].push_back(token_a);
  return true;
}

bool BilingualDictionary::contains(std::string_view token_a,
                                   std::string_view token_b) const {
  return entries_.count({std::string(token_a), std::string(token_b)}) > 0;
}

std::vector<std::string> BilingualDictionary::translations_of_a(
    const std::string& token_a) const {
  auto it = by_a_.find(token_a);
  return it == by_a_.end() ? std::vector<std::string>{} : it->second;
}

std::vector<std::string> BilingualDictionary::translations_of_b(
    const std::string& token_b) const {
  auto it = by_b_.find(token_b);
  return it == by_b_.end() ? std::vector<std::string>{} : it->second;
}

void EraLexicon::set(const std::string& token, int year) {
  if (year < kMinYear || year > kMaxYear)
    throw std::out_of_range("year " + std::to_string(year) + " outside [" +
                            std::to_string(kMinYear) + ", " +
                            std::to_string(kMaxYear) + "]");
  years_[token] = year;
}

std::optional<int> EraLexicon::year(const std::string& token) const {
  auto it = years_.find(token);
  if (it == years_.end()) return std::nullopt;
  return it->second;
}

namespace {

// Calls `row(line_number, col0, col1)` for every nonblank line of a two-column
// TSV file.
template <typename Row>
void for_each_tsv_row(const std::filesystem::path& path, Row&& row) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 2 || cols[0].empty() || cols[1].empty())
      throw ParseError(path.string(), line_no,
                       "expected 2 columns, found " + std::to_string(cols.size()));
    row(line_no, cols[0], cols[1]);
  }
}

}  // namespace

BilingualDictionary load_dictionary(const std::filesystem::path& path) {
  BilingualDictionary dict;
  for_each_tsv_row(path, [&](std::size_t, const std::string& a,
                             const std::string& b) { dict.add(a, b); });
  return dict;
}

EraLexicon load_era_lexicon(const std::filesystem::path& path) {
  EraLexicon lexicon;
  for_each_tsv_row(path, [&](std::size_t line_no, const std::string& token,
                             const std::string& year_text) {
    int year = 0;
    const auto* end = year_text.data() + year_text.size();
    auto [ptr, ec] = std::from_chars(year_text.data(), end, year);
    if (ec != std::errc() || ptr != end)
      throw ParseError(path.string(), line_no, "year is not an integer: " + year_text);
    try {
      lexicon.set(token, year);
    } catch (const std::out_of_range& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  });
  return lexicon;
}

}  // namespace xling

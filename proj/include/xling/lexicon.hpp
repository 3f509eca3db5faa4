#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace xling {

// Set of (language A token, language B token) translation pairs with lookup
// from either side.
class BilingualDictionary {
 public:
  // Returns false when the pair was already present.
  bool add(const std::string& token_a, const std::string& token_b);
  bool contains(std::string_view token_a, std::string_view token_b) const;
  std::vector<std::string> translations_of_a(const std::string& token_a) const;
  std::vector<std::string> translations_of_b(const std::string& token_b) const;
  std::size_t size() const { return entries_.size(); }
  const std::set<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

 private:
  std::set<std::pair<std::string, std::string>> entries_;
  std::unordered_map<std::string, std::vector<std::string>> by_a_;
  std::unordered_map<std::string, std::vector<std::string>> by_b_;
};

// Earliest attested usage year per token.
class EraLexicon {
 public:
  static constexpr int kMinYear = 800;
  static constexpr int kMaxYear = 2100;

  // Later calls overwrite earlier ones. Throws std::out_of_range for years
  // outside [kMinYear, kMaxYear].
  void set(const std::string& token, int year);
  std::optional<int> year(const std::string& token) const;
  std::size_t size() const { return years_.size(); }

 private:
  std::unordered_map<std::string, int> years_;
};

// Two-column TSV, no header. Duplicate rows collapse. Throws ParseError on a
// row that does not have exactly two columns.
BilingualDictionary load_dictionary(const std::filesystem::path& path);

// Two-column TSV (token, year). The last row for a token wins. Throws
// ParseError on a malformed row or a non-integer / out-of-range year.
EraLexicon load_era_lexicon(const std::filesystem::path& path);

}  // namespace xling

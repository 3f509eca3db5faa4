#pragma once

// Brute-force reference implementations used only by tests. They work on raw
// string documents and never touch CooccurrenceIndex, so they check the
// indexed path independently.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Doc = std::vector<std::string>;

struct RawCorpus {
  std::vector<Doc> a;
  std::vector<Doc> b;
};

inline bool contains(const Doc& d, const std::string& w) {
  return std::find(d.begin(), d.end(), w) != d.end();
}

inline double npmi(double pi, double pj, double pij) {
  if (pij == 0.0 || pi == 0.0 || pj == 0.0 || pij == 1.0) return 0.0;
  return std::log(pij / (pi * pj)) / -std::log(pij);
}

// Counts documents by scanning every document for each word.
inline double mono_npmi(const std::vector<Doc>& docs, const std::string& wi,
                        const std::string& wj) {
  double ni = 0, nj = 0, nij = 0;
  for (const auto& d : docs) {
    const bool hi = contains(d, wi), hj = contains(d, wj);
    ni += hi;
    nj += hj;
    nij += hi && hj;
  }
  const double n = static_cast<double>(docs.size());
  return npmi(ni / n, nj / n, nij / n);
}

inline double cross_npmi(const RawCorpus& c, const std::string& wa,
                         const std::string& wb) {
  double na = 0, nb = 0, nab = 0;
  for (std::size_t d = 0; d < c.a.size(); ++d) {
    const bool ha = contains(c.a[d], wa), hb = contains(c.b[d], wb);
    na += ha;
    nb += hb;
    nab += ha && hb;
  }
  const double n = static_cast<double>(c.a.size());
  return npmi(na / n, nb / n, nab / n);
}

inline double topic_npmi(const std::vector<Doc>& docs,
                         const std::vector<std::string>& words) {
  double sum = 0;
  int pairs = 0;
  for (std::size_t i = 0; i < words.size(); ++i)
    for (std::size_t j = 0; j < words.size(); ++j)
      if (i < j) {
        sum += mono_npmi(docs, words[i], words[j]);
        ++pairs;
      }
  return sum / pairs;
}

inline double inpmi(const RawCorpus& c, const std::vector<std::string>& wa,
                    const std::vector<std::string>& wb) {
  return 0.5 * (topic_npmi(c.a, wa) + topic_npmi(c.b, wb));
}

inline double cnpmi(const RawCorpus& c, const std::vector<std::string>& wa,
                    const std::vector<std::string>& wb) {
  double sum = 0;
  for (const auto& x : wa)
    for (const auto& y : wb) sum += cross_npmi(c, x, y);
  return sum / static_cast<double>(wa.size() * wb.size());
}

inline double twc(const std::vector<Doc>& docs, const std::vector<std::string>& words) {
  double present = 0;
  for (const auto& w : words)
    for (const auto& d : docs)
      if (contains(d, w)) {
        ++present;
        break;
      }
  return present / static_cast<double>(words.size());
}

// Maximum matching by exhaustive search over permutations of the B list.
inline double mta(const std::set<std::pair<std::string, std::string>>& dict,
                  const std::vector<std::string>& wa,
                  const std::vector<std::string>& wb) {
  std::vector<std::size_t> perm(wb.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::size_t best = 0;
  do {
    std::size_t m = 0;
    for (std::size_t i = 0; i < wa.size(); ++i)
      if (dict.count({wa[i], wb[perm[i]]})) ++m;
    best = std::max(best, m);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(wa.size());
}

// Solves the weighted normal equations [1 X]^T W [1 X] b = [1 X]^T W y by
// Gaussian elimination with partial pivoting.
inline std::vector<double> normal_equations(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                                     const std::vector<double>& w) {
  const std::size_t p = x[0].size() + 1;
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> row{1.0};
    row.insert(row.end(), x[i].begin(), x[i].end());
    for (std::size_t r = 0; r < p; ++r) {
      for (std::size_t c = 0; c < p; ++c) a[r][c] += w[i] * row[r] * row[c];
      a[r][p] += w[i] * row[r] * y[i];
    }
  }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<double> b(p);
  for (std::size_t r = 0; r < p; ++r) b[r] = a[r][p] / a[r][r];
  return b;
}

}  // namespace oracle

namespace testing_support {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("xling-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path file(const std::string& name, const std::string& content) const {
    auto p = path_ / name;
    std::ofstream(p) << content;
    return p;
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support

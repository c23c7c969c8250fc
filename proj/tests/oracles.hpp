#pragma once

// Brute-force reference computations, written independently of the library.

#include <cstddef>
#include <set>
#include <vector>

#include "rulefilter/core.hpp"

namespace oracle {

using rulefilter::Label;

// columns[c][i] is rule c's output on instance i.
using Columns = std::vector<std::vector<Label>>;

struct Fraction {
  std::size_t num = 0;
  std::size_t den = 0;
  double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / den; }
};

inline Fraction precision(const std::vector<Label>& col, const std::vector<Label>& gold) {
  Fraction f;
  for (std::size_t i = 0; i < col.size(); ++i) {
    if (col[i] == 0) continue;
    ++f.den;
    if (col[i] == gold[i]) ++f.num;
  }
  return f;
}

inline Fraction coverage(const Columns& cols, const std::vector<std::size_t>& set, std::size_t n) {
  Fraction f{0, n};
  for (std::size_t i = 0; i < n; ++i) {
    bool any = false;
    for (auto c : set) any = any || cols[c][i] != 0;
    if (any) ++f.num;
  }
  return f;
}

inline Fraction overlap(const std::vector<Label>& a, const std::vector<Label>& b) {
  Fraction f{0, a.size()};
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != 0 && b[i] != 0) ++f.num;
  }
  return f;
}

inline Fraction agreement(const std::vector<Label>& a, const std::vector<Label>& b) {
  Fraction f{0, a.size()};
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != 0 && a[i] == b[i]) ++f.num;
  }
  return f;
}

inline Fraction conflict(const std::vector<Label>& a, const std::vector<Label>& b) {
  Fraction f{0, a.size()};
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != 0 && b[i] != 0 && a[i] != b[i]) ++f.num;
  }
  return f;
}

inline Fraction non_conflict(const Columns& cols, const std::vector<std::size_t>& set,
                             std::size_t n) {
  Fraction f{0, n};
  for (std::size_t i = 0; i < n; ++i) {
    std::set<Label> seen;
    for (auto c : set) {
      if (cols[c][i] != 0) seen.insert(cols[c][i]);
    }
    if (seen.size() <= 1) ++f.num;
  }
  return f;
}

// Graph-cut value straight from the definition, summing over index pairs.
template <typename Matrix>
double graph_cut(const Matrix& s, std::size_t n, const std::vector<std::size_t>& set,
                 double lambda) {
  std::vector<bool> in(n, false);
  for (auto j : set) in[j] = true;
  double cut = 0.0, inner = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!in[j]) continue;
      cut += s.at(i, j);
      if (in[i]) inner += s.at(i, j);
    }
  }
  return cut - lambda * inner;
}

}  // namespace oracle

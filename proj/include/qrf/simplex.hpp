#pragma once

// Dense two-phase simplex in tableau form: maximizes c^T x subject to
// a x <= b with x >= 0. Pivot selection breaks ties on variable ids, which
// rules out cycling; an iteration cap turns pathological instances into an
// error instead of a hang.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qrf/errors.hpp"

namespace qrf {

struct SimplexResult {
  double value = 0.0;  // +infinity unbounded, -infinity infeasible
  std::vector<double> solution;
};

namespace detail {

class SimplexTableau {
 public:
  SimplexTableau(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                 const std::vector<double>& c)
      : m_(static_cast<int>(b.size())),
        n_(static_cast<int>(c.size())),
        cap_(1000 + 200LL * (m_ + n_)),
        basis_(m_),
        cobasis_(n_ + 1),
        tab_(m_ + 2, std::vector<double>(n_ + 2, 0.0)) {
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < n_; ++j) tab_[i][j] = a[i][j];
      basis_[i] = n_ + i;
      tab_[i][n_] = -1.0;
      tab_[i][n_ + 1] = b[i];
    }
    for (int j = 0; j < n_; ++j) {
      cobasis_[j] = j;
      tab_[m_][j] = -c[j];
    }
    cobasis_[n_] = -1;  // artificial variable
    tab_[m_ + 1][n_] = 1.0;
  }

  SimplexResult solve() {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    if (m_ > 0) {
      int r = 0;
      for (int i = 1; i < m_; ++i)
        if (tab_[i][n_ + 1] < tab_[r][n_ + 1]) r = i;
      if (tab_[r][n_ + 1] < -kEps) {
        pivot(r, n_);
        if (!optimize(2) || tab_[m_ + 1][n_ + 1] < -kEps) return {-kInf, {}};
        for (int i = 0; i < m_; ++i)
          if (basis_[i] == -1) {
            int s = 0;
            for (int j = 1; j <= n_; ++j)
              if (std::pair(tab_[i][j], cobasis_[j]) < std::pair(tab_[i][s], cobasis_[s])) s = j;
            pivot(i, s);
          }
      }
    }
    const bool bounded = optimize(1);
    SimplexResult res;
    if (!bounded) {
      res.value = kInf;
      return res;
    }
    res.solution.assign(n_, 0.0);
    for (int i = 0; i < m_; ++i)
      if (basis_[i] >= 0 && basis_[i] < n_) res.solution[basis_[i]] = tab_[i][n_ + 1];
    res.value = tab_[m_][n_ + 1];
    return res;
  }

 private:
  static constexpr double kEps = 1e-9;

  void pivot(int r, int s) {
    if (++iterations_ > cap_)
      throw solver_error("simplex iteration cap exceeded on a " + std::to_string(m_) + "x" +
                         std::to_string(n_) + " program");
    const double inv = 1.0 / tab_[r][s];
    for (int i = 0; i < m_ + 2; ++i) {
      if (i == r || std::abs(tab_[i][s]) <= kEps) continue;
      const double factor = tab_[i][s] * inv;
      for (int j = 0; j < n_ + 2; ++j) tab_[i][j] -= tab_[r][j] * factor;
      tab_[i][s] = tab_[r][s] * factor;
    }
    for (int j = 0; j < n_ + 2; ++j)
      if (j != s) tab_[r][j] *= inv;
    for (int i = 0; i < m_ + 2; ++i)
      if (i != r) tab_[i][s] *= -inv;
    tab_[r][s] = inv;
    std::swap(basis_[r], cobasis_[s]);
  }

  // phase 1 optimizes the real objective (row m_, artificial excluded);
  // phase 2 drives the artificial variable out (row m_ + 1).
  bool optimize(int phase) {
    const int obj = phase == 1 ? m_ : m_ + 1;
    for (;;) {
      int s = -1;
      for (int j = 0; j <= n_; ++j) {
        if (cobasis_[j] == -phase) continue;
        if (s == -1 || std::pair(tab_[obj][j], cobasis_[j]) < std::pair(tab_[obj][s], cobasis_[s])) s = j;
      }
      if (s == -1 || tab_[obj][s] >= -kEps) return true;
      int r = -1;
      for (int i = 0; i < m_; ++i) {
        if (tab_[i][s] <= kEps) continue;
        if (r == -1 || std::pair(tab_[i][n_ + 1] / tab_[i][s], basis_[i]) <
                           std::pair(tab_[r][n_ + 1] / tab_[r][s], basis_[r]))
          r = i;
      }
      if (r == -1) return false;
      pivot(r, s);
    }
  }

  int m_, n_;
  long long iterations_ = 0, cap_;
  std::vector<int> basis_, cobasis_;
  std::vector<std::vector<double>> tab_;
};

}  // namespace detail

inline SimplexResult simplex_maximize(const std::vector<std::vector<double>>& a,
                                      const std::vector<double>& b, const std::vector<double>& c) {
  if (a.size() != b.size()) throw std::invalid_argument("constraint matrix and bounds disagree");
  for (const auto& row : a)
    if (row.size() != c.size()) throw std::invalid_argument("constraint row width must match objective");
  detail::SimplexTableau tableau(a, b, c);
  return tableau.solve();
}

}  // namespace qrf

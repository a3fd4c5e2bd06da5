#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace mvforge {

/// Cost ordered first by `count`, then by `value`; adding costs adds both
/// parts. Minimising (-matches, total distance) maximises matches first.
struct LexCost {
  long long count = 0;
  double value = 0.0;

  friend LexCost operator+(LexCost a, const LexCost& b) {
    return {a.count + b.count, a.value + b.value};
  }
  friend LexCost operator-(LexCost a, const LexCost& b) {
    return {a.count - b.count, a.value - b.value};
  }
  friend bool operator<(const LexCost& a, const LexCost& b) {
    return a.count != b.count ? a.count < b.count : a.value < b.value;
  }
  friend bool operator==(const LexCost&, const LexCost&) = default;
};

template <typename T>
struct CostTraits {
  static T zero() { return T{}; }
  static T infinity() { return std::numeric_limits<T>::max(); }
};

template <>
struct CostTraits<double> {
  static double zero() { return 0.0; }
  static double infinity() { return std::numeric_limits<double>::infinity(); }
};

template <>
struct CostTraits<LexCost> {
  static LexCost zero() { return {}; }
  static LexCost infinity() {
    return {std::numeric_limits<long long>::max() / 4, 0.0};
  }
};

/// Minimum-cost assignment of every row to a distinct column for an n x m
/// cost with n <= m (shortest augmenting paths with potentials, O(n^2 m)).
/// `cost(i, j)` returns T; T needs +, -, < and a CostTraits specialisation.
/// Returns the column of each row.
template <typename T, typename CostFn>
std::vector<std::size_t> hungarian(std::size_t n, std::size_t m, CostFn&& cost) {
  using Tr = CostTraits<T>;
  std::vector<std::size_t> row_of_col(m + 1, 0);  // 1-based, 0 = free
  if (n == 0) return {};
  std::vector<T> u(n + 1, Tr::zero()), v(m + 1, Tr::zero());
  std::vector<std::size_t> way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    row_of_col[0] = i;
    std::size_t j0 = 0;
    std::vector<T> minv(m + 1, Tr::infinity());
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = row_of_col[j0];
      T delta = Tr::infinity();
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const T cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[row_of_col[j]] = u[row_of_col[j]] + delta;
          v[j] = v[j] - delta;
        } else {
          minv[j] = minv[j] - delta;
        }
      }
      j0 = j1;
    } while (row_of_col[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      row_of_col[j0] = row_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> col_of_row(n, 0);
  for (std::size_t j = 1; j <= m; ++j)
    if (row_of_col[j] != 0) col_of_row[row_of_col[j] - 1] = j - 1;
  return col_of_row;
}

/// Same as hungarian() for any n, m: returns the column of each row, or
/// `unassigned` for rows left over when n > m.
template <typename T, typename CostFn>
std::vector<std::size_t> hungarian_rectangular(std::size_t n, std::size_t m, CostFn&& cost,
                                               std::size_t unassigned = static_cast<std::size_t>(-1)) {
  if (n <= m) return hungarian<T>(n, m, cost);
  const auto row_of_col =
      hungarian<T>(m, n, [&](std::size_t j, std::size_t i) { return cost(i, j); });
  std::vector<std::size_t> col_of_row(n, unassigned);
  for (std::size_t j = 0; j < m; ++j) col_of_row[row_of_col[j]] = j;
  return col_of_row;
}

}  // namespace mvforge

#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ssgd::detail {

/// Minimum-cost one-to-one assignment (Hungarian algorithm, O(n^3)).
/// cost is rows x cols; returns for each row the assigned column, or -1 when
/// rows > cols leaves it unmatched. Rectangular matrices are padded
/// internally. Deterministic: identical inputs give identical matchings.
inline std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
    const std::size_t rows = cost.size();
    if (rows == 0) return {};
    const std::size_t cols = cost[0].size();
    for (const auto& r : cost)
        if (r.size() != cols) throw std::invalid_argument("assignment: ragged cost matrix");
    if (cols == 0) return std::vector<int>(rows, -1);

    const std::size_t n = std::max(rows, cols);
    const double INF = std::numeric_limits<double>::infinity();
    // square matrix padded with zeros (padding rows/cols absorb the surplus)
    auto at = [&](std::size_t i, std::size_t j) -> double {
        return (i < rows && j < cols) ? cost[i][j] : 0.0;
    };

    // standard potentials formulation, 1-based internals
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, INF);
        std::vector<char> used(n + 1, false);
        do {
            used[j0] = true;
            std::size_t i0 = p[j0], j1 = 0;
            double delta = INF;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> match(rows, -1);
    for (std::size_t j = 1; j <= n; ++j) {
        std::size_t i = p[j];
        if (i >= 1 && i <= rows && j <= cols) match[i - 1] = static_cast<int>(j - 1);
    }
    return match;
}

}  // namespace ssgd::detail

// Constrained integer-solution sets entering the expansion drifts:
// Lambda(k,l)   = { q in N^{k-l} : sum q_i = l, sum i q_i = k-1 }
// Lambda(k,l,m) = { q in N^{k-l} : sum q_i = l, sum i q_i = m-1 }
// together with the multinomial weights l!/(q_1! ... q_{k-l}!) and the
// pointwise products J(k,l) = sum_q weight(q) prod_i (ubar^i)^{q_i}.
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "she/field.hpp"

namespace she {

struct PartitionSolution {
    std::vector<int> q;          // q_1 ... q_{k-l}
    std::uint64_t weight = 1;    // l! / (q_1! ... q_{k-l}!)
};

inline std::uint64_t multinomial_weight(int l, std::span<const int> q) {
    auto factorial = [](int n) {
        std::uint64_t f = 1;
        for (int i = 2; i <= n; ++i) f *= static_cast<std::uint64_t>(i);
        return f;
    };
    int sum = 0;
    std::uint64_t denom = 1;
    for (int qi : q) {
        if (qi < 0) throw std::invalid_argument("multinomial_weight: negative entry");
        sum += qi;
        denom *= factorial(qi);
    }
    if (sum != l) throw std::invalid_argument("multinomial_weight: entries do not sum to l");
    return factorial(l) / denom;
}

namespace detail {

// Recursive descent over q_len, ..., q_1 with both constraint residuals pruned.
inline void enumerate_partitions(int pos, int len, int rem_sum, int rem_weighted,
                                 std::vector<int>& q, int l,
                                 std::vector<PartitionSolution>& out) {
    if (pos == 0) {
        if (rem_sum == 0 && rem_weighted == 0) {
            PartitionSolution s;
            s.q = q;
            s.weight = multinomial_weight(l, s.q);
            out.push_back(std::move(s));
        }
        return;
    }
    const int max_q = std::min(rem_sum, rem_weighted / pos);
    for (int v = 0; v <= max_q; ++v) {
        q[static_cast<std::size_t>(pos - 1)] = v;
        enumerate_partitions(pos - 1, len, rem_sum - v, rem_weighted - pos * v, q, l, out);
    }
    q[static_cast<std::size_t>(pos - 1)] = 0;
}

}  // namespace detail

// All solutions with tuple length k-l and weighted sum m-1; empty outside the
// documented range l+1 <= m <= (k-l)l + 1 (and for l = k).
inline std::vector<PartitionSolution> lambda_m(int k, int l, int m) {
    if (k < 1 || l < 0 || m < 0) throw std::invalid_argument("lambda_m: negative arguments");
    if (l > k) throw std::invalid_argument("lambda_m: l must not exceed k");
    std::vector<PartitionSolution> out;
    const int len = k - l;
    if (len == 0) return out;
    if (m - 1 < 0) return out;
    std::vector<int> q(static_cast<std::size_t>(len), 0);
    detail::enumerate_partitions(len, len, l, m - 1, q, l, out);
    return out;
}

inline std::vector<PartitionSolution> lambda(int k, int l) { return lambda_m(k, l, k); }

// J(k,l) evaluated pointwise in physical space; ubar[i-1] holds ubar^i.
// J(1,0) = 1 (Lambda(1,0) = {(0)} with empty product); J(k,0) = 0 for k >= 2.
inline Field evaluate_j(int k, int l, std::span<const Field> ubar,
                        const std::shared_ptr<const TorusGrid>& grid) {
    const auto solutions = lambda(k, l);
    Field out = Field::zeros(grid, Representation::physical);
    auto acc = out.physical(0);
    std::size_t needed = 0;
    for (const auto& s : solutions)
        for (std::size_t i = 0; i < s.q.size(); ++i)
            if (s.q[i] > 0) needed = std::max(needed, i + 1);
    if (ubar.size() < needed) throw std::invalid_argument("evaluate_j: insufficient stack depth");
    for (const auto& s : solutions) {
        const double w = static_cast<double>(s.weight);
        for (std::size_t p = 0; p < grid->num_points(); ++p) {
            double prod = w;
            for (std::size_t i = 0; i < s.q.size(); ++i) {
                const int qi = s.q[i];
                if (qi == 0) continue;
                const double v = ubar[i].physical(0)[p];
                for (int rep = 0; rep < qi; ++rep) prod *= v;
            }
            acc[p] += prod;
        }
    }
    return out;
}

}  // namespace she

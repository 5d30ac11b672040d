#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace abk {

/// Zero-based fibre indices; "increasing" means strictly increasing.
using MultiIndex = std::vector<int>;

inline std::size_t binomial(int n, int r) {
    if (r < 0 || r > n) return 0;
    std::size_t out = 1;
    for (int i = 1; i <= r; ++i) out = out * static_cast<std::size_t>(n - r + i) / static_cast<std::size_t>(i);
    return out;
}

/// All strictly increasing q-tuples from {0..k-1} in lexicographic order.
inline std::vector<MultiIndex> increasing_multi_indices(int k, int q) {
    std::vector<MultiIndex> out;
    if (q < 0 || q > k) return out;
    MultiIndex idx(static_cast<std::size_t>(q));
    for (int i = 0; i < q; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
        out.push_back(idx);
        int pos = q - 1;
        while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == k - q + pos) --pos;
        if (pos < 0) break;
        ++idx[static_cast<std::size_t>(pos)];
        for (int j = pos + 1; j < q; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

/// Position of an increasing multi-index in increasing_multi_indices(k, q).
inline std::size_t multi_index_position(const MultiIndex& idx, int k) {
    // Combinatorial number system, counted in lexicographic order.
    const int q = static_cast<int>(idx.size());
    std::size_t pos = 0;
    int prev = -1;
    for (int i = 0; i < q; ++i) {
        for (int v = prev + 1; v < idx[static_cast<std::size_t>(i)]; ++v) pos += binomial(k - v - 1, q - i - 1);
        prev = idx[static_cast<std::size_t>(i)];
    }
    return pos;
}

/// Sorts an arbitrary index tuple; returns the permutation sign, or nullopt on a repeated index.
inline std::optional<std::pair<MultiIndex, int>> canonicalize(MultiIndex idx) {
    int sign = 1;
    for (std::size_t i = 1; i < idx.size(); ++i) {
        for (std::size_t j = i; j > 0 && idx[j - 1] > idx[j]; --j) {
            std::swap(idx[j - 1], idx[j]);
            sign = -sign;
        }
    }
    if (std::adjacent_find(idx.begin(), idx.end()) != idx.end()) return std::nullopt;
    return std::make_pair(std::move(idx), sign);
}

} // namespace abk

#pragma once

// Brute-force reference implementations used to cross-check the metric code.
// They are deliberately slow and share no code with include/mobench.

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

namespace oracle {

/// Largest sub-multiset of `pred` that is also a sub-multiset of `gold`,
/// found by enumerating every subset of `pred`.
inline std::size_t multiset_overlap(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
    std::vector<std::string> g = gold;
    std::sort(g.begin(), g.end());
    std::size_t best = 0;
    const std::size_t n = pred.size();
    for (unsigned long mask = 0; mask < (1UL << n); ++mask) {
        std::vector<std::string> s;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1UL << i)) s.push_back(pred[i]);
        std::sort(s.begin(), s.end());
        if (std::includes(g.begin(), g.end(), s.begin(), s.end())) best = std::max(best, s.size());
    }
    return best;
}

inline bool is_subsequence(const std::vector<std::string>& sub, const std::vector<std::string>& seq) {
    std::size_t j = 0;
    for (std::size_t i = 0; i < seq.size() && j < sub.size(); ++i)
        if (seq[i] == sub[j]) ++j;
    return j == sub.size();
}

/// Longest common subsequence by enumerating every subsequence of `a`.
inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::size_t best = 0;
    for (unsigned long mask = 0; mask < (1UL << a.size()); ++mask) {
        std::vector<std::string> s;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (mask & (1UL << i)) s.push_back(a[i]);
        if (s.size() > best && is_subsequence(s, b)) best = s.size();
    }
    return best;
}

inline double f1_from_overlap(std::size_t overlap, std::size_t n_pred, std::size_t n_gold) {
    if (overlap == 0 || n_pred == 0 || n_gold == 0) return 0.0;
    double p = static_cast<double>(overlap) / static_cast<double>(n_pred);
    double r = static_cast<double>(overlap) / static_cast<double>(n_gold);
    return 2.0 * p * r / (p + r);
}

/// Classic full-matrix edit distance over bytes (inputs are ASCII).
inline std::size_t levenshtein(const std::string& a, const std::string& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    return d[a.size()][b.size()];
}

}  // namespace oracle

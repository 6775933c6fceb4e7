#pragma once

// Deterministic task metrics: exact match, token F1, ROUGE-1/L, Levenshtein,
// SQL clause-graph overlap and VQA answer scoring.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mobench/common.hpp"

namespace mobench {

struct TokenizedText {
    std::vector<std::string> tokens;
};

struct PrecisionRecallF1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

namespace detail {

inline bool is_unicode_space(char32_t c) {
    if (c < 0x80) return is_ascii_space(static_cast<char>(c));
    switch (c) {
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return c >= 0x2000 && c <= 0x200A;
    }
}

inline void utf8_append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

inline std::string strip_punct(std::string_view tok) {
    std::size_t b = 0;
    std::size_t e = tok.size();
    while (b < e && is_ascii_punct(tok[b])) ++b;
    while (e > b && is_ascii_punct(tok[e - 1])) --e;
    return std::string(tok.substr(b, e - b));
}

inline std::size_t multiset_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::map<std::string_view, long> counts;
    for (const auto& t : a) ++counts[t];
    std::size_t o = 0;
    for (const auto& t : b) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++o;
        }
    }
    return o;
}

inline PrecisionRecallF1 prf(std::size_t overlap, std::size_t n_pred, std::size_t n_gold) {
    if (n_pred == 0 || n_gold == 0 || overlap == 0) return {};
    PrecisionRecallF1 s;
    s.precision = static_cast<double>(overlap) / static_cast<double>(n_pred);
    s.recall = static_cast<double>(overlap) / static_cast<double>(n_gold);
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    return s;
}

}  // namespace detail

/// The shared F1/ROUGE tokenizer: ASCII-lowercase, split on Unicode
/// whitespace, strip leading and trailing ASCII punctuation per token, drop
/// tokens left empty.
inline TokenizedText tokenize(std::string_view text) {
    TokenizedText out;
    std::string cur;
    auto flush = [&] {
        auto t = detail::strip_punct(cur);
        if (!t.empty()) out.tokens.push_back(detail::to_lower_ascii(t));
        cur.clear();
    };
    for (char32_t cp : detail::utf8_decode(text)) {
        if (detail::is_unicode_space(cp)) {
            flush();
        } else {
            detail::utf8_append(cur, cp);
        }
    }
    flush();
    return out;
}

/// 1 iff the strings are byte-equal once outer whitespace is trimmed.
inline int exact_match(std::string_view pred, std::string_view gold) {
    return detail::trim(pred) == detail::trim(gold) ? 1 : 0;
}

inline PrecisionRecallF1 token_prf(std::string_view pred, std::string_view gold) {
    auto p = tokenize(pred).tokens;
    auto g = tokenize(gold).tokens;
    return detail::prf(detail::multiset_overlap(p, g), p.size(), g.size());
}

inline double token_f1(std::string_view pred, std::string_view gold) { return token_prf(pred, gold).f1; }

/// Unigram overlap; same arithmetic as token F1.
inline PrecisionRecallF1 rouge1_prf(std::string_view pred, std::string_view gold) { return token_prf(pred, gold); }

inline double rouge1(std::string_view pred, std::string_view gold) { return rouge1_prf(pred, gold).f1; }

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline PrecisionRecallF1 rougeL_prf(std::string_view pred, std::string_view gold) {
    auto p = tokenize(pred).tokens;
    auto g = tokenize(gold).tokens;
    return detail::prf(lcs_length(p, g), p.size(), g.size());
}

inline double rougeL(std::string_view pred, std::string_view gold) { return rougeL_prf(pred, gold).f1; }

/// Unit-cost edit distance over Unicode code points.
inline std::size_t levenshtein_distance(std::string_view a, std::string_view b) {
    auto x = detail::utf8_decode(a);
    auto y = detail::utf8_decode(b);
    if (x.size() < y.size()) std::swap(x, y);
    std::vector<std::size_t> row(y.size() + 1);
    for (std::size_t j = 0; j <= y.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= x.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= y.size(); ++j) {
            std::size_t up = row[j];
            std::size_t sub = diag + (x[i - 1] == y[j - 1] ? 0 : 1);
            row[j] = std::min({up + 1, row[j - 1] + 1, sub});
            diag = up;
        }
    }
    return row[y.size()];
}

/// 1 - d / max(|a|, |b|), lengths in code points; 1.0 when both are empty.
inline double levenshtein_score(std::string_view pred, std::string_view gold) {
    auto n = std::max(detail::utf8_decode(pred).size(), detail::utf8_decode(gold).size());
    if (n == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein_distance(pred, gold)) / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// SQL clause graph

using SqlEdge = std::pair<std::string, std::string>;

/// Multiset of (clause keyword, item) edges, kept sorted.
struct SqlGraph {
    std::vector<SqlEdge> edges;
    bool operator==(const SqlGraph&) const = default;
};

inline const std::vector<std::string>& default_sql_keywords() {
    static const std::vector<std::string> kw = {"SELECT", "FROM",     "JOIN",     "ON",   "WHERE",
                                                "GROUP BY", "HAVING", "ORDER BY", "LIMIT"};
    return kw;
}

/// Clauses whose bodies are split on top-level commas.
inline bool is_list_clause(std::string_view kw) { return kw == "select" || kw == "group by" || kw == "order by"; }

namespace detail {

inline bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

inline bool is_quote(char c) { return c == '\'' || c == '"' || c == '`'; }

/// Length of the keyword match at `pos`, 0 if none. Multi-word keywords
/// accept any whitespace run between words.
inline std::size_t match_keyword(std::string_view s, std::size_t pos, std::string_view kw) {
    if (pos > 0 && is_ident_char(s[pos - 1])) return 0;
    std::size_t i = pos;
    std::size_t k = 0;
    while (k < kw.size()) {
        if (kw[k] == ' ') {
            if (i >= s.size() || !is_ascii_space(s[i])) return 0;
            while (i < s.size() && is_ascii_space(s[i])) ++i;
            ++k;
            continue;
        }
        if (i >= s.size() || std::toupper(static_cast<unsigned char>(s[i])) != kw[k]) return 0;
        ++i;
        ++k;
    }
    if (i < s.size() && is_ident_char(s[i])) return 0;
    return i - pos;
}

/// Lowercase and collapse whitespace outside quoted literals; trim.
inline std::string normalize_sql_fragment(std::string_view s) {
    std::string out;
    char quote = 0;
    bool pending_space = false;
    for (char c : s) {
        if (quote) {
            out += c;
            if (c == quote) quote = 0;
            continue;
        }
        if (is_ascii_space(c)) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out += ' ';
        pending_space = false;
        if (is_quote(c)) quote = c;
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

/// Split on commas at paren depth 0 outside quotes.
inline std::vector<std::string> split_top_level(std::string_view s) {
    std::vector<std::string> out;
    int depth = 0;
    char quote = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (quote) {
            if (c == quote) quote = 0;
        } else if (is_quote(c)) {
            quote = c;
        } else if (c == '(') {
            ++depth;
        } else if (c == ')') {
            if (depth > 0) --depth;
        } else if (c == ',' && depth == 0) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    out.emplace_back(s.substr(start));
    return out;
}

}  // namespace detail

/// Split a query into clause keyword -> item edges. Keywords are recognized
/// only at parenthesis depth 0 and outside quotes, so subqueries stay inside
/// the enclosing clause body. Text before the first keyword hangs under a
/// synthetic "root" clause.
inline SqlGraph sql_to_graph(std::string_view sql, const std::vector<std::string>& keywords = default_sql_keywords()) {
    std::string_view s = detail::trim(sql);
    while (!s.empty() && (s.back() == ';' || detail::is_ascii_space(s.back()))) s.remove_suffix(1);

    // Longest keywords first so "ORDER BY" wins over any shorter prefix.
    std::vector<std::string> kws;
    for (const auto& k : keywords) kws.push_back(detail::to_upper_ascii(k));
    std::stable_sort(kws.begin(), kws.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });

    struct Mark {
        std::size_t pos, len;
        std::string kw;
    };
    std::vector<Mark> marks;
    int depth = 0;
    char quote = 0;
    for (std::size_t i = 0; i < s.size();) {
        char c = s[i];
        if (quote) {
            if (c == quote) quote = 0;
            ++i;
            continue;
        }
        if (detail::is_quote(c)) {
            quote = c;
            ++i;
            continue;
        }
        if (c == '(') {
            ++depth;
            ++i;
            continue;
        }
        if (c == ')') {
            if (depth > 0) --depth;
            ++i;
            continue;
        }
        std::size_t len = 0;
        if (depth == 0) {
            for (const auto& kw : kws) {
                len = detail::match_keyword(s, i, kw);
                if (len) {
                    marks.push_back({i, len, detail::to_lower_ascii(kw)});
                    break;
                }
            }
        }
        i += len ? len : 1;
    }

    SqlGraph g;
    auto add_body = [&](const std::string& clause, std::string_view body) {
        if (is_list_clause(clause)) {
            for (const auto& part : detail::split_top_level(body)) {
                auto item = detail::normalize_sql_fragment(part);
                if (!item.empty()) g.edges.emplace_back(clause, std::move(item));
            }
        } else {
            auto item = detail::normalize_sql_fragment(body);
            if (!item.empty()) g.edges.emplace_back(clause, std::move(item));
        }
    };
    std::size_t head_end = marks.empty() ? s.size() : marks.front().pos;
    add_body("root", s.substr(0, head_end));
    for (std::size_t m = 0; m < marks.size(); ++m) {
        std::size_t body_start = marks[m].pos + marks[m].len;
        std::size_t body_end = m + 1 < marks.size() ? marks[m + 1].pos : s.size();
        add_body(marks[m].kw, s.substr(body_start, body_end - body_start));
    }
    std::sort(g.edges.begin(), g.edges.end());
    return g;
}

/// Edge-multiset F1: 2|P ∩ G| / (|P| + |G|); 1.0 when both graphs are empty.
inline double sql_graph_overlap(const SqlGraph& pred, const SqlGraph& gold) {
    const auto total = pred.edges.size() + gold.edges.size();
    if (total == 0) return 1.0;
    std::vector<SqlEdge> common;
    std::set_intersection(pred.edges.begin(), pred.edges.end(), gold.edges.begin(), gold.edges.end(),
                          std::back_inserter(common));
    return 2.0 * static_cast<double>(common.size()) / static_cast<double>(total);
}

inline double sql_parser_score(std::string_view pred_sql, std::string_view gold_sql,
                               const std::vector<std::string>& keywords = default_sql_keywords()) {
    return sql_graph_overlap(sql_to_graph(pred_sql, keywords), sql_to_graph(gold_sql, keywords));
}

// ---------------------------------------------------------------------------
// VQA

/// Lowercase, strip punctuation (a '.' between digits is kept), collapse
/// whitespace, drop the articles a/an/the.
inline std::string vqa_normalize(std::string_view answer) {
    std::string lowered = detail::to_lower_ascii(detail::trim(answer));
    std::string stripped;
    for (std::size_t i = 0; i < lowered.size(); ++i) {
        char c = lowered[i];
        if (!detail::is_ascii_punct(c)) {
            stripped += c;
            continue;
        }
        bool decimal_point = c == '.' && i > 0 && i + 1 < lowered.size() &&
                             std::isdigit(static_cast<unsigned char>(lowered[i - 1])) &&
                             std::isdigit(static_cast<unsigned char>(lowered[i + 1]));
        if (decimal_point) stripped += c;
    }
    std::vector<std::string> words;
    std::string cur;
    for (char c : stripped + " ") {
        if (detail::is_ascii_space(c)) {
            if (!cur.empty() && cur != "a" && cur != "an" && cur != "the") words.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    return detail::join(words, " ");
}

/// Leading option letter of an answer such as "B", "(B)", "B.", "B) blue".
/// Only uppercase letters count, so ordinary words are not mistaken for
/// labels.
inline std::optional<char> leading_option_letter(std::string_view text) {
    auto t = detail::trim(text);
    if (!t.empty() && t.front() == '(') t.remove_prefix(1);
    if (t.empty() || t.front() < 'A' || t.front() > 'Z') return std::nullopt;
    if (t.size() > 1 && detail::is_ident_char(t[1])) return std::nullopt;
    return t.front();
}

/// 1 iff normalized prediction equals normalized gold. With `choice`, both
/// sides are first reduced to their leading option letter where they have one.
inline int vqa_single_score(std::string_view pred, std::string_view gold, bool choice = false) {
    if (choice) {
        auto p = leading_option_letter(pred);
        auto g = leading_option_letter(gold);
        if (p && g) return *p == *g ? 1 : 0;
    }
    return vqa_normalize(pred) == vqa_normalize(gold) ? 1 : 0;
}

/// min(matches / 3, 1) over the annotator answers.
inline double vqa_multi_score(std::string_view pred, const std::vector<std::string>& golds) {
    if (golds.empty()) throw Error("vqa_multi_score: no reference answers");
    const auto p = vqa_normalize(pred);
    std::size_t m = 0;
    for (const auto& g : golds)
        if (vqa_normalize(g) == p) ++m;
    return std::min(static_cast<double>(m) / 3.0, 1.0);
}

// ---------------------------------------------------------------------------
// Accuracy helpers for multiple-choice and math tasks

/// Last number in the text with thousands separators removed, or nullopt.
inline std::optional<double> last_number(std::string_view text) {
    std::optional<double> found;
    std::size_t i = 0;
    while (i < text.size()) {
        bool neg = text[i] == '-' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1]));
        if (!neg && !std::isdigit(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::string digits;
        if (neg) {
            digits += '-';
            ++i;
        }
        bool seen_dot = false;
        while (i < text.size()) {
            char c = text[i];
            if (std::isdigit(static_cast<unsigned char>(c))) {
                digits += c;
            } else if (c == ',' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
                // thousands separator
            } else if (c == '.' && !seen_dot && i + 1 < text.size() &&
                       std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
                seen_dot = true;
                digits += c;
            } else {
                break;
            }
            ++i;
        }
        found = std::strtod(digits.c_str(), nullptr);
    }
    return found;
}

/// Final numeric answer of a math reference: the text after "####" when
/// present, otherwise its last number.
inline std::optional<double> math_reference_answer(std::string_view gold) {
    auto pos = gold.rfind("####");
    if (pos != std::string_view::npos) return last_number(gold.substr(pos + 4));
    return last_number(gold);
}

inline int numeric_match(std::string_view pred, std::string_view gold) {
    auto g = math_reference_answer(gold);
    auto p = last_number(pred);
    return g && p && *g == *p ? 1 : 0;
}

/// Multiple-choice accuracy. The gold may be a letter or the text of one of
/// the options.
inline int choice_match(std::string_view pred, std::string_view gold, const std::vector<std::string>& options) {
    auto g = leading_option_letter(gold);
    if (!g) {
        for (std::size_t i = 0; i < options.size() && i < 26; ++i)
            if (vqa_normalize(options[i]) == vqa_normalize(gold)) g = static_cast<char>('A' + i);
    }
    auto p = leading_option_letter(pred);
    if (g && p) return *g == *p ? 1 : 0;
    return vqa_normalize(pred) == vqa_normalize(gold) ? 1 : 0;
}

}  // namespace mobench

#pragma once

// Task registry, record schema, line-delimited ingestion and seeded
// down-sampling.
//
// Record files hold one JSON object per line with the fields
//   id, input, context, options, references, image_ref, turns
// Which fields are required depends on the dataset's TaskKind.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mobench/common.hpp"

namespace mobench {

enum class TaskKind {
    question_answering,
    summarization,
    text_to_sql,
    multitask_mc,
    math,
    open_ended,
    multi_turn,
    vqa_direct,
    vqa_choice,
    trust_safety,
};

inline constexpr std::array<TaskKind, 10> kAllTaskKinds = {
    TaskKind::question_answering, TaskKind::summarization, TaskKind::text_to_sql,
    TaskKind::multitask_mc,       TaskKind::math,          TaskKind::open_ended,
    TaskKind::multi_turn,         TaskKind::vqa_direct,    TaskKind::vqa_choice,
    TaskKind::trust_safety,
};

inline std::string_view to_string(TaskKind t) {
    switch (t) {
        case TaskKind::question_answering: return "question_answering";
        case TaskKind::summarization: return "summarization";
        case TaskKind::text_to_sql: return "text_to_sql";
        case TaskKind::multitask_mc: return "multitask_mc";
        case TaskKind::math: return "math";
        case TaskKind::open_ended: return "open_ended";
        case TaskKind::multi_turn: return "multi_turn";
        case TaskKind::vqa_direct: return "vqa_direct";
        case TaskKind::vqa_choice: return "vqa_choice";
        case TaskKind::trust_safety: return "trust_safety";
    }
    return "unknown";
}

inline TaskKind parse_task_kind(std::string_view s) {
    for (auto t : kAllTaskKinds)
        if (to_string(t) == s) return t;
    throw ConfigError("unknown task kind: " + std::string(s));
}

inline bool is_vqa(TaskKind t) { return t == TaskKind::vqa_direct || t == TaskKind::vqa_choice; }

/// Tasks whose samples may be scored purely by a judge and so may omit
/// references.
inline bool references_optional(TaskKind t) {
    return t == TaskKind::open_ended || t == TaskKind::trust_safety || t == TaskKind::multi_turn;
}

struct SampleRecord {
    std::string id;
    TaskKind task = TaskKind::question_answering;
    std::string input;
    std::optional<std::string> context;
    std::vector<std::string> options;  // labeled A, B, C... by position
    std::vector<std::string> references;
    std::optional<std::string> image_ref;
    std::vector<std::string> turns;  // follow-up user turns, multi_turn only

    bool operator==(const SampleRecord&) const = default;
};

/// Throws ParseError describing the first violated field invariant.
inline void validate_record(const SampleRecord& r) {
    auto fail = [&](std::string_view field, std::string_view why) {
        throw ParseError("record '" + r.id + "': field '" + std::string(field) + "' " + std::string(why));
    };
    if (r.id.empty()) fail("id", "must be non-empty");
    if (r.references.empty() && !references_optional(r.task)) fail("references", "is required for task " + std::string(to_string(r.task)));
    const bool wants_options = r.task == TaskKind::multitask_mc || r.task == TaskKind::vqa_choice;
    if (wants_options && r.options.empty()) fail("options", "is required for task " + std::string(to_string(r.task)));
    if (!wants_options && r.task != TaskKind::trust_safety && !r.options.empty())
        fail("options", "is not allowed for task " + std::string(to_string(r.task)));
    if (is_vqa(r.task) && !r.image_ref) fail("image_ref", "is required for task " + std::string(to_string(r.task)));
    if (!is_vqa(r.task) && r.image_ref) fail("image_ref", "is only allowed for VQA tasks");
    if (r.task != TaskKind::multi_turn && !r.turns.empty()) fail("turns", "is only allowed for multi_turn");
}

struct DatasetSpec {
    std::string name;
    TaskKind task = TaskKind::question_answering;
    std::filesystem::path source_path;
    std::size_t sample_cap = 1000;
    std::uint64_t seed = 0;
    std::string vqa_prompt;  // VQA prompt style; defaults to the dataset name
};

/// Built-in dataset catalogue: task kind, default sample cap and the average
/// input length published alongside it (whitespace words).
struct CatalogEntry {
    std::string_view name;
    TaskKind task;
    std::size_t default_cap;
    double published_avg_length;
};

inline constexpr std::array<CatalogEntry, 20> kCatalog = {{
    {"databricks-dolly", TaskKind::question_answering, 1000, 156.90},
    {"hotpotqa", TaskKind::question_answering, 1000, 443.59},
    {"cnn_dailymail", TaskKind::summarization, 1000, 482.03},
    {"xsum", TaskKind::summarization, 1000, 298.69},
    {"sql-create-context", TaskKind::text_to_sql, 1000, 18.61},
    {"mmlu", TaskKind::multitask_mc, 1000, 94.82},
    {"gsm8k", TaskKind::math, 1000, 72.35},
    {"alpacaeval", TaskKind::open_ended, 805, 28.56},
    {"mt-bench", TaskKind::multi_turn, 80, 66.97},
    {"vqav2", TaskKind::vqa_direct, 1000, 15.18},
    {"vizwiz", TaskKind::vqa_direct, 1000, 25.20},
    {"gqa", TaskKind::vqa_direct, 1000, 17.55},
    {"textvqa", TaskKind::vqa_direct, 1000, 16.05},
    {"scienceqa", TaskKind::vqa_choice, 1000, 59.95},
    {"truthfulqa", TaskKind::trust_safety, 817, 71.23},
    {"do-not-answer", TaskKind::trust_safety, 1000, 14.33},
    {"adv-inst", TaskKind::trust_safety, 600, 9.70},
    {"bbq", TaskKind::trust_safety, 1000, 67.35},
    {"priv-lk", TaskKind::trust_safety, 150, 11.25},
    {"sc-101", TaskKind::trust_safety, 500, 22.05},
}};

inline const CatalogEntry* find_catalog_entry(std::string_view name) {
    for (const auto& e : kCatalog)
        if (e.name == name) return &e;
    return nullptr;
}

inline std::size_t default_sample_cap(std::string_view name) {
    const auto* e = find_catalog_entry(name);
    return e ? e->default_cap : 1000;
}

namespace detail {

inline std::optional<std::string> opt_string(const nlohmann::json& obj, const char* field, std::size_t line) {
    auto it = obj.find(field);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string())
        throw ParseError("line " + std::to_string(line) + ": field '" + field + "' must be a string");
    return it->get<std::string>();
}

inline std::vector<std::string> string_list(const nlohmann::json& obj, const char* field, std::size_t line) {
    auto it = obj.find(field);
    if (it == obj.end() || it->is_null()) return {};
    if (it->is_string()) return {it->get<std::string>()};
    if (!it->is_array())
        throw ParseError("line " + std::to_string(line) + ": field '" + field + "' must be a list of strings");
    std::vector<std::string> out;
    for (const auto& v : *it) {
        if (!v.is_string())
            throw ParseError("line " + std::to_string(line) + ": field '" + field + "' must be a list of strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

}  // namespace detail

/// Parse one record line. `line` is 1-based and used only in error messages.
inline SampleRecord parse_record(std::string_view text, TaskKind task, std::size_t line) {
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("line " + std::to_string(line) + ": not a JSON object (" + e.what() + ")");
    }
    if (!obj.is_object()) throw ParseError("line " + std::to_string(line) + ": not a JSON object");

    auto missing = [&](const char* field) {
        return ParseError("line " + std::to_string(line) + ": missing field '" + field + "'");
    };

    SampleRecord r;
    r.task = task;
    if (auto it = obj.find("task"); it != obj.end() && it->is_string() && it->get<std::string>() != to_string(task))
        throw ParseError("line " + std::to_string(line) + ": field 'task' is '" + it->get<std::string>() +
                         "' but dataset task is '" + std::string(to_string(task)) + "'");
    auto id = detail::opt_string(obj, "id", line);
    if (!id) throw missing("id");
    r.id = *id;
    auto input = detail::opt_string(obj, "input", line);
    if (!input) throw missing("input");
    r.input = *input;
    r.context = detail::opt_string(obj, "context", line);
    r.options = detail::string_list(obj, "options", line);
    r.references = detail::string_list(obj, "references", line);
    r.image_ref = detail::opt_string(obj, "image_ref", line);
    r.turns = detail::string_list(obj, "turns", line);

    if (r.references.empty() && !references_optional(task)) throw missing("references");
    try {
        validate_record(r);
    } catch (const ParseError& e) {
        throw ParseError("line " + std::to_string(line) + ": " + e.what());
    }
    return r;
}

/// Load every record of a dataset in file order. Blank lines are skipped.
inline std::vector<SampleRecord> load_records(const DatasetSpec& spec) {
    if (!std::filesystem::exists(spec.source_path))
        throw ConfigError("dataset '" + spec.name + "': file not found: " + spec.source_path.string());
    std::ifstream in(spec.source_path);
    if (!in) throw ConfigError("dataset '" + spec.name + "': cannot open " + spec.source_path.string());

    std::vector<SampleRecord> out;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        try {
            auto rec = parse_record(line, spec.task, lineno);
            if (!seen.insert(rec.id).second)
                throw ParseError("line " + std::to_string(lineno) + ": field 'id' duplicates '" + rec.id + "'");
            out.push_back(std::move(rec));
        } catch (const ParseError& e) {
            throw ParseError(spec.source_path.string() + ": " + e.what());
        }
    }
    return out;
}

/// Seeded uniform selection without replacement. A Fisher-Yates shuffle is run
/// for the first `cap` positions only, then the chosen indices are restored to
/// file order.
inline std::vector<SampleRecord> down_sample(const std::vector<SampleRecord>& records, std::size_t cap,
                                             std::uint64_t seed) {
    if (cap == 0) throw ConfigError("down_sample: cap must be > 0");
    if (records.size() <= cap) return records;

    std::vector<std::size_t> idx(records.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    SplitMix64 rng(seed);
    const std::size_t n = idx.size();
    for (std::size_t i = 0; i < cap; ++i) {
        auto j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());

    std::vector<SampleRecord> out;
    out.reserve(cap);
    for (auto i : idx) out.push_back(records[i]);
    return out;
}

inline std::size_t whitespace_word_count(std::string_view s) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : s) {
        if (detail::is_ascii_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

/// Mean whitespace-word count of input (plus context when present).
inline double avg_length(const std::vector<SampleRecord>& records) {
    if (records.empty()) throw Error("avg_length: empty record list");
    double total = 0.0;
    for (const auto& r : records) {
        std::size_t n = whitespace_word_count(r.input);
        if (r.context) n += whitespace_word_count(*r.context);
        total += static_cast<double>(n);
    }
    return total / static_cast<double>(records.size());
}

/// Parse a dataset manifest: {"datasets": [{name, task, source_path,
/// sample_cap?, seed?, vqa_prompt?}, ...]}. Relative paths resolve against
/// `base_dir`.
inline std::vector<DatasetSpec> parse_dataset_specs(const nlohmann::json& list, const std::filesystem::path& base_dir) {
    if (!list.is_array()) throw ConfigError("datasets: expected a list");
    std::vector<DatasetSpec> out;
    std::set<std::string> names;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const auto& d = list[i];
        auto where = "datasets[" + std::to_string(i) + "]";
        if (!d.is_object()) throw ConfigError(where + ": expected an object");
        DatasetSpec s;
        if (!d.contains("name") || !d["name"].is_string()) throw ConfigError(where + ".name: required string");
        s.name = d["name"].get<std::string>();
        if (d.contains("task")) {
            s.task = parse_task_kind(d["task"].get<std::string>());
        } else if (const auto* e = find_catalog_entry(s.name)) {
            s.task = e->task;
        } else {
            throw ConfigError(where + ".task: required for datasets outside the built-in catalogue");
        }
        if (!d.contains("source_path") || !d["source_path"].is_string())
            throw ConfigError(where + ".source_path: required string");
        std::filesystem::path p = d["source_path"].get<std::string>();
        s.source_path = p.is_absolute() ? p : base_dir / p;
        s.sample_cap = default_sample_cap(s.name);
        if (d.contains("sample_cap")) {
            auto cap = d["sample_cap"].get<std::int64_t>();
            if (cap <= 0) throw ConfigError(where + ".sample_cap: must be > 0");
            s.sample_cap = static_cast<std::size_t>(cap);
        }
        if (d.contains("seed")) s.seed = d["seed"].get<std::uint64_t>();
        s.vqa_prompt = d.value("vqa_prompt", s.name);
        if (!names.insert(s.name).second) throw ConfigError(where + ".name: duplicate dataset '" + s.name + "'");
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace mobench

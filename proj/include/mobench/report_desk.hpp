#pragma once

// Run reports and the shapes built from them: leaderboards with best /
// second-best marks, 16->8 bit style quantization deltas, accuracy versus
// disk usage. Canonical output is tidy long-format CSV; JSON carries full
// reports; Markdown is a human rendering with 3-decimal cells.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mobench/common.hpp"
#include "mobench/dataset_hub.hpp"
#include "mobench/perf_meter.hpp"
#include "mobench/runner_gate.hpp"
#include "mobench/telemetry.hpp"

namespace mobench {

struct SampleScore {
    std::string sample_id;
    std::string metric;
    double value = 0.0;

    bool operator==(const SampleScore&) const = default;
};

struct MetricMean {
    double mean = 0.0;
    std::size_t count = 0;

    bool operator==(const MetricMean&) const = default;
};

struct RunMeta {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::size_t sample_count = 0;
    std::map<std::string, std::size_t> exclusions;  // per judge metric
    std::vector<std::string> failed_samples;
    bool partial = false;
    std::optional<double> first_submit;
    std::optional<double> last_done;
    std::string prompt_family;
    std::string judge;  // off | scripted | remote:<model>
    std::optional<std::uint64_t> judge_seed;
    std::string judge_prompts_version;
};

struct RunReport {
    ModelProfile model;
    std::string dataset;
    TaskKind task = TaskKind::question_answering;
    std::map<std::string, MetricMean> metrics;
    std::optional<EfficiencySummary> efficiency;
    std::optional<UtilizationSummary> utilization;
    RunMeta meta;
    nlohmann::json config;  // effective run configuration, for provenance
};

/// Means of per-sample scores, one entry per metric name.
inline std::map<std::string, MetricMean> metric_means(const std::vector<SampleScore>& scores) {
    std::map<std::string, std::pair<double, std::size_t>> acc;
    for (const auto& s : scores) {
        auto& [sum, n] = acc[s.metric];
        sum += s.value;
        ++n;
    }
    std::map<std::string, MetricMean> out;
    for (const auto& [m, v] : acc) out[m] = {v.first / static_cast<double>(v.second), v.second};
    return out;
}

// ---------------------------------------------------------------------------
// Ordering

inline int quantization_rank(Quantization q) { return static_cast<int>(q); }
inline int size_rank(SizeCategory c) { return c == SizeCategory::large ? 0 : 1; }

inline int dataset_rank(std::string_view name) {
    for (std::size_t i = 0; i < kCatalog.size(); ++i)
        if (kCatalog[i].name == name) return static_cast<int>(i);
    return static_cast<int>(kCatalog.size());
}

inline int metric_rank(std::string_view metric) {
    static const std::vector<std::string_view> order = {
        "em",    "f1",     "sql_parser", "levenshtein", "rouge1", "rougeL", "win_rate", "mtbench",
        "choice_accuracy", "numeric_accuracy", "ts_accuracy", "vqa"};
    auto it = std::find(order.begin(), order.end(), metric);
    return static_cast<int>(it - order.begin());
}

inline bool model_less(const ModelProfile& a, const ModelProfile& b) {
    return std::make_tuple(size_rank(a.size_category), a.name) < std::make_tuple(size_rank(b.size_category), b.name);
}

using MetricColumn = std::pair<std::string, std::string>;  // (dataset, metric)

inline bool column_less(const MetricColumn& a, const MetricColumn& b) {
    return std::make_tuple(dataset_rank(a.first), a.first, metric_rank(a.second), a.second) <
           std::make_tuple(dataset_rank(b.first), b.first, metric_rank(b.second), b.second);
}

inline void sort_reports(std::vector<RunReport>& reports) {
    std::stable_sort(reports.begin(), reports.end(), [](const RunReport& a, const RunReport& b) {
        auto ka = std::make_tuple(quantization_rank(a.model.quantization), size_rank(a.model.size_category),
                                  a.model.name, dataset_rank(a.dataset), a.dataset);
        auto kb = std::make_tuple(quantization_rank(b.model.quantization), size_rank(b.model.size_category),
                                  b.model.name, dataset_rank(b.dataset), b.dataset);
        return ka < kb;
    });
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const RunReport& r) {
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& [k, v] : r.metrics) metrics[k] = {{"mean", v.mean}, {"count", v.count}};
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    nlohmann::json meta{{"config_hash", r.meta.config_hash},
                        {"seed", r.meta.seed},
                        {"sample_count", r.meta.sample_count},
                        {"exclusions", r.meta.exclusions},
                        {"failed_samples", r.meta.failed_samples},
                        {"partial", r.meta.partial},
                        {"first_submit", opt(r.meta.first_submit)},
                        {"last_done", opt(r.meta.last_done)},
                        {"prompt_family", r.meta.prompt_family},
                        {"judge", r.meta.judge},
                        {"judge_seed", r.meta.judge_seed ? nlohmann::json(*r.meta.judge_seed) : nlohmann::json(nullptr)},
                        {"judge_prompts_version", r.meta.judge_prompts_version},
                        {"metric_aggregation", "arithmetic mean over scored samples"}};
    return nlohmann::json{{"schema", "mobench.run_report/1"},
                          {"model", to_json(r.model)},
                          {"dataset", r.dataset},
                          {"task", std::string(to_string(r.task))},
                          {"metrics", metrics},
                          {"efficiency", r.efficiency ? to_json(*r.efficiency) : nlohmann::json(nullptr)},
                          {"utilization", r.utilization ? to_json(*r.utilization) : nlohmann::json(nullptr)},
                          {"meta", meta},
                          {"config", r.config.is_null() ? nlohmann::json::object() : r.config}};
}

inline RunReport run_report_from_json(const nlohmann::json& j) {
    try {
        RunReport r;
        r.model = profile_from_json(j.at("model"));
        r.dataset = j.at("dataset").get<std::string>();
        r.task = parse_task_kind(j.at("task").get<std::string>());
        for (const auto& [k, v] : j.at("metrics").items())
            r.metrics[k] = {v.at("mean").get<double>(), v.at("count").get<std::size_t>()};
        if (j.contains("efficiency") && !j["efficiency"].is_null())
            r.efficiency = efficiency_summary_from_json(j["efficiency"]);
        if (j.contains("utilization") && !j["utilization"].is_null())
            r.utilization = utilization_summary_from_json(j["utilization"]);
        const auto& m = j.at("meta");
        auto opt = [&](const char* k) -> std::optional<double> {
            if (!m.contains(k) || m[k].is_null()) return std::nullopt;
            return m[k].get<double>();
        };
        r.meta.config_hash = m.value("config_hash", std::string());
        r.meta.seed = m.value("seed", std::uint64_t{0});
        r.meta.sample_count = m.value("sample_count", std::size_t{0});
        if (m.contains("exclusions")) r.meta.exclusions = m["exclusions"].get<std::map<std::string, std::size_t>>();
        if (m.contains("failed_samples")) r.meta.failed_samples = m["failed_samples"].get<std::vector<std::string>>();
        r.meta.partial = m.value("partial", false);
        r.meta.first_submit = opt("first_submit");
        r.meta.last_done = opt("last_done");
        r.meta.prompt_family = m.value("prompt_family", std::string());
        r.meta.judge = m.value("judge", std::string());
        if (m.contains("judge_seed") && !m["judge_seed"].is_null()) r.meta.judge_seed = m["judge_seed"].get<std::uint64_t>();
        r.meta.judge_prompts_version = m.value("judge_prompts_version", std::string());
        r.config = j.value("config", nlohmann::json::object());
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("run report: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Leaderboard

enum class Mark { none, best, second };

struct LeaderboardCell {
    std::optional<double> value;
    Mark mark = Mark::none;
};

struct LeaderboardRow {
    ModelProfile model;
    std::vector<LeaderboardCell> cells;
};

struct LeaderboardSection {
    Quantization quantization = Quantization::bit16;
    std::vector<LeaderboardRow> rows;
};

struct Leaderboard {
    std::vector<MetricColumn> columns;
    std::vector<LeaderboardSection> sections;
};

/// Competition ranks of a column on 3-decimal display values: rank = 1 + the
/// number of strictly better values. Ties share the better rank and the next
/// rank is skipped. Rank 1 is best, rank 2 second.
inline std::vector<Mark> rank_marks(const std::vector<std::optional<double>>& values, bool higher_is_better = true) {
    std::vector<std::optional<long long>> keys;
    for (const auto& v : values) keys.push_back(v ? std::optional<long long>(std::llround(*v * 1000.0)) : std::nullopt);
    std::vector<Mark> marks(values.size(), Mark::none);
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (!keys[i]) continue;
        std::size_t better = 0;
        for (const auto& k : keys)
            if (k && (higher_is_better ? *k > *keys[i] : *k < *keys[i])) ++better;
        if (better == 0) marks[i] = Mark::best;
        if (better == 1) marks[i] = Mark::second;
    }
    return marks;
}

inline bool lower_is_better(std::string_view metric) {
    return metric == "ttft" || metric == "total_time" || metric == "oet";
}

inline Leaderboard build_leaderboard(std::vector<RunReport> reports) {
    sort_reports(reports);
    Leaderboard lb;
    std::set<MetricColumn> cols;
    for (const auto& r : reports)
        for (const auto& [m, _] : r.metrics) cols.insert({r.dataset, m});
    lb.columns.assign(cols.begin(), cols.end());
    std::stable_sort(lb.columns.begin(), lb.columns.end(), column_less);

    std::map<Quantization, std::vector<ModelProfile>> models;
    std::map<std::tuple<Quantization, std::string, std::string, std::string>, double> values;
    for (const auto& r : reports) {
        auto& list = models[r.model.quantization];
        if (std::none_of(list.begin(), list.end(), [&](const auto& p) { return p.name == r.model.name; }))
            list.push_back(r.model);
        for (const auto& [m, v] : r.metrics) values[{r.model.quantization, r.model.name, r.dataset, m}] = v.mean;
    }
    for (auto& [q, list] : models) {
        std::stable_sort(list.begin(), list.end(), model_less);
        LeaderboardSection sec;
        sec.quantization = q;
        for (const auto& p : list) sec.rows.push_back({p, std::vector<LeaderboardCell>(lb.columns.size())});
        for (std::size_t c = 0; c < lb.columns.size(); ++c) {
            std::vector<std::optional<double>> column;
            for (auto& row : sec.rows) {
                auto it = values.find({q, row.model.name, lb.columns[c].first, lb.columns[c].second});
                row.cells[c].value = it == values.end() ? std::nullopt : std::optional<double>(it->second);
                column.push_back(row.cells[c].value);
            }
            auto marks = rank_marks(column, !lower_is_better(lb.columns[c].second));
            for (std::size_t r = 0; r < sec.rows.size(); ++r) sec.rows[r].cells[c].mark = marks[r];
        }
        lb.sections.push_back(std::move(sec));
    }
    std::sort(lb.sections.begin(), lb.sections.end(),
              [](const auto& a, const auto& b) { return quantization_rank(a.quantization) < quantization_rank(b.quantization); });
    return lb;
}

inline std::string format_disk(double gb) { return detail::format_double("%g", gb) + " GB"; }

inline std::string format_cell(const LeaderboardCell& cell) {
    if (!cell.value) return "-";
    auto v = detail::format_double("%.3f", *cell.value);
    if (cell.mark == Mark::best) return "**" + v + "**";
    if (cell.mark == Mark::second) return "<u>" + v + "</u>";
    return v;
}

inline std::string render_leaderboard_markdown(const Leaderboard& lb) {
    std::string out = "| Quantization | Model | Model Size Category | Disk Usage |";
    for (const auto& [d, m] : lb.columns) out += " " + d + " " + m + " |";
    out += "\n|---|---|---|---|";
    for (std::size_t i = 0; i < lb.columns.size(); ++i) out += "---|";
    out += "\n";
    for (const auto& sec : lb.sections) {
        for (const auto& row : sec.rows) {
            out += "| " + std::string(to_string(sec.quantization)) + " | " + row.model.name + " | " +
                   std::string(to_string(row.model.size_category)) + " | " + format_disk(row.model.disk_usage_gb) + " |";
            for (const auto& cell : row.cells) out += " " + format_cell(cell) + " |";
            out += "\n";
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Quantization deltas

struct DeltaRow {
    std::string model;
    std::string dataset;
    std::string metric;
    Quantization from = Quantization::bit16;
    Quantization to = Quantization::bit8;
    double value_from = 0.0;
    double value_to = 0.0;
    double delta = 0.0;  // value_to - value_from
};

struct QuantDelta {
    std::vector<DeltaRow> rows;
    std::map<std::string, std::vector<double>> by_model;  // across tasks
    std::map<std::string, std::vector<double>> by_task;   // across models, keyed by dataset
};

/// Per (model, dataset, metric) change from report set `a` to report set `b`.
inline QuantDelta quant_delta(std::vector<RunReport> a, std::vector<RunReport> b) {
    sort_reports(a);
    sort_reports(b);
    using Key = std::tuple<std::string, std::string, std::string>;
    auto index = [](const std::vector<RunReport>& set) {
        std::map<Key, std::pair<double, Quantization>> out;
        std::set<std::string> models;
        for (const auto& r : set) {
            models.insert(r.model.name);
            for (const auto& [m, v] : r.metrics) out[{r.model.name, r.dataset, m}] = {v.mean, r.model.quantization};
        }
        return std::make_pair(out, models);
    };
    auto [ia, models_a] = index(a);
    auto [ib, models_b] = index(b);
    for (const auto& m : models_a)
        if (!models_b.count(m)) throw Error("quant_delta: model '" + m + "' missing from the second report set");
    for (const auto& m : models_b)
        if (!models_a.count(m)) throw Error("quant_delta: model '" + m + "' missing from the first report set");
    for (const auto& [k, _] : ia)
        if (!ib.count(k))
            throw Error("quant_delta: column " + std::get<1>(k) + "/" + std::get<2>(k) + " for model '" + std::get<0>(k) +
                        "' missing from the second report set");
    for (const auto& [k, _] : ib)
        if (!ia.count(k))
            throw Error("quant_delta: column " + std::get<1>(k) + "/" + std::get<2>(k) + " for model '" + std::get<0>(k) +
                        "' missing from the first report set");

    QuantDelta out;
    for (const auto& [k, va] : ia) {
        const auto& vb = ib.at(k);
        DeltaRow row{std::get<0>(k), std::get<1>(k), std::get<2>(k), va.second, vb.second, va.first, vb.first,
                     vb.first - va.first};
        out.by_model[row.model].push_back(row.delta);
        out.by_task[row.dataset].push_back(row.delta);
        out.rows.push_back(std::move(row));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Accuracy vs disk usage

struct ScatterRow {
    std::string model;
    Quantization quantization = Quantization::bit4;
    double disk_usage_gb = 0.0;
    double mean_score = 0.0;
    std::size_t columns = 0;
};

/// One row per model at `quant`: plain mean over the selected (dataset,
/// metric) columns, or over all of the model's columns when `selection` is
/// empty.
inline std::vector<ScatterRow> accuracy_vs_disk(std::vector<RunReport> reports, Quantization quant,
                                                const std::vector<MetricColumn>& selection = {}) {
    sort_reports(reports);
    std::vector<ModelProfile> models;
    std::map<std::string, std::map<MetricColumn, double>> values;
    for (const auto& r : reports) {
        if (r.model.quantization != quant) continue;
        if (!values.count(r.model.name)) models.push_back(r.model);
        for (const auto& [m, v] : r.metrics) values[r.model.name][{r.dataset, m}] = v.mean;
    }
    if (models.empty()) throw Error("accuracy_vs_disk: no reports at " + std::string(to_string(quant)));
    std::vector<ScatterRow> out;
    for (const auto& p : models) {
        const auto& cells = values[p.name];
        double sum = 0.0;
        std::size_t n = 0;
        if (selection.empty()) {
            for (const auto& [_, v] : cells) {
                sum += v;
                ++n;
            }
        } else {
            for (const auto& col : selection) {
                auto it = cells.find(col);
                if (it == cells.end())
                    throw Error("accuracy_vs_disk: model '" + p.name + "' has no " + col.first + "/" + col.second);
                sum += it->second;
                ++n;
            }
        }
        if (n == 0) throw Error("accuracy_vs_disk: model '" + p.name + "' has no scores");
        out.push_back({p.name, quant, p.disk_usage_gb, sum / static_cast<double>(n), n});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

enum class ReportFormat { csv, json, markdown };

inline ReportFormat parse_report_format(std::string_view s) {
    if (s == "csv") return ReportFormat::csv;
    if (s == "json") return ReportFormat::json;
    if (s == "markdown" || s == "md") return ReportFormat::markdown;
    throw ConfigError("unknown report format: " + std::string(s) + " (expected csv, json or markdown)");
}

namespace detail {

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace detail

/// Tidy long format: one row per model x dataset x metric x quantization.
inline std::string reports_to_csv(std::vector<RunReport> reports) {
    sort_reports(reports);
    std::string out = "model,size_category,quantization,disk_usage_gb,dataset,task,metric,value,count\n";
    for (const auto& r : reports) {
        std::vector<std::string> metrics;
        for (const auto& [m, _] : r.metrics) metrics.push_back(m);
        std::stable_sort(metrics.begin(), metrics.end(),
                         [](const auto& a, const auto& b) { return std::make_pair(metric_rank(a), a) < std::make_pair(metric_rank(b), b); });
        for (const auto& m : metrics) {
            const auto& v = r.metrics.at(m);
            out += detail::csv_field(r.model.name) + "," + std::string(to_string(r.model.size_category)) + "," +
                   std::string(to_string(r.model.quantization)) + "," + detail::full_precision(r.model.disk_usage_gb) +
                   "," + detail::csv_field(r.dataset) + "," + std::string(to_string(r.task)) + "," + m + "," +
                   detail::full_precision(v.mean) + "," + std::to_string(v.count) + "\n";
        }
    }
    return out;
}

inline std::string reports_to_json(std::vector<RunReport> reports) {
    sort_reports(reports);
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) arr.push_back(to_json(r));
    return nlohmann::json{{"schema", "mobench.report_set/1"}, {"reports", arr}}.dump(2) + "\n";
}

inline std::vector<RunReport> reports_from_json(std::string_view text) {
    auto j = nlohmann::json::parse(text);
    std::vector<RunReport> out;
    for (const auto& r : j.at("reports")) out.push_back(run_report_from_json(r));
    return out;
}

inline std::string render_reports(const std::vector<RunReport>& reports, ReportFormat format) {
    switch (format) {
        case ReportFormat::csv: return reports_to_csv(reports);
        case ReportFormat::json: return reports_to_json(reports);
        case ReportFormat::markdown: return render_leaderboard_markdown(build_leaderboard(reports));
    }
    return {};
}

inline std::string render_quant_delta(const QuantDelta& d, ReportFormat format) {
    switch (format) {
        case ReportFormat::csv: {
            std::string out = "model,dataset,metric,from_quantization,to_quantization,value_from,value_to,delta\n";
            for (const auto& r : d.rows)
                out += detail::csv_field(r.model) + "," + detail::csv_field(r.dataset) + "," + r.metric + "," +
                       std::string(to_string(r.from)) + "," + std::string(to_string(r.to)) + "," +
                       detail::full_precision(r.value_from) + "," + detail::full_precision(r.value_to) + "," +
                       detail::full_precision(r.delta) + "\n";
            return out;
        }
        case ReportFormat::json: {
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& r : d.rows)
                rows.push_back({{"model", r.model},
                                {"dataset", r.dataset},
                                {"metric", r.metric},
                                {"from_quantization", std::string(to_string(r.from))},
                                {"to_quantization", std::string(to_string(r.to))},
                                {"value_from", r.value_from},
                                {"value_to", r.value_to},
                                {"delta", r.delta}});
            return nlohmann::json{{"schema", "mobench.quant_delta/1"},
                                  {"rows", rows},
                                  {"by_model", d.by_model},
                                  {"by_task", d.by_task}}
                       .dump(2) +
                   "\n";
        }
        case ReportFormat::markdown: {
            std::string out = "| Model | Dataset | Metric | From | To | Delta |\n|---|---|---|---|---|---|\n";
            for (const auto& r : d.rows)
                out += "| " + r.model + " | " + r.dataset + " | " + r.metric + " | " +
                       detail::format_double("%.3f", r.value_from) + " | " + detail::format_double("%.3f", r.value_to) +
                       " | " + detail::format_double("%+.3f", r.delta) + " |\n";
            return out;
        }
    }
    return {};
}

inline std::string render_accuracy_vs_disk(const std::vector<ScatterRow>& rows, ReportFormat format) {
    switch (format) {
        case ReportFormat::csv: {
            std::string out = "model,quantization,disk_usage_gb,mean_score,columns\n";
            for (const auto& r : rows)
                out += detail::csv_field(r.model) + "," + std::string(to_string(r.quantization)) + "," +
                       detail::full_precision(r.disk_usage_gb) + "," + detail::full_precision(r.mean_score) + "," +
                       std::to_string(r.columns) + "\n";
            return out;
        }
        case ReportFormat::json: {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& r : rows)
                arr.push_back({{"model", r.model},
                               {"quantization", std::string(to_string(r.quantization))},
                               {"disk_usage_gb", r.disk_usage_gb},
                               {"mean_score", r.mean_score},
                               {"columns", r.columns}});
            return nlohmann::json{{"schema", "mobench.accuracy_vs_disk/1"},
                                  {"aggregation", "plain mean over selected columns"},
                                  {"rows", arr}}
                       .dump(2) +
                   "\n";
        }
        case ReportFormat::markdown: {
            std::string out = "| Model | Quantization | Disk Usage | Mean Score |\n|---|---|---|---|\n";
            for (const auto& r : rows)
                out += "| " + r.model + " | " + std::string(to_string(r.quantization)) + " | " +
                       format_disk(r.disk_usage_gb) + " | " + detail::format_double("%.3f", r.mean_score) + " |\n";
            return out;
        }
    }
    return {};
}

inline void write_report(const std::vector<RunReport>& reports, ReportFormat format, const std::filesystem::path& path) {
    detail::write_file_atomic(path, render_reports(reports, format));
}

// ---------------------------------------------------------------------------
// Per-sample scores

inline std::string scores_to_csv(const std::vector<SampleScore>& scores) {
    std::string out = "sample_id,metric,value\n";
    for (const auto& s : scores)
        out += detail::csv_field(s.sample_id) + "," + s.metric + "," + detail::full_precision(s.value) + "\n";
    return out;
}

inline std::vector<SampleScore> scores_from_csv(std::string_view csv) {
    std::vector<SampleScore> out;
    auto lines = detail::split(csv, '\n');
    if (lines.empty() || lines[0] != "sample_id,metric,value") throw ParseError("scores CSV: bad header");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        // sample ids may be quoted; metric and value never contain commas
        auto last = lines[i].rfind(',');
        auto mid = lines[i].rfind(',', last - 1);
        if (last == std::string::npos || mid == std::string::npos)
            throw ParseError("scores CSV line " + std::to_string(i + 1) + ": expected 3 columns");
        std::string id = lines[i].substr(0, mid);
        if (id.size() >= 2 && id.front() == '"') {
            std::string unq;
            for (std::size_t k = 1; k + 1 < id.size(); ++k) {
                unq += id[k];
                if (id[k] == '"') ++k;
            }
            id = unq;
        }
        out.push_back({id, lines[i].substr(mid + 1, last - mid - 1), std::strtod(lines[i].c_str() + last + 1, nullptr)});
    }
    return out;
}

}  // namespace mobench

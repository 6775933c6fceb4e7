#pragma once

// End-to-end benchmark driver behind the `mobench` command: run configuration,
// the metric registry, the shared scoring path, artifact layout and the
// run / score / report commands.
//
// Artifacts for one run land in <out_dir>/<model>/<quantization>/<dataset>/:
//   predictions.jsonl  one line per sample: id, prompt, output(s), error
//   scores.csv         sample_id,metric,value (full precision)
//   traces.jsonl       one generation trace per request
//   utilization.csv    resource trace, when telemetry is on
//   report.json        the RunReport

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "mobench/common.hpp"
#include "mobench/dataset_hub.hpp"
#include "mobench/judge_bridge.hpp"
#include "mobench/judge_remote.hpp"
#include "mobench/metric_core.hpp"
#include "mobench/perf_meter.hpp"
#include "mobench/prompt_forge.hpp"
#include "mobench/report_desk.hpp"
#include "mobench/runner_gate.hpp"
#include "mobench/telemetry.hpp"

namespace mobench {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

// ---------------------------------------------------------------------------
// Configuration

enum class RunnerKind { stub, replay, external };
enum class JudgeMode { off, scripted, remote };
enum class ErrorPolicy { abort, skip };

inline RunnerKind parse_runner_kind(std::string_view s) {
    if (s == "stub") return RunnerKind::stub;
    if (s == "replay") return RunnerKind::replay;
    if (s == "external") return RunnerKind::external;
    throw ConfigError("runner.kind: expected stub, replay or external, got '" + std::string(s) + "'");
}

inline JudgeMode parse_judge_mode(std::string_view s) {
    if (s == "off") return JudgeMode::off;
    if (s == "scripted") return JudgeMode::scripted;
    if (s == "remote") return JudgeMode::remote;
    throw ConfigError("judge.mode: expected off, scripted or remote, got '" + std::string(s) + "'");
}

struct RunConfig {
    nlohmann::json raw;  // effective configuration after overrides; hashed and embedded
    std::filesystem::path base_dir;
    std::string config_hash;

    std::optional<ModelProfile> model;
    RunnerKind runner = RunnerKind::stub;
    std::vector<std::string> command;  // external runner argv
    std::filesystem::path manifest;    // replay runner
    StubOptions stub;

    std::vector<DatasetSpec> datasets;
    std::map<std::string, std::vector<std::string>> metrics;  // per dataset; empty = task defaults
    std::string prompt_family = "plain";
    std::string system_prompt;
    TemplateRegistry templates;
    std::optional<Quantization> quantization;
    std::uint64_t seed = 0;
    double telemetry_interval = 0.2;  // seconds; 0 disables sampling

    JudgeMode judge = JudgeMode::off;
    std::filesystem::path verdicts;
    RemoteJudgeConfig remote;
    JudgeOptions judge_options;

    std::size_t max_new_tokens = 256;
    double temperature = 0.0;
    ErrorPolicy on_error = ErrorPolicy::abort;
    std::filesystem::path out_dir = "out";
};

/// Command-line overrides, applied to the JSON before validation.
struct ConfigOverrides {
    std::optional<std::string> runner;
    std::optional<std::string> dataset;  // keep only this dataset
    std::optional<std::string> quant;
    std::optional<std::string> out;
    std::optional<double> telemetry_interval;
    std::optional<std::string> judge;
    std::optional<std::uint64_t> seed;
};

inline std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256: digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

namespace detail {

inline void check_keys(const nlohmann::json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) throw ConfigError(std::string(where) + ": expected an object");
    for (const auto& [k, _] : obj.items())
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw ConfigError(std::string(where.empty() ? "" : std::string(where) + ".") + k + ": unknown field");
}

template <typename T>
T get_field(const nlohmann::json& obj, const char* key, std::string_view where, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj[key].get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string(where) + key + ": wrong type");
    }
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace detail

inline void apply_overrides(nlohmann::json& j, const ConfigOverrides& o) {
    if (o.runner) j["runner"]["kind"] = *o.runner;
    if (o.dataset) {
        auto list = j.value("datasets", nlohmann::json::array());
        nlohmann::json kept = nlohmann::json::array();
        for (const auto& d : list)
            if (d.is_object() && d.value("name", std::string()) == *o.dataset) kept.push_back(d);
        if (kept.empty()) throw ConfigError("--dataset: no dataset named '" + *o.dataset + "' in the config");
        j["datasets"] = kept;
    }
    if (o.quant) j["quantization"] = *o.quant;
    if (o.out) j["out_dir"] = *o.out;
    if (o.telemetry_interval) j["telemetry_interval"] = *o.telemetry_interval;
    if (o.judge) j["judge"]["mode"] = *o.judge;
    if (o.seed) j["seed"] = *o.seed;
}

inline const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names = {"em",         "f1",     "rouge1",          "rougeL",
                                                   "sql_parser", "levenshtein", "choice_accuracy", "numeric_accuracy",
                                                   "vqa",        "win_rate", "mtbench",       "ts_accuracy"};
    return names;
}

inline bool is_judge_metric(std::string_view m) { return m == "win_rate" || m == "mtbench" || m == "ts_accuracy"; }

inline void check_metric_name(std::string_view m) {
    const auto& names = metric_names();
    if (std::find(names.begin(), names.end(), m) == names.end())
        throw ConfigError("unknown metric '" + std::string(m) + "'; available: " + detail::join(names, ", "));
}

inline std::vector<std::string> default_metrics(TaskKind t) {
    switch (t) {
        case TaskKind::question_answering: return {"em", "f1"};
        case TaskKind::summarization: return {"rouge1", "rougeL"};
        case TaskKind::text_to_sql: return {"sql_parser", "levenshtein"};
        case TaskKind::multitask_mc: return {"choice_accuracy"};
        case TaskKind::math: return {"numeric_accuracy"};
        case TaskKind::open_ended: return {"win_rate"};
        case TaskKind::multi_turn: return {"mtbench"};
        case TaskKind::vqa_direct:
        case TaskKind::vqa_choice: return {"vqa"};
        case TaskKind::trust_safety: return {"ts_accuracy"};
    }
    return {};
}

/// Metrics for a dataset: the configured list, or the task defaults minus
/// judge metrics when no judge is configured.
inline std::vector<std::string> metrics_for(const RunConfig& cfg, const DatasetSpec& spec) {
    auto it = cfg.metrics.find(spec.name);
    if (it != cfg.metrics.end() && !it->second.empty()) return it->second;
    std::vector<std::string> out;
    for (auto& m : default_metrics(spec.task))
        if (cfg.judge != JudgeMode::off || !is_judge_metric(m)) out.push_back(m);
    return out;
}

/// Parse and validate a configuration. Throws ConfigError naming the field.
inline RunConfig parse_run_config(nlohmann::json j, const std::filesystem::path& base_dir,
                                  const ConfigOverrides& overrides = {}) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    apply_overrides(j, overrides);
    detail::check_keys(j, "",
                       {"model", "runner", "datasets", "metrics", "prompt_family", "system_prompt", "templates",
                        "quantization", "seed", "telemetry_interval", "judge", "generation", "on_error", "out_dir"});
    RunConfig c;
    c.raw = j;
    c.base_dir = base_dir;
    c.config_hash = sha256_hex(j.dump());

    if (j.contains("model")) c.model = profile_from_json(j["model"]);

    const auto runner = j.value("runner", nlohmann::json::object());
    detail::check_keys(runner, "runner", {"kind", "command", "manifest", "stub"});
    c.runner = parse_runner_kind(detail::get_field<std::string>(runner, "kind", "runner.", "stub"));
    switch (c.runner) {
        case RunnerKind::external: {
            c.command = detail::get_field<std::vector<std::string>>(runner, "command", "runner.", {});
            if (c.command.empty()) throw ConfigError("runner.command: required for the external runner");
            break;
        }
        case RunnerKind::replay: {
            auto m = detail::get_field<std::string>(runner, "manifest", "runner.", "");
            if (m.empty()) throw ConfigError("runner.manifest: required for the replay runner");
            c.manifest = detail::resolve(base_dir, m);
            if (!std::filesystem::exists(c.manifest))
                throw ConfigError("runner.manifest: file not found: " + c.manifest.string());
            break;
        }
        case RunnerKind::stub: {
            c.stub = stub_options_from_json(runner.value("stub", nlohmann::json::object()));
            if (c.model) c.stub.profile = *c.model;
            break;
        }
    }

    if (!j.contains("datasets")) throw ConfigError("datasets: required");
    c.datasets = parse_dataset_specs(j["datasets"], base_dir);
    if (c.datasets.empty()) throw ConfigError("datasets: at least one dataset is required");
    c.seed = detail::get_field<std::uint64_t>(j, "seed", "", 0);
    for (std::size_t i = 0; i < c.datasets.size(); ++i)
        if (!j["datasets"][i].contains("seed")) c.datasets[i].seed = c.seed;
    for (const auto& d : c.datasets) {
        if (!std::filesystem::is_regular_file(d.source_path))
            throw ConfigError("datasets." + d.name + ".source_path: file not found: " + d.source_path.string());
        if (is_vqa(d.task)) parse_vqa_style(d.vqa_prompt);
    }

    if (j.contains("templates")) {
        if (!j["templates"].is_object()) throw ConfigError("templates: expected an object of family -> pattern");
        for (const auto& [fam, pat] : j["templates"].items()) {
            if (!pat.is_string()) throw ConfigError("templates." + fam + ": expected a string");
            try {
                c.templates.add(fam, pat.get<std::string>());
            } catch (const Error& e) {
                throw ConfigError("templates." + fam + ": " + e.what());
            }
        }
    }
    c.prompt_family = detail::get_field<std::string>(j, "prompt_family", "", "plain");
    if (!c.templates.contains(c.prompt_family))
        throw ConfigError("prompt_family: unknown family '" + c.prompt_family + "'; available: " +
                          detail::join(c.templates.families(), ", "));
    c.system_prompt = detail::get_field<std::string>(j, "system_prompt", "", "");
    if (j.contains("quantization")) c.quantization = parse_quantization(detail::get_field<std::string>(j, "quantization", "", ""));
    if (c.quantization && c.runner == RunnerKind::stub) c.stub.profile.quantization = *c.quantization;

    c.telemetry_interval = detail::get_field<double>(j, "telemetry_interval", "", 0.2);
    if (c.telemetry_interval < 0.0) throw ConfigError("telemetry_interval: must be >= 0 (0 disables sampling)");

    const auto judge = j.value("judge", nlohmann::json::object());
    detail::check_keys(judge, "judge", {"mode", "verdicts", "remote", "seed", "max_concurrency", "prompts"});
    c.judge = parse_judge_mode(detail::get_field<std::string>(judge, "mode", "judge.", "off"));
    c.judge_options.seed = detail::get_field<std::uint64_t>(judge, "seed", "judge.", c.seed);
    auto conc = detail::get_field<std::int64_t>(judge, "max_concurrency", "judge.", 4);
    if (conc < 1) throw ConfigError("judge.max_concurrency: must be >= 1");
    c.judge_options.max_concurrency = static_cast<std::size_t>(conc);
    if (judge.contains("prompts")) {
        const auto& p = judge["prompts"];
        detail::check_keys(p, "judge.prompts", {"version", "preference", "rating", "correctness"});
        auto load = [&](const char* key, std::string& slot) {
            if (!p.contains(key)) return;
            auto path = detail::resolve(base_dir, p[key].get<std::string>());
            if (!std::filesystem::exists(path)) throw ConfigError(std::string("judge.prompts.") + key + ": file not found: " + path.string());
            slot = detail::read_file(path);
        };
        load("preference", c.judge_options.prompts.preference);
        load("rating", c.judge_options.prompts.rating);
        load("correctness", c.judge_options.prompts.correctness);
        if (!p.contains("version")) throw ConfigError("judge.prompts.version: required when prompts are overridden");
        c.judge_options.prompts.version = p["version"].get<std::string>();
    }
    if (c.judge == JudgeMode::scripted) {
        auto v = detail::get_field<std::string>(judge, "verdicts", "judge.", "");
        if (v.empty()) throw ConfigError("judge.verdicts: required for the scripted judge");
        c.verdicts = detail::resolve(base_dir, v);
        if (!std::filesystem::exists(c.verdicts)) throw ConfigError("judge.verdicts: file not found: " + c.verdicts.string());
    }
    if (c.judge == JudgeMode::remote) c.remote = remote_judge_config_from_json(judge.value("remote", nlohmann::json::object()));

    if (j.contains("metrics")) {
        if (!j["metrics"].is_object()) throw ConfigError("metrics: expected an object of dataset -> [metric]");
        for (const auto& [name, list] : j["metrics"].items()) {
            if (std::none_of(c.datasets.begin(), c.datasets.end(), [&](const auto& d) { return d.name == name; }) &&
                !overrides.dataset)
                throw ConfigError("metrics." + name + ": no such dataset");
            auto names = list.get<std::vector<std::string>>();
            for (const auto& m : names) {
                check_metric_name(m);
                if (is_judge_metric(m) && c.judge == JudgeMode::off)
                    throw ConfigError("metrics." + name + ": metric '" + m + "' needs a judge but judge.mode is off");
            }
            c.metrics[name] = names;
        }
    }

    const auto gen = j.value("generation", nlohmann::json::object());
    detail::check_keys(gen, "generation", {"max_new_tokens", "temperature"});
    auto mnt = detail::get_field<std::int64_t>(gen, "max_new_tokens", "generation.", 256);
    if (mnt <= 0) throw ConfigError("generation.max_new_tokens: must be > 0");
    c.max_new_tokens = static_cast<std::size_t>(mnt);
    c.temperature = detail::get_field<double>(gen, "temperature", "generation.", 0.0);

    auto policy = detail::get_field<std::string>(j, "on_error", "", "abort");
    if (policy == "abort") c.on_error = ErrorPolicy::abort;
    else if (policy == "skip") c.on_error = ErrorPolicy::skip;
    else throw ConfigError("on_error: expected abort or skip, got '" + policy + "'");

    c.out_dir = detail::resolve(base_dir, detail::get_field<std::string>(j, "out_dir", "", "out"));
    return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {}) {
    if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(detail::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return parse_run_config(std::move(j), path.parent_path(), overrides);
}

// ---------------------------------------------------------------------------
// Predictions

struct Prediction {
    std::string id;
    std::string prompt;
    std::vector<std::string> outputs;  // one per turn
    std::optional<std::string> error;  // set when generation failed and the sample was skipped

    const std::string& output() const {
        static const std::string empty;
        return outputs.empty() ? empty : outputs.front();
    }
};

inline std::string prediction_to_line(const Prediction& p) {
    nlohmann::json j{{"id", p.id}, {"prompt", p.prompt}, {"output", p.output()}};
    if (p.outputs.size() > 1) j["outputs"] = p.outputs;
    if (p.error) j["error"] = *p.error;
    return j.dump() + "\n";
}

inline std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("predictions file not found: " + path.string());
    std::vector<Prediction> out;
    std::set<std::string> seen;
    std::size_t lineno = 0;
    for (const auto& line : detail::split(detail::read_file(path), '\n')) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            Prediction p;
            p.id = j.at("id").get<std::string>();
            p.prompt = j.value("prompt", std::string());
            if (j.contains("outputs")) p.outputs = j["outputs"].get<std::vector<std::string>>();
            else p.outputs = {j.at("output").get<std::string>()};
            if (j.contains("error")) p.error = j["error"].get<std::string>();
            if (!seen.insert(p.id).second) throw ParseError("duplicate id '" + p.id + "'");
            out.push_back(std::move(p));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scoring

struct ScoreSet {
    std::vector<SampleScore> scores;
    std::map<std::string, std::size_t> exclusions;  // unparseable judge verdicts per metric
};

namespace detail {

inline double best_over_refs(const SampleRecord& r, const std::function<double(const std::string&)>& fn,
                             std::string_view metric) {
    if (r.references.empty())
        throw Error("metric " + std::string(metric) + " needs references; sample '" + r.id + "' has none");
    double best = fn(r.references.front());
    for (std::size_t i = 1; i < r.references.size(); ++i) best = std::max(best, fn(r.references[i]));
    return best;
}

inline double reference_metric(std::string_view m, const SampleRecord& r, const std::string& pred) {
    if (m == "em") return best_over_refs(r, [&](const auto& g) { return double(exact_match(pred, g)); }, m);
    if (m == "f1") return best_over_refs(r, [&](const auto& g) { return token_f1(pred, g); }, m);
    if (m == "rouge1") return best_over_refs(r, [&](const auto& g) { return rouge1(pred, g); }, m);
    if (m == "rougeL") return best_over_refs(r, [&](const auto& g) { return rougeL(pred, g); }, m);
    if (m == "sql_parser") return best_over_refs(r, [&](const auto& g) { return sql_parser_score(pred, g); }, m);
    if (m == "levenshtein") return best_over_refs(r, [&](const auto& g) { return levenshtein_score(pred, g); }, m);
    if (m == "numeric_accuracy") return best_over_refs(r, [&](const auto& g) { return double(numeric_match(pred, g)); }, m);
    if (m == "choice_accuracy")
        return best_over_refs(r, [&](const auto& g) { return double(choice_match(pred, g, r.options)); }, m);
    if (m == "vqa") {
        if (r.references.empty()) throw Error("metric vqa needs references; sample '" + r.id + "' has none");
        if (r.task == TaskKind::vqa_choice) return vqa_single_score(pred, r.references.front(), true);
        if (r.references.size() > 1) return vqa_multi_score(pred, r.references);
        return vqa_single_score(pred, r.references.front());
    }
    throw Error("metric " + std::string(m) + " is not a reference metric");
}

}  // namespace detail

/// Score generated outputs. Rows come out in record order, then metric order;
/// multi-turn ratings use "<id>#<turn>" sample ids. Shared by `run` and
/// `score`, so in-line and offline scoring agree byte for byte.
inline ScoreSet score_predictions(const std::vector<SampleRecord>& records, const std::vector<Prediction>& predictions,
                                  const std::vector<std::string>& metrics, JudgeClient* judge,
                                  const JudgeOptions& judge_options = {}) {
    for (const auto& m : metrics) check_metric_name(m);
    std::map<std::string, const Prediction*> by_id;
    for (const auto& p : predictions) by_id[p.id] = &p;

    std::vector<const SampleRecord*> scored;
    for (const auto& r : records) {
        auto it = by_id.find(r.id);
        if (it != by_id.end() && !it->second->error) scored.push_back(&r);
    }

    // rows[metric][record index] -> score rows for that record
    std::map<std::string, std::vector<std::vector<SampleScore>>> rows;
    ScoreSet out;
    for (const auto& m : metrics) {
        auto& per = rows[m];
        per.resize(scored.size());
        if (!is_judge_metric(m)) {
            for (std::size_t i = 0; i < scored.size(); ++i)
                per[i].push_back({scored[i]->id, m, detail::reference_metric(m, *scored[i], by_id[scored[i]->id]->output())});
            continue;
        }
        if (!judge) throw ConfigError("metric '" + m + "' needs a judge but none is configured");
        if (scored.empty()) continue;
        if (m == "win_rate") {
            std::vector<JudgePair> pairs;
            for (const auto* r : scored) {
                if (r->references.empty())
                    throw Error("metric win_rate needs a baseline output in references; sample '" + r->id + "' has none");
                pairs.push_back({r->id, r->input, by_id[r->id]->output(), r->references.front()});
            }
            auto res = win_rate(*judge, pairs, judge_options);
            out.exclusions[m] = res.exclusions;
            for (std::size_t i = 0; i < scored.size(); ++i)
                if (res.verdicts[i].outcome != PairOutcome::excluded)
                    per[i].push_back({scored[i]->id, m, res.verdicts[i].outcome == PairOutcome::win ? 100.0 : 0.0});
        } else if (m == "mtbench") {
            std::vector<Conversation> convs;
            for (const auto* r : scored) {
                Conversation c{r->id, {}};
                const auto& outs = by_id[r->id]->outputs;
                std::vector<std::string> questions{r->input};
                questions.insert(questions.end(), r->turns.begin(), r->turns.end());
                for (std::size_t t = 0; t < questions.size(); ++t)
                    c.turns.push_back({questions[t], t < outs.size() ? outs[t] : std::string()});
                convs.push_back(std::move(c));
            }
            auto res = mtbench_score(*judge, convs, judge_options);
            out.exclusions[m] = res.exclusions;
            for (std::size_t i = 0; i < scored.size(); ++i) {
                const auto& ratings = res.ratings.at(scored[i]->id);
                for (std::size_t t = 0; t < ratings.size(); ++t)
                    if (ratings[t]) per[i].push_back({turn_key(scored[i]->id, t + 1), m, *ratings[t]});
            }
        } else {
            std::vector<JudgedItem> items;
            for (const auto* r : scored)
                items.push_back({r->id, r->input, by_id[r->id]->output(), detail::join(r->references, " | ")});
            auto res = ts_accuracy(*judge, items, judge_options);
            out.exclusions[m] = res.exclusions;
            for (std::size_t i = 0; i < scored.size(); ++i)
                if (res.verdicts[i]) per[i].push_back({scored[i]->id, m, *res.verdicts[i] ? 1.0 : 0.0});
        }
    }
    for (std::size_t i = 0; i < scored.size(); ++i)
        for (const auto& m : metrics)
            for (auto& s : rows[m][i]) out.scores.push_back(std::move(s));
    return out;
}

// ---------------------------------------------------------------------------
// Prompt hydration

inline std::string hydrate_user_text(const DatasetSpec& spec, const SampleRecord& r) {
    if (is_vqa(r.task)) return render_vqa(parse_vqa_style(spec.vqa_prompt), r);
    return task_prompt(r);
}

/// Multi-turn follow-ups carry the earlier exchange inline inside the user slot.
inline std::string with_history(const std::vector<std::string>& questions, const std::vector<std::string>& answers,
                                std::size_t turn) {
    std::string out;
    for (std::size_t t = 0; t < turn; ++t) out += questions[t] + "\n" + answers[t] + "\n\n";
    return out + questions[turn];
}

// ---------------------------------------------------------------------------
// run

inline std::unique_ptr<Runner> make_runner(const RunConfig& cfg) {
    switch (cfg.runner) {
        case RunnerKind::stub: return std::make_unique<StubRunner>(cfg.stub);
        case RunnerKind::replay: return std::make_unique<ReplayRunner>(load_replay_manifest(cfg.manifest));
        case RunnerKind::external: return std::make_unique<ExternalRunner>(cfg.command);
    }
    return nullptr;
}

inline std::unique_ptr<JudgeClient> make_judge(const RunConfig& cfg) {
    switch (cfg.judge) {
        case JudgeMode::off: return nullptr;
        case JudgeMode::scripted: return std::make_unique<ScriptedJudge>(load_verdict_table(cfg.verdicts));
        case JudgeMode::remote: return std::make_unique<RemoteJudge>(cfg.remote);
    }
    return nullptr;
}

inline std::string path_component(std::string_view s) {
    std::string out;
    for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_' ? c : '_';
    if (out.empty() || out == "." || out == "..") out = "_" + out;
    return out;
}

inline std::filesystem::path artifact_dir(const RunConfig& cfg, const ModelProfile& model, const DatasetSpec& d) {
    return cfg.out_dir / path_component(model.name) / std::string(to_string(model.quantization)) / path_component(d.name);
}

struct LoadedDataset {
    DatasetSpec spec;
    std::vector<SampleRecord> records;  // after down-sampling
    std::vector<std::string> metrics;
};

/// Load and validate every dataset before any generation. Any problem is a
/// configuration error.
inline std::vector<LoadedDataset> load_datasets(const RunConfig& cfg) {
    std::vector<LoadedDataset> out;
    for (const auto& spec : cfg.datasets) {
        LoadedDataset d{spec, {}, metrics_for(cfg, spec)};
        try {
            d.records = down_sample(load_records(spec), spec.sample_cap, spec.seed);
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
        if (d.records.empty()) throw ConfigError("datasets." + spec.name + ": no records");
        for (const auto& r : d.records) {
            if (is_vqa(r.task)) {
                try {
                    render_vqa(parse_vqa_style(spec.vqa_prompt), r);
                } catch (const Error& e) {
                    throw ConfigError("datasets." + spec.name + ": " + e.what());
                }
            }
        }
        out.push_back(std::move(d));
    }
    return out;
}

struct DatasetRun {
    std::vector<Prediction> predictions;
    std::vector<GenerationTrace> traces;
    std::optional<UtilizationTrace> utilization;
    std::vector<std::string> failed;
    bool aborted = false;
    std::string abort_reason;
};

inline DatasetRun generate_dataset(const RunConfig& cfg, Runner& runner, const ModelProfile& model,
                                   const LoadedDataset& d, std::ostream& log) {
    DatasetRun run;
    std::unique_ptr<Recording> recording;
    if (cfg.telemetry_interval > 0.0) {
        UtilizationTrace meta;
        meta.model = model.name;
        meta.quantization = std::string(to_string(model.quantization));
        meta.dataset = d.spec.name;
        recording = start_sampling(runner.process_id().value_or(static_cast<int>(::getpid())), cfg.telemetry_interval,
                                   nullptr, meta);
    }
    for (const auto& r : d.records) {
        Prediction p;
        p.id = r.id;
        std::vector<std::string> questions{hydrate_user_text(d.spec, r)};
        questions.insert(questions.end(), r.turns.begin(), r.turns.end());
        try {
            for (std::size_t t = 0; t < questions.size(); ++t) {
                const double sample_start = runner.virtual_time() ? 0.0 : monotonic_seconds();
                GenerationRequest req;
                req.id = t == 0 ? r.id : turn_key(r.id, t + 1);
                req.prompt = render_chat(cfg.templates, cfg.prompt_family, cfg.system_prompt,
                                         with_history(questions, p.outputs, t));
                req.image_ref = r.image_ref;
                req.max_new_tokens = cfg.max_new_tokens;
                req.temperature = cfg.temperature;
                req.seed = cfg.seed;
                if (t == 0) p.prompt = req.prompt;
                auto trace = generate(runner, req);
                // Virtual-time runners have no hydration overhead to measure.
                trace.t_sample_start = runner.virtual_time() ? trace.t_submit : sample_start;
                p.outputs.push_back(trace.output_text);
                run.traces.push_back(std::move(trace));
            }
        } catch (const Error& e) {
            if (cfg.on_error == ErrorPolicy::abort) {
                run.aborted = true;
                run.abort_reason = "sample '" + r.id + "': " + e.what();
                break;
            }
            log << "warning: skipping sample '" << r.id << "': " << e.what() << "\n";
            p.error = e.what();
            p.outputs.clear();
            run.failed.push_back(r.id);
        }
        run.predictions.push_back(std::move(p));
    }
    if (recording) run.utilization = recording->stop();
    return run;
}

inline RunReport assemble_report(const RunConfig& cfg, const ModelProfile& model, const LoadedDataset& d,
                                 const DatasetRun& run, const ScoreSet& scores, const JudgeClient* judge) {
    RunReport rep;
    rep.model = model;
    rep.dataset = d.spec.name;
    rep.task = d.spec.task;
    rep.metrics = metric_means(scores.scores);
    std::vector<EfficiencyMetrics> eff;
    std::size_t eff_excluded = 0;
    for (const auto& t : run.traces) {
        try {
            eff.push_back(compute_efficiency(t));
        } catch (const EfficiencyError&) {
            ++eff_excluded;
        }
    }
    if (!eff.empty()) rep.efficiency = aggregate_efficiency(eff);
    if (run.utilization && !run.utilization->samples.empty()) rep.utilization = summarize(*run.utilization);
    rep.meta.config_hash = cfg.config_hash;
    rep.meta.seed = cfg.seed;
    rep.meta.sample_count = run.predictions.size() - run.failed.size();
    rep.meta.exclusions = scores.exclusions;
    if (eff_excluded) rep.meta.exclusions["efficiency"] = eff_excluded;
    rep.meta.failed_samples = run.failed;
    rep.meta.partial = run.aborted;
    if (!run.traces.empty()) {
        rep.meta.first_submit = run.traces.front().t_submit;
        rep.meta.last_done = run.traces.back().t_done;
    }
    rep.meta.prompt_family = cfg.prompt_family;
    rep.meta.judge = judge ? judge->describe() : "off";
    if (judge) {
        rep.meta.judge_seed = cfg.judge_options.seed;
        rep.meta.judge_prompts_version = cfg.judge_options.prompts.version;
    }
    rep.config = cfg.raw;
    return rep;
}

inline void write_artifacts(const std::filesystem::path& dir, const DatasetRun& run, const ScoreSet& scores,
                            const std::optional<RunReport>& report, const std::string& config_hash) {
    std::string preds, traces;
    for (const auto& p : run.predictions) preds += prediction_to_line(p);
    for (const auto& t : run.traces) {
        auto j = to_json(t);
        j["config_hash"] = config_hash;
        traces += j.dump() + "\n";
    }
    detail::write_file_atomic(dir / "predictions.jsonl", preds);
    detail::write_file_atomic(dir / "traces.jsonl", traces);
    detail::write_file_atomic(dir / "scores.csv", scores_to_csv(scores.scores));
    if (run.utilization) detail::write_file_atomic(dir / "utilization.csv", trace_to_csv(*run.utilization));
    if (report) detail::write_file_atomic(dir / "report.json", to_json(*report).dump(2) + "\n");
}

/// Run a validated configuration. Returns the process exit code.
inline int cmd_run(const RunConfig& cfg, std::ostream& log = std::cerr) {
    std::vector<LoadedDataset> datasets;
    std::unique_ptr<JudgeClient> judge;
    try {
        datasets = load_datasets(cfg);
        judge = make_judge(cfg);
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        auto runner = make_runner(cfg);
        ModelProfile model = runner->probe();
        if (cfg.quantization && model.quantization != *cfg.quantization)
            throw RunnerError("runner reports quantization " + std::string(to_string(model.quantization)) +
                              " but the config requests " + std::string(to_string(*cfg.quantization)));
        if (cfg.model && cfg.model->name != model.name)
            throw RunnerError("runner reports model '" + model.name + "' but the config names '" + cfg.model->name + "'");

        bool failed = false;
        for (const auto& d : datasets) {
            auto run = generate_dataset(cfg, *runner, model, d, log);
            ScoreSet scores;
            std::optional<RunReport> report;
            std::vector<Prediction> ok;
            for (const auto& p : run.predictions)
                if (!p.error) ok.push_back(p);
            if (!ok.empty()) {
                scores = score_predictions(d.records, ok, d.metrics, judge.get(), cfg.judge_options);
                report = assemble_report(cfg, model, d, run, scores, judge.get());
            }
            const auto dir = artifact_dir(cfg, model, d.spec);
            write_artifacts(dir, run, scores, report, cfg.config_hash);
            if (run.aborted) {
                log << "error: " << run.abort_reason << " (partial artifacts in " << dir.string() << ")\n";
                return kExitRuntime;
            }
            if (!report) {
                log << "error: every sample of " << d.spec.name << " failed\n";
                failed = true;
                continue;
            }
            log << d.spec.name << ": " << report->meta.sample_count << " samples -> " << dir.string() << "\n";
        }
        return failed ? kExitRuntime : kExitOk;
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

// ---------------------------------------------------------------------------
// score

/// Offline re-scoring of a predictions file against its dataset.
inline ScoreSet rescore(const std::vector<Prediction>& predictions, const DatasetSpec& spec,
                        const std::vector<std::string>& metrics, JudgeClient* judge, const JudgeOptions& opts = {}) {
    for (const auto& m : metrics) check_metric_name(m);
    auto records = down_sample(load_records(spec), spec.sample_cap, spec.seed);
    std::set<std::string> rec_ids, pred_ids;
    for (const auto& r : records) rec_ids.insert(r.id);
    for (const auto& p : predictions) pred_ids.insert(p.id);
    std::vector<std::string> missing, extra;
    std::set_difference(rec_ids.begin(), rec_ids.end(), pred_ids.begin(), pred_ids.end(), std::back_inserter(missing));
    std::set_difference(pred_ids.begin(), pred_ids.end(), rec_ids.begin(), rec_ids.end(), std::back_inserter(extra));
    if (!missing.empty() || !extra.empty()) {
        auto head = [](const std::vector<std::string>& v) {
            std::vector<std::string> h(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(v.size(), 10)));
            return detail::join(h, ", ") + (v.size() > 10 ? ", ..." : "");
        };
        std::string msg = "predictions do not match dataset " + spec.name + ":";
        if (!missing.empty()) msg += " missing predictions for [" + head(missing) + "]";
        if (!extra.empty()) msg += " unknown prediction ids [" + head(extra) + "]";
        throw ConfigError(msg);
    }
    return score_predictions(records, predictions, metrics, judge, opts);
}

// ---------------------------------------------------------------------------
// report

enum class ReportShape { leaderboard, quant_delta, acc_vs_disk };

inline ReportShape parse_report_shape(std::string_view s) {
    if (s == "leaderboard") return ReportShape::leaderboard;
    if (s == "quant-delta") return ReportShape::quant_delta;
    if (s == "acc-vs-disk") return ReportShape::acc_vs_disk;
    throw ConfigError("unknown report shape '" + std::string(s) + "' (expected leaderboard, quant-delta or acc-vs-disk)");
}

/// Every report.json under `dir`, in path order.
inline std::vector<RunReport> collect_reports(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw ConfigError("artifact directory not found: " + dir.string());
    std::vector<std::filesystem::path> paths;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() == "report.json") paths.push_back(e.path());
    std::sort(paths.begin(), paths.end());
    std::vector<RunReport> out;
    for (const auto& p : paths) {
        try {
            out.push_back(run_report_from_json(nlohmann::json::parse(detail::read_file(p))));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(p.string() + ": " + e.what());
        }
    }
    if (out.empty()) throw ConfigError("no report.json files under " + dir.string());
    return out;
}

struct ReportOptions {
    ReportShape shape = ReportShape::leaderboard;
    ReportFormat format = ReportFormat::markdown;
    Quantization from = Quantization::bit16;  // quant-delta
    Quantization to = Quantization::bit8;
    Quantization quant = Quantization::bit4;  // acc-vs-disk
    std::vector<MetricColumn> columns;        // acc-vs-disk; empty = all
};

inline std::string render_report(const std::vector<RunReport>& reports, const ReportOptions& o) {
    switch (o.shape) {
        case ReportShape::leaderboard: return render_reports(reports, o.format);
        case ReportShape::quant_delta: {
            std::vector<RunReport> a, b;
            for (const auto& r : reports) {
                if (r.model.quantization == o.from) a.push_back(r);
                if (r.model.quantization == o.to) b.push_back(r);
            }
            if (a.empty() || b.empty())
                throw Error("quant-delta: need reports at both " + std::string(to_string(o.from)) + " and " +
                            std::string(to_string(o.to)));
            return render_quant_delta(quant_delta(a, b), o.format);
        }
        case ReportShape::acc_vs_disk: return render_accuracy_vs_disk(accuracy_vs_disk(reports, o.quant, o.columns), o.format);
    }
    return {};
}

// ---------------------------------------------------------------------------
// summarize

/// Efficiency summary of a traces.jsonl file. Traces without output tokens
/// are counted under "excluded".
inline nlohmann::json summarize_traces(const std::filesystem::path& path) {
    std::vector<EfficiencyMetrics> eff;
    std::size_t excluded = 0, lineno = 0;
    for (const auto& line : detail::split(detail::read_file(path), '\n')) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        GenerationTrace t;
        try {
            auto j = nlohmann::json::parse(line);
            auto opt = [&](const char* k) -> std::optional<double> {
                if (!j.contains(k) || j[k].is_null()) return std::nullopt;
                return j[k].get<double>();
            };
            t.request_id = j.at("request_id").get<std::string>();
            t.t_submit = j.at("t_submit").get<double>();
            t.t_first_token = opt("t_first_token");
            t.t_last_token = opt("t_last_token");
            t.t_done = j.at("t_done").get<double>();
            t.t_sample_start = opt("t_sample_start");
            t.n_input_tokens = j.at("n_input_tokens").get<std::size_t>();
            t.n_output_tokens = j.at("n_output_tokens").get<std::size_t>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
        }
        try {
            eff.push_back(compute_efficiency(t));
        } catch (const EfficiencyError&) {
            ++excluded;
        }
    }
    if (eff.empty()) throw Error(path.string() + ": no trace with output tokens");
    auto j = to_json(aggregate_efficiency(eff));
    j["excluded"] = excluded;
    return j;
}

inline nlohmann::json summarize_utilization(const std::filesystem::path& path) {
    return to_json(summarize(trace_from_csv(detail::read_file(path))));
}

// ---------------------------------------------------------------------------
// Engine side of the wire protocol

/// Serve an in-process runner over the line protocol until `in` closes.
/// Timestamps are left to the receiving harness.
inline void serve_engine(Runner& runner, std::istream& in, std::ostream& out) {
    std::string line;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        std::string id;
        try {
            auto j = nlohmann::json::parse(line);
            auto type = j.value("type", std::string());
            if (type == "probe") {
                auto p = to_json(runner.probe());
                p["type"] = "profile";
                out << p.dump() << "\n" << std::flush;
                continue;
            }
            if (type != "generate") throw ProtocolError("unknown message type '" + type + "'");
            auto req = request_from_json(j);
            id = req.id;
            runner.stream(req, [&](TokenEvent e) {
                out << to_json(e).dump() << "\n" << std::flush;
            });
        } catch (const std::exception& e) {
            auto err = make_event(id, EventKind::error, e.what());
            out << to_json(err).dump() << "\n" << std::flush;
        }
    }
}

}  // namespace mobench

// mobench: run benchmarks, rescore predictions, summarize traces and build
// reports from run artifacts.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mobench/harness.hpp"

namespace {

constexpr const char* kFooter = R"(Exit codes: 0 success, 1 runtime failure, 2 configuration error.

Paths:
  Relative paths inside a config file resolve against the config file's
  directory. Run artifacts are written to
  <out_dir>/<model>/<quantization>/<dataset>/ as predictions.jsonl,
  scores.csv, traces.jsonl, utilization.csv (telemetry on) and report.json.

Environment:
  MOBENCH_JUDGE_API_KEY  bearer token for the remote judge (the variable name
                         can be changed with judge.remote.api_key_env).)";

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
    } else {
        mobench::detail::write_file_atomic(out_path, text);
    }
}

std::vector<mobench::MetricColumn> parse_columns(const std::string& s) {
    std::vector<mobench::MetricColumn> out;
    if (s.empty()) return out;
    for (const auto& item : mobench::detail::split(s, ',')) {
        auto colon = item.find(':');
        if (colon == std::string::npos) throw mobench::ConfigError("--columns: expected dataset:metric, got '" + item + "'");
        out.emplace_back(item.substr(0, colon), item.substr(colon + 1));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mobench: on-device LLM/LMM benchmark harness"};
    app.footer(kFooter);
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Generate, score and record one model over the configured datasets");
    std::string config_path;
    mobench::ConfigOverrides ov;
    std::string runner, dataset, quant, out_dir, judge;
    double telemetry = -1.0;
    std::uint64_t seed = 0;
    run->add_option("--config", config_path, "Run configuration (JSON)")->required();
    auto* runner_opt = run->add_option("--runner", runner, "Runner backend")->check(CLI::IsMember({"stub", "replay", "external"}));
    auto* dataset_opt = run->add_option("--dataset", dataset, "Only run this dataset from the config");
    auto* quant_opt = run->add_option("--quant", quant, "Quantization tag: 16bit, 8bit, 4bit or 3bit");
    auto* out_opt = run->add_option("--out", out_dir, "Output directory");
    auto* tele_opt = run->add_option("--telemetry-interval", telemetry, "Sampling interval in seconds; 0 disables sampling");
    auto* judge_opt = run->add_option("--judge", judge, "Judge mode")->check(CLI::IsMember({"off", "scripted", "remote"}));
    auto* seed_opt = run->add_option("--seed", seed, "Sampling and down-sampling seed");

    // tasks
    auto* tasks = app.add_subcommand("tasks", "List the built-in dataset catalogue");

    // score
    auto* score = app.add_subcommand("score", "Rescore a predictions file offline");
    std::string predictions, metrics_list, score_out, score_dataset, score_config, score_judge;
    score->add_option("--predictions", predictions, "predictions.jsonl from a run")->required();
    score->add_option("--config", score_config, "Run configuration holding the dataset spec")->required();
    score->add_option("--dataset", score_dataset, "Dataset name in the config (default: the only one)");
    score->add_option("--metrics", metrics_list, "Comma-separated metric names (default: the run's metrics)");
    score->add_option("--judge", score_judge, "Judge mode")->check(CLI::IsMember({"off", "scripted", "remote"}));
    score->add_option("--out", score_out, "Scores CSV path (default: stdout)");

    // report
    auto* report = app.add_subcommand("report", "Aggregate report.json files into a table");
    std::string artifacts, shape = "leaderboard", format = "markdown", from = "16bit", to = "8bit", at = "4bit",
                columns, report_out;
    report->add_option("--artifacts", artifacts, "Directory scanned recursively for report.json")->required();
    report->add_option("--shape", shape, "leaderboard, quant-delta or acc-vs-disk")->capture_default_str();
    report->add_option("--format", format, "csv, json or markdown")->capture_default_str();
    report->add_option("--from", from, "quant-delta: baseline quantization")->capture_default_str();
    report->add_option("--to", to, "quant-delta: compared quantization")->capture_default_str();
    report->add_option("--at", at, "acc-vs-disk: quantization level")->capture_default_str();
    report->add_option("--columns", columns, "acc-vs-disk: dataset:metric,... (default: all)");
    report->add_option("--out", report_out, "Output path (default: stdout)");

    // summarize
    auto* summarize = app.add_subcommand("summarize", "Summarize a utilization.csv or traces.jsonl file");
    std::string trace_path;
    summarize->add_option("file", trace_path, "utilization.csv or traces.jsonl")->required()->check(CLI::ExistingFile);

    // stub-engine
    auto* engine = app.add_subcommand("stub-engine", "Serve a stub or replay runner over the stdio protocol");
    std::string response = "ok", model_name = "stub", engine_quant = "16bit", size = "1B-6B", replay;
    double disk = 0.001, per_token = 0.01, prefill = 0.05;
    std::size_t chars_per_token = 1;
    engine->add_option("--response", response, "Fixed response text")->capture_default_str();
    engine->add_option("--chars-per-token", chars_per_token, "Characters per emitted token")->capture_default_str();
    engine->add_option("--prefill", prefill, "Seconds before the first token")->capture_default_str();
    engine->add_option("--per-token", per_token, "Seconds between tokens")->capture_default_str();
    engine->add_option("--name", model_name, "Reported model name")->capture_default_str();
    engine->add_option("--engine-quant", engine_quant, "Reported quantization")->capture_default_str();
    engine->add_option("--size", size, "Reported size category")->capture_default_str();
    engine->add_option("--disk", disk, "Reported disk usage in GB")->capture_default_str();
    engine->add_option("--replay", replay, "Serve canned outputs from a replay manifest instead");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : mobench::kExitConfig;
    }

    try {
        if (*run) {
            if (*runner_opt) ov.runner = runner;
            if (*dataset_opt) ov.dataset = dataset;
            if (*quant_opt) ov.quant = quant;
            if (*out_opt) ov.out = std::filesystem::absolute(out_dir).string();
            if (*tele_opt) ov.telemetry_interval = telemetry;
            if (*judge_opt) ov.judge = judge;
            if (*seed_opt) ov.seed = seed;
            auto cfg = mobench::load_run_config(config_path, ov);
            return mobench::cmd_run(cfg);
        }
        if (*tasks) {
            std::printf("%-20s %-20s %8s  %s\n", "dataset", "task", "cap", "metrics");
            for (const auto& e : mobench::kCatalog) {
                std::printf("%-20s %-20s %8zu  %s\n", std::string(e.name).c_str(), std::string(to_string(e.task)).c_str(),
                            e.default_cap, mobench::detail::join(mobench::default_metrics(e.task), ",").c_str());
            }
            return 0;
        }
        if (*score) {
            mobench::ConfigOverrides sov;
            if (!score_dataset.empty()) sov.dataset = score_dataset;
            if (!score_judge.empty()) sov.judge = score_judge;
            auto cfg = mobench::load_run_config(score_config, sov);
            if (cfg.datasets.size() != 1)
                throw mobench::ConfigError("--dataset: the config has several datasets; pick one");
            const auto& spec = cfg.datasets.front();
            auto metrics = metrics_list.empty() ? mobench::metrics_for(cfg, spec) : mobench::detail::split(metrics_list, ',');
            for (const auto& m : metrics) mobench::check_metric_name(m);
            auto judge_client = mobench::make_judge(cfg);
            auto preds = mobench::load_predictions(predictions);
            auto scores = mobench::rescore(preds, spec, metrics, judge_client.get(), cfg.judge_options);
            emit(mobench::scores_to_csv(scores.scores), score_out);
            return 0;
        }
        if (*report) {
            mobench::ReportOptions o;
            o.shape = mobench::parse_report_shape(shape);
            o.format = mobench::parse_report_format(format);
            o.from = mobench::parse_quantization(from);
            o.to = mobench::parse_quantization(to);
            o.quant = mobench::parse_quantization(at);
            o.columns = parse_columns(columns);
            emit(mobench::render_report(mobench::collect_reports(artifacts), o), report_out);
            return 0;
        }
        if (*summarize) {
            std::filesystem::path p(trace_path);
            auto j = p.extension() == ".csv" ? mobench::summarize_utilization(p) : mobench::summarize_traces(p);
            std::cout << j.dump(2) << "\n";
            return 0;
        }
        if (*engine) {
            std::unique_ptr<mobench::Runner> r;
            if (!replay.empty()) {
                r = std::make_unique<mobench::ReplayRunner>(mobench::load_replay_manifest(replay));
            } else {
                mobench::StubOptions so;
                so.response = response;
                so.chars_per_token = chars_per_token;
                so.prefill_seconds = prefill;
                so.per_token_seconds = per_token;
                so.realtime = true;
                so.profile = {model_name, mobench::parse_size_category(size), mobench::parse_quantization(engine_quant),
                              disk, mobench::Modality::text};
                r = std::make_unique<mobench::StubRunner>(so);
            }
            mobench::serve_engine(*r, std::cin, std::cout);
            return 0;
        }
    } catch (const mobench::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return mobench::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return mobench::kExitRuntime;
    }
    return 0;
}

// Acceptance checks: one PASS/FAIL line per criterion. Exits 1 if any check
// fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "leaderboard_fixtures.hpp"
#include "mobench/harness.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mobench;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::vector<std::string> random_tokens(std::mt19937_64& rng) {
    static const std::vector<std::string> vocab = {"the", "cat", "sat", "on", "a", "mat", "dog", "ran"};
    std::vector<std::string> out(rng() % 9);
    for (auto& t : out) t = vocab[rng() % vocab.size()];
    return out;
}

std::string random_string(std::mt19937_64& rng) {
    std::string s(rng() % 21, 'a');
    for (auto& c : s) c = static_cast<char>('a' + rng() % 6);
    return s;
}

Outcome metric_oracle() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240601);
    for (int i = 0; i < 500 && o.ok; ++i) {
        auto p = random_tokens(rng), g = random_tokens(rng);
        auto ps = detail::join(p, " "), gs = detail::join(g, " ");
        double f1 = oracle::f1_from_overlap(oracle::multiset_overlap(p, g), p.size(), g.size());
        double l = oracle::f1_from_overlap(oracle::lcs_length(p, g), p.size(), g.size());
        o.require(token_f1(ps, gs) == f1, "token_f1 differs on '" + ps + "' vs '" + gs + "'");
        o.require(rouge1(ps, gs) == f1, "rouge1 differs on '" + ps + "' vs '" + gs + "'");
        o.require(rougeL(ps, gs) == l, "rougeL differs on '" + ps + "' vs '" + gs + "'");
    }
    double secs = seconds_since(t0);
    o.require(secs < 5.0, "took " + fmt("%.2f", secs) + " s");
    if (o.ok) o.detail = "500 pairs exact, " + fmt("%.3f", secs) + " s";
    return o;
}

Outcome levenshtein_check() {
    Outcome o;
    std::mt19937_64 rng(7);
    for (int i = 0; i < 500 && o.ok; ++i) {
        auto a = random_string(rng), b = random_string(rng);
        o.require(levenshtein_distance(a, b) == oracle::levenshtein(a, b), "distance differs on '" + a + "','" + b + "'");
    }
    o.require(levenshtein_distance("kitten", "sitting") == 3, "kitten/sitting distance != 3");
    o.require(std::abs(levenshtein_score("kitten", "sitting") - (1.0 - 3.0 / 7.0)) <= 1e-12, "kitten/sitting score");
    if (o.ok) o.detail = "500 pairs match DP oracle; kitten/sitting = 3";
    return o;
}

Outcome sql_check() {
    Outcome o;
    std::vector<std::string> queries;
    for (const auto& line : detail::split(detail::read_file(testing_support::data_dir() / "sql_corpus.txt"), '\n'))
        if (!detail::trim(line).empty()) queries.push_back(std::string(detail::trim(line)));
    o.require(queries.size() == 50, "corpus has " + std::to_string(queries.size()) + " queries");
    for (const auto& q : queries) o.require(sql_parser_score(q, q) == 1.0, "self score != 1 for: " + q);
    o.require(sql_parser_score("SELECT name FROM users", "SELECT name FROM users WHERE age > 5") == 0.8,
              "worked example != 0.8");
    for (const auto& a : queries)
        for (const auto& b : queries)
            o.require(sql_parser_score(a, b) == sql_parser_score(b, a), "asymmetric on: " + a + " | " + b);
    if (o.ok) o.detail = "50 self-scores 1.0, worked example 0.8, 2500 pairs symmetric";
    return o;
}

Outcome vqa_check() {
    Outcome o;
    for (int m = 0; m <= 10; ++m) {
        std::vector<std::string> golds(10, "no");
        for (int i = 0; i < m; ++i) golds[static_cast<std::size_t>(i)] = "yes";
        o.require(vqa_multi_score("yes", golds) == std::min(m / 3.0, 1.0), "m = " + std::to_string(m));
    }
    if (o.ok) o.detail = "m = 0..10 exact";
    return o;
}

GenerationTrace make_trace(double submit, std::vector<double> tokens, double done, std::size_t n_in) {
    GenerationTrace t;
    t.request_id = "t";
    t.t_submit = submit;
    t.t_first_token = tokens.front();
    t.t_last_token = tokens.back();
    t.t_done = done;
    t.n_input_tokens = n_in;
    t.n_output_tokens = tokens.size();
    return t;
}

Outcome efficiency_check() {
    Outcome o;
    auto near = [](double a, double b) { return std::abs(a - b) <= 1e-9; };
    auto m = compute_efficiency(make_trace(0.0, {0.5, 0.6, 0.7, 0.8, 0.9}, 1.0, 100));
    o.require(near(m.ttft, 0.5), "ttft " + fmt("%.12g", m.ttft));
    o.require(near(m.itps, 200.0), "itps " + fmt("%.12g", m.itps));
    o.require(m.oet && near(*m.oet, 0.4), "oet");
    o.require(m.otps && near(*m.otps, 10.0), "otps");
    o.require(near(m.total_time, 1.0), "total");
    auto s = compute_efficiency(make_trace(0.0, {0.3}, 0.3, 10));
    o.require(s.ttft == s.total_time, "single token: ttft != total");
    o.require(!s.oet && !s.otps, "single token: oet/otps present");
    if (o.ok) o.detail = "TTFT 0.5, ITPS 200, OET 0.4, OTPS 10, Total 1.0; single-token case";
    return o;
}

Outcome scaling_check() {
    Outcome o;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> gap(0.001, 0.5);
    auto rel = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); };
    for (int i = 0; i < 100 && o.ok; ++i) {
        double t = gap(rng);
        std::vector<double> toks;
        std::size_t n = 1 + rng() % 12;
        for (std::size_t k = 0; k < n; ++k) toks.push_back(t += gap(rng));
        double done = t + gap(rng);
        std::size_t n_in = 1 + rng() % 500;
        auto base = compute_efficiency(make_trace(0.0, toks, done, n_in));
        for (double k : {0.5, 2.0, 10.0}) {
            std::vector<double> scaled;
            for (double x : toks) scaled.push_back(x * k);
            auto m = compute_efficiency(make_trace(0.0, scaled, done * k, n_in));
            o.require(rel(m.ttft, base.ttft * k), "ttft");
            o.require(rel(m.total_time, base.total_time * k), "total");
            o.require(rel(m.itps, base.itps / k), "itps");
            o.require(m.oet.has_value() == base.oet.has_value(), "oet presence");
            if (m.oet) {
                o.require(rel(*m.oet, *base.oet * k), "oet");
                o.require(rel(*m.otps, *base.otps / k), "otps");
            }
        }
    }
    if (o.ok) o.detail = "100 random traces, k in {0.5, 2, 10}";
    return o;
}

std::map<std::string, std::string> snapshot(const std::filesystem::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
        if (e.is_regular_file()) out[std::filesystem::relative(e.path(), dir).string()] = detail::read_file(e.path());
    return out;
}

Outcome e2e_check() {
    Outcome o;
    testing_support::TempDir dir("acceptance-e2e");
    ConfigOverrides ov;
    ov.out = dir.path().string();
    auto t0 = std::chrono::steady_clock::now();
    std::map<std::string, std::string> first;
    double em = -1, f1 = -1;
    for (int i = 0; i < 3; ++i) {
        std::ostringstream log;
        auto cfg = load_run_config(testing_support::data_dir() / "qa_replay.config.json", ov);
        int rc = cmd_run(cfg, log);
        o.require(rc == kExitOk, "run exit " + std::to_string(rc) + ": " + log.str());
        if (!o.ok) return o;
        auto snap = snapshot(dir.path());
        if (i == 0) {
            first = snap;
            auto report = run_report_from_json(
                nlohmann::json::parse(snap.at("Replay-QA-1B/16bit/databricks-dolly/report.json")));
            em = report.metrics.at("em").mean;
            f1 = report.metrics.at("f1").mean;
        } else {
            o.require(snap == first, "artifacts differ on run " + std::to_string(i + 1));
        }
        std::filesystem::remove_all(dir.path());
    }
    double secs = seconds_since(t0);
    o.require(std::abs(em - 0.4) <= 1e-12, "EM " + fmt("%.17g", em) + " != 0.4");
    o.require(std::abs(f1 - 0.76) <= 1e-12, "F1 " + fmt("%.17g", f1) + " != 0.76");
    o.require(secs < 10.0, "took " + fmt("%.2f", secs) + " s");
    if (o.ok) o.detail = "EM 0.4, F1 0.76, 3 byte-identical runs, " + fmt("%.2f", secs) + " s";
    return o;
}

Outcome telemetry_check() {
    Outcome o;
    StubOptions so;
    so.realtime = true;
    so.response = "abcdefghij";
    so.prefill_seconds = 0.2;
    so.per_token_seconds = 0.1;
    StubRunner stub(so);
    auto rec = start_sampling(getpid(), 0.2);
    GenerationRequest req;
    req.id = "tele";
    req.prompt = "p";
    auto trace = generate(stub, req);
    auto ut = rec->stop();
    o.require(trace.t_done - trace.t_submit >= 1.0, "run shorter than 1 s");
    o.require(ut.samples.size() >= 4, std::to_string(ut.samples.size()) + " samples");
    for (std::size_t i = 1; i < ut.samples.size(); ++i)
        o.require(ut.samples[i].ts > ut.samples[i - 1].ts, "timestamps not strictly increasing");

    UtilizationTrace synthetic;
    auto add = [&](double ts, double cpu, double ram, double battery) {
        UtilizationSample s;
        s.ts = ts;
        s.cpu_pct = s.cpu_pct_raw = cpu;
        s.ram_gib = ram;
        s.battery_pct = battery;
        synthetic.samples.push_back(s);
    };
    add(0.2, 50, 1.0, 80);
    add(0.4, 70, 1.5, 76);
    add(0.6, 90, 1.25, 71);
    auto s = summarize(synthetic);
    o.require(s.cpu_mean_pct == 70.0, "cpu mean " + fmt("%.17g", s.cpu_mean_pct));
    o.require(s.ram_peak_gib == 1.5 && s.ram_mean_gib == 1.25, "ram mean/peak");
    o.require(s.bdr_pct && *s.bdr_pct == 9.0, "bdr");
    if (o.ok) o.detail = std::to_string(ut.samples.size()) + " samples over " + fmt("%.2f", trace.t_done - trace.t_submit) +
                         " s; synthetic mean 70, peak 1.5, BDR 9.0";
    return o;
}

Outcome reporting_check() {
    Outcome o;
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 500 && o.ok; ++trial) {
        std::vector<std::optional<double>> col;
        std::vector<double> sorted;
        for (std::size_t i = 0, n = 1 + rng() % 8; i < n; ++i) {
            double v = static_cast<double>(rng() % 5) / 1000.0;
            col.push_back(v);
            sorted.push_back(v);
        }
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        auto marks = rank_marks(col);
        for (std::size_t i = 0; i < col.size(); ++i) {
            auto rank = 1 + (std::find(sorted.begin(), sorted.end(), *col[i]) - sorted.begin());
            Mark want = rank == 1 ? Mark::best : rank == 2 ? Mark::second : Mark::none;
            o.require(marks[i] == want, "rank rule violated in trial " + std::to_string(trial));
        }
    }
    auto d = quant_delta(fixtures::dolly_reports("16bit"), fixtures::dolly_reports("8bit"));
    auto it = std::find_if(d.rows.begin(), d.rows.end(),
                           [](const DeltaRow& r) { return r.model == "Llama 2 7B" && r.metric == "f1"; });
    o.require(it != d.rows.end() && detail::format_double("%+.3f", it->delta) == "+0.001", "Llama 2 7B F1 delta");
    auto rows = accuracy_vs_disk(fixtures::vqa_4bit_reports(), Quantization::bit4, {{"vqa-average", "avg"}});
    auto llava = std::find_if(rows.begin(), rows.end(), [](const auto& r) { return r.model == "Llava-v1.5-7B"; });
    o.require(llava != rows.end() && llava->disk_usage_gb == 4.14 && llava->mean_score == 0.583, "Llava 4bit point");

    auto golden = [&](const std::string& name, const std::string& text) {
        auto path = testing_support::golden_dir() / name;
        o.require(std::filesystem::exists(path) && detail::read_file(path) == text, "golden mismatch: " + name);
    };
    for (int pass = 0; pass < 2; ++pass) {
        golden("leaderboard_dolly.md", render_leaderboard_markdown(build_leaderboard(fixtures::dolly_reports())));
        golden("reports_dolly_4bit.csv", render_reports(fixtures::dolly_reports("4bit"), ReportFormat::csv));
        golden("reports_dolly_4bit.json", render_reports(fixtures::dolly_reports("4bit"), ReportFormat::json));
        golden("quant_delta_dolly.csv", render_quant_delta(d, ReportFormat::csv));
        golden("quant_delta_dolly.md", render_quant_delta(d, ReportFormat::markdown));
        golden("quant_delta_dolly.json", render_quant_delta(d, ReportFormat::json));
        golden("acc_vs_disk_vqa_4bit.csv", render_accuracy_vs_disk(rows, ReportFormat::csv));
        golden("acc_vs_disk_vqa_4bit.md", render_accuracy_vs_disk(rows, ReportFormat::markdown));
    }
    if (o.ok)
        o.detail = "rank rule on 500 random columns; delta +0.001; (4.14, 0.583) from the average column "
                   "(five-cell mean 0.5824); 8 golden files stable";
    return o;
}

Outcome downsample_check() {
    Outcome o;
    auto numbered = [](std::size_t n) {
        std::vector<SampleRecord> v(n);
        for (std::size_t i = 0; i < n; ++i) {
            v[i].id = "s" + std::to_string(i);
            v[i].input = "q";
            v[i].references = {"a"};
        }
        return v;
    };
    auto ids = [](const std::vector<SampleRecord>& v) {
        std::vector<std::size_t> out;
        for (const auto& r : v) out.push_back(std::stoul(r.id.substr(1)));
        return out;
    };
    o.require(default_sample_cap("alpacaeval") == 805 && default_sample_cap("mt-bench") == 80 &&
                  default_sample_cap("gsm8k") == 1000,
              "catalogue caps");
    o.require(down_sample(numbered(805), 1000, 3).size() == 805, "805 records not passed through");
    o.require(down_sample(numbered(5000), 1000, 3).size() == 1000, "cap 1000 not honored");
    o.require(ids(down_sample(numbered(20), 5, 42)) == std::vector<std::size_t>{2, 6, 8, 13, 16}, "seed 42 selection");
    o.require(ids(down_sample(numbered(50), 10, 0)) == std::vector<std::size_t>{0, 4, 16, 19, 30, 32, 33, 35, 37, 38},
              "seed 0 selection");
    o.require(down_sample(numbered(5000), 1000, 3) == down_sample(numbered(5000), 1000, 3), "repeat selection differs");
    if (o.ok) o.detail = "caps 805/80/1000, frozen seeded selections reproduce";
    return o;
}

Outcome judge_check() {
    Outcome o;
    std::vector<JudgePair> four;
    std::map<std::string, ScriptedVerdict> table;
    for (int i = 0; i < 4; ++i) {
        auto id = "p" + std::to_string(i);
        four.push_back({id, "q", "model " + id, "base " + id});
        table[id].prefer = i % 2 ? "base " + id : "model " + id;
    }
    ScriptedJudge j4(table);
    auto r4 = win_rate(j4, four, {JudgePrompts{}, 11, 2});
    o.require(r4.win_rate == 50.0, "2-2 win rate " + fmt("%g", r4.win_rate));
    o.require(parse_rating("Rating: [[7]]") == 7.0, "rating parse");

    std::vector<JudgePair> ten;
    std::map<std::string, ScriptedVerdict> t10;
    for (int i = 0; i < 10; ++i) {
        auto id = "x" + std::to_string(i);
        ten.push_back({id, "q", "model " + id, "base " + id});
        if (i == 9)
            t10[id].raw = "no verdict";
        else
            t10[id].prefer = i < 6 ? "model " + id : "base " + id;
    }
    ScriptedJudge j10(t10);
    auto r10 = win_rate(j10, ten, {JudgePrompts{}, 1, 4});
    o.require(fmt("%.2f", r10.win_rate) == "66.67" && r10.exclusions == 1 && r10.valid == 9,
              "worked example: " + fmt("%.4f", r10.win_rate) + " with " + std::to_string(r10.exclusions) + " exclusions");
    if (o.ok) o.detail = "win rate 50.0; Rating [[7]] -> 7; 66.67 with 1 exclusion";
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> checks = {
        {"metric-oracle-equivalence", metric_oracle},
        {"levenshtein", levenshtein_check},
        {"sql-scorer", sql_check},
        {"vqa-formula", vqa_check},
        {"efficiency-arithmetic", efficiency_check},
        {"timestamp-scaling", scaling_check},
        {"end-to-end-determinism", e2e_check},
        {"telemetry", telemetry_check},
        {"reporting", reporting_check},
        {"down-sampling", downsample_check},
        {"judge-scripted", judge_check},
    };
    int failed = 0;
    for (const auto& [name, fn] : checks) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.ok = false;
            o.detail = std::string("exception: ") + e.what();
        }
        std::printf("%s %s: %s\n", o.ok ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
        failed += !o.ok;
    }
    std::printf("%d/%zu passed\n", static_cast<int>(checks.size()) - failed, checks.size());
    return failed ? 1 : 0;
}

#include <cstdlib>
#include <random>

#include <gtest/gtest.h>

#include "leaderboard_fixtures.hpp"
#include "mobench/report_desk.hpp"
#include "support.hpp"

using namespace mobench;

namespace {

/// Compare against tests/golden/<name>; MOBENCH_UPDATE_GOLDEN=1 rewrites it.
void expect_golden(const std::string& name, const std::string& actual) {
    auto path = testing_support::golden_dir() / name;
    if (std::getenv("MOBENCH_UPDATE_GOLDEN")) detail::write_file_atomic(path, actual);
    ASSERT_TRUE(std::filesystem::exists(path)) << path;
    EXPECT_EQ(detail::read_file(path), actual) << name;
}

std::vector<RunReport> delta_set(const std::string& quant) {
    return fixtures::dolly_reports(quant);
}

}  // namespace

TEST(RankMarks, StatedExamples) {
    EXPECT_EQ(rank_marks({0.5, 0.7, 0.6}), (std::vector<Mark>{Mark::none, Mark::best, Mark::second}));
    EXPECT_EQ(rank_marks({0.7, 0.7, 0.6}), (std::vector<Mark>{Mark::best, Mark::best, Mark::none}));
    EXPECT_EQ(rank_marks({0.7, 0.6, 0.6}), (std::vector<Mark>{Mark::best, Mark::second, Mark::second}));
    EXPECT_EQ(rank_marks({std::nullopt, 0.1}), (std::vector<Mark>{Mark::none, Mark::best}));
    EXPECT_EQ(rank_marks({0.5, 0.7, 0.6}, false), (std::vector<Mark>{Mark::best, Mark::none, Mark::second}));
    // equal at display precision counts as a tie
    EXPECT_EQ(rank_marks({0.5001, 0.4999}), (std::vector<Mark>{Mark::best, Mark::best}));
}

TEST(RankMarks, RandomColumnsFollowCompetitionRanking) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 500; ++trial) {
        std::size_t n = 1 + rng() % 8;
        std::vector<std::optional<double>> col;
        std::vector<double> present;
        for (std::size_t i = 0; i < n; ++i) {
            if (rng() % 6 == 0) {
                col.push_back(std::nullopt);
                continue;
            }
            double v = static_cast<double>(rng() % 6) / 1000.0;
            col.push_back(v);
            present.push_back(v);
        }
        std::sort(present.begin(), present.end(), std::greater<>());
        auto marks = rank_marks(col);
        for (std::size_t i = 0; i < n; ++i) {
            if (!col[i]) {
                EXPECT_EQ(marks[i], Mark::none);
                continue;
            }
            auto rank = 1 + static_cast<std::size_t>(std::find(present.begin(), present.end(), *col[i]) - present.begin());
            Mark want = rank == 1 ? Mark::best : rank == 2 ? Mark::second : Mark::none;
            EXPECT_EQ(marks[i], want) << "trial " << trial << " index " << i;
        }
    }
}

TEST(Leaderboard, MarksMatchTranscribedTable) {
    auto lb = build_leaderboard(fixtures::dolly_reports());
    ASSERT_EQ(lb.columns.size(), 2u);
    EXPECT_EQ(lb.columns[0], (MetricColumn{"databricks-dolly", "em"}));
    ASSERT_EQ(lb.sections.size(), 3u);
    for (const auto& row : fixtures::kDollyRows) {
        const auto& sec = *std::find_if(lb.sections.begin(), lb.sections.end(), [&](const auto& s) {
            return to_string(s.quantization) == row.quant;
        });
        const auto& r = *std::find_if(sec.rows.begin(), sec.rows.end(), [&](const auto& x) { return x.model.name == row.model; });
        EXPECT_EQ(r.cells[0].mark, fixtures::to_mark(row.em.mark)) << row.quant << " " << row.model << " em";
        EXPECT_EQ(r.cells[1].mark, fixtures::to_mark(row.f1.mark)) << row.quant << " " << row.model << " f1";
    }
}

TEST(Leaderboard, OrderingAndMissingCells) {
    auto reports = fixtures::dolly_reports("16bit");
    reports.pop_back();  // TinyLlama has no dolly run
    reports.push_back(fixtures::make_report("TinyLlama 1B", "1B-6B", "16bit", 2.1, "xsum", TaskKind::summarization,
                                            {{"rougeL", 0.113}, {"rouge1", 0.170}}));
    auto lb = build_leaderboard(reports);
    ASSERT_EQ(lb.columns.size(), 4u);
    EXPECT_EQ(lb.columns[2], (MetricColumn{"xsum", "rouge1"}));
    EXPECT_EQ(lb.sections[0].rows.front().model.size_category, SizeCategory::large);
    EXPECT_EQ(lb.sections[0].rows.back().model.name, "Zephyr 3B");
    auto md = render_leaderboard_markdown(lb);
    EXPECT_NE(md.find("| 16bit | TinyLlama 1B | 1B-6B | 2.1 GB | - | - | **0.170** | **0.113** |"), std::string::npos) << md;
}

TEST(QuantDelta, LlamaDollyF1) {
    auto d = quant_delta(delta_set("16bit"), delta_set("8bit"));
    auto it = std::find_if(d.rows.begin(), d.rows.end(),
                           [](const DeltaRow& r) { return r.model == "Llama 2 7B" && r.metric == "f1"; });
    ASSERT_NE(it, d.rows.end());
    EXPECT_EQ(it->from, Quantization::bit16);
    EXPECT_EQ(it->to, Quantization::bit8);
    EXPECT_NEAR(it->delta, 0.001, 1e-12);
    EXPECT_EQ(detail::format_double("%+.3f", it->delta), "+0.001");
    EXPECT_EQ(d.rows.size(), 14u);
    EXPECT_EQ(d.by_model["Llama 2 7B"].size(), 2u);
    EXPECT_EQ(d.by_task["databricks-dolly"].size(), 14u);
}

TEST(QuantDelta, Antisymmetric) {
    auto ab = quant_delta(delta_set("16bit"), delta_set("4bit"));
    auto ba = quant_delta(delta_set("4bit"), delta_set("16bit"));
    ASSERT_EQ(ab.rows.size(), ba.rows.size());
    for (std::size_t i = 0; i < ab.rows.size(); ++i) EXPECT_EQ(ab.rows[i].delta, -ba.rows[i].delta);
}

TEST(QuantDelta, MissingModelOrColumnIsNamed) {
    auto b = delta_set("8bit");
    b.pop_back();
    try {
        quant_delta(delta_set("16bit"), b);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("TinyLlama 1B"), std::string::npos);
    }
    b = delta_set("8bit");
    b[0].metrics.erase("em");
    try {
        quant_delta(delta_set("16bit"), b);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("databricks-dolly/em"), std::string::npos);
    }
}

TEST(AccuracyVsDisk, LlavaFourBit) {
    auto reports = fixtures::vqa_4bit_reports();
    auto rows = accuracy_vs_disk(reports, Quantization::bit4, {{"vqa-average", "avg"}});
    auto llava = *std::find_if(rows.begin(), rows.end(), [](const auto& r) { return r.model == "Llava-v1.5-7B"; });
    EXPECT_EQ(llava.disk_usage_gb, 4.14);
    EXPECT_EQ(llava.mean_score, 0.583);
    // The five transcribed dataset cells average to 0.5824; the transcribed
    // average column reads 0.583.
    std::vector<MetricColumn> five = {{"vqav2", "vqa"}, {"gqa", "vqa"}, {"vizwiz", "vqa"}, {"textvqa", "vqa"}, {"scienceqa", "vqa"}};
    auto recomputed = accuracy_vs_disk(reports, Quantization::bit4, five);
    auto five_mean = *std::find_if(recomputed.begin(), recomputed.end(), [](const auto& r) { return r.model == "Llava-v1.5-7B"; });
    EXPECT_NEAR(five_mean.mean_score, 0.5824, 1e-12);
    EXPECT_EQ(five_mean.columns, 5u);
}

TEST(AccuracyVsDisk, Errors) {
    auto reports = fixtures::vqa_4bit_reports();
    EXPECT_THROW(accuracy_vs_disk(reports, Quantization::bit8), Error);
    EXPECT_THROW(accuracy_vs_disk(reports, Quantization::bit4, {{"xsum", "rouge1"}}), Error);
}

TEST(Formats, UnknownFormatIsConfigError) {
    EXPECT_EQ(parse_report_format("csv"), ReportFormat::csv);
    EXPECT_EQ(parse_report_format("markdown"), ReportFormat::markdown);
    EXPECT_THROW(parse_report_format("xlsx"), ConfigError);
}

TEST(Formats, JsonRoundTripIsByteStable) {
    auto reports = fixtures::dolly_reports();
    reports[0].efficiency = aggregate_efficiency({EfficiencyMetrics{0.5, 200, 0.4, 10, 12.5, 1.0, std::nullopt}});
    reports[0].meta.exclusions["win_rate"] = 1;
    reports[0].config = {{"seed", 7}};
    auto text = reports_to_json(reports);
    EXPECT_EQ(reports_to_json(reports_from_json(text)), text);
    auto single = to_json(reports[0]);
    EXPECT_EQ(to_json(run_report_from_json(single)), single);
}

TEST(Formats, CsvQuotesFields) {
    EXPECT_EQ(detail::csv_field("plain"), "plain");
    EXPECT_EQ(detail::csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(detail::csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST(Formats, ScoresCsvRoundTrip) {
    std::vector<SampleScore> scores = {{"a", "em", 1.0}, {"b,c", "f1", 1.0 / 3.0}, {"q\"x", "rouge1", 0.0}};
    auto csv = scores_to_csv(scores);
    auto back = scores_from_csv(csv);
    ASSERT_EQ(back.size(), 3u);
    EXPECT_EQ(back[1].sample_id, "b,c");
    EXPECT_EQ(back[1].value, 1.0 / 3.0);
    EXPECT_EQ(back[2].sample_id, "q\"x");
    EXPECT_EQ(scores_to_csv(back), csv);
}

TEST(Golden, LeaderboardMarkdown) {
    expect_golden("leaderboard_dolly.md", render_leaderboard_markdown(build_leaderboard(fixtures::dolly_reports())));
}

TEST(Golden, ReportSetCsvAndJson) {
    auto reports = fixtures::dolly_reports("4bit");
    expect_golden("reports_dolly_4bit.csv", render_reports(reports, ReportFormat::csv));
    expect_golden("reports_dolly_4bit.json", render_reports(reports, ReportFormat::json));
}

TEST(Golden, QuantDelta) {
    auto d = quant_delta(delta_set("16bit"), delta_set("8bit"));
    expect_golden("quant_delta_dolly.csv", render_quant_delta(d, ReportFormat::csv));
    expect_golden("quant_delta_dolly.md", render_quant_delta(d, ReportFormat::markdown));
    expect_golden("quant_delta_dolly.json", render_quant_delta(d, ReportFormat::json));
}

TEST(Golden, AccuracyVsDisk) {
    auto rows = accuracy_vs_disk(fixtures::vqa_4bit_reports(), Quantization::bit4, {{"vqa-average", "avg"}});
    expect_golden("acc_vs_disk_vqa_4bit.csv", render_accuracy_vs_disk(rows, ReportFormat::csv));
    expect_golden("acc_vs_disk_vqa_4bit.md", render_accuracy_vs_disk(rows, ReportFormat::markdown));
}

TEST(Golden, RenderingIsStableAcrossInputOrder) {
    auto reports = fixtures::dolly_reports();
    auto shuffled = reports;
    std::mt19937 rng(1);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(render_reports(shuffled, ReportFormat::csv), render_reports(reports, ReportFormat::csv));
    EXPECT_EQ(render_leaderboard_markdown(build_leaderboard(shuffled)),
              render_leaderboard_markdown(build_leaderboard(reports)));
}

TEST(WriteReport, AtomicFile) {
    testing_support::TempDir dir("report");
    auto path = dir.path() / "sub" / "r.csv";
    write_report(fixtures::dolly_reports("8bit"), ReportFormat::csv, path);
    EXPECT_EQ(detail::read_file(path), render_reports(fixtures::dolly_reports("8bit"), ReportFormat::csv));
}

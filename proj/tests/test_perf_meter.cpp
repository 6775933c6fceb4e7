#include <gtest/gtest.h>

#include "mobench/perf_meter.hpp"

using namespace mobench;

namespace {

GenerationTrace trace(double submit, double first, double last, double done, std::size_t n_in, std::size_t n_out) {
    GenerationTrace t;
    t.request_id = "t";
    t.t_submit = submit;
    t.t_first_token = first;
    t.t_last_token = last;
    t.t_done = done;
    t.n_input_tokens = n_in;
    t.n_output_tokens = n_out;
    return t;
}

}  // namespace

TEST(Efficiency, WorkedExample) {
    auto m = compute_efficiency(trace(0.0, 0.5, 0.9, 1.0, 100, 5));
    EXPECT_DOUBLE_EQ(m.ttft, 0.5);
    EXPECT_DOUBLE_EQ(m.itps, 200.0);
    EXPECT_NEAR(*m.oet, 0.4, 1e-12);
    EXPECT_NEAR(*m.otps, 10.0, 1e-9);
    EXPECT_NEAR(*m.otps_inclusive, 12.5, 1e-9);
    EXPECT_DOUBLE_EQ(m.total_time, 1.0);
    EXPECT_FALSE(m.total_time_sample);
}

TEST(Efficiency, SingleTokenOmitsOutputRates) {
    auto m = compute_efficiency(trace(0.0, 0.3, 0.3, 0.3, 10, 1));
    EXPECT_FALSE(m.oet);
    EXPECT_FALSE(m.otps);
    EXPECT_DOUBLE_EQ(m.ttft, m.total_time);
}

TEST(Efficiency, SampleStartGivesSecondTotal) {
    auto t = trace(1.0, 1.5, 1.9, 2.0, 100, 5);
    t.t_sample_start = 0.75;
    auto m = compute_efficiency(t);
    EXPECT_DOUBLE_EQ(m.total_time, 1.0);
    EXPECT_DOUBLE_EQ(*m.total_time_sample, 1.25);
}

TEST(Efficiency, ScalingTimestamps) {
    const auto base = compute_efficiency(trace(0.0, 0.5, 0.9, 1.0, 100, 5));
    for (double k : {0.5, 2.0, 10.0}) {
        auto m = compute_efficiency(trace(0.0, 0.5 * k, 0.9 * k, 1.0 * k, 100, 5));
        EXPECT_NEAR(m.ttft, base.ttft * k, 1e-12) << k;
        EXPECT_NEAR(*m.oet, *base.oet * k, 1e-12) << k;
        EXPECT_NEAR(m.total_time, base.total_time * k, 1e-12) << k;
        EXPECT_NEAR(m.itps, base.itps / k, 1e-9) << k;
        EXPECT_NEAR(*m.otps, *base.otps / k, 1e-9) << k;
    }
}

TEST(Efficiency, DegenerateTracesAreErrors) {
    auto none = trace(0.0, 0.0, 0.0, 0.1, 10, 0);
    none.t_first_token.reset();
    none.t_last_token.reset();
    EXPECT_THROW(compute_efficiency(none), EfficiencyError);
    EXPECT_THROW(compute_efficiency(trace(0.5, 0.5, 0.9, 1.0, 10, 3)), EfficiencyError);
    EXPECT_THROW(compute_efficiency(trace(0.0, 0.5, 0.5, 1.0, 10, 3)), EfficiencyError);
}

TEST(Aggregate, MeansOverPresentFields) {
    auto a = compute_efficiency(trace(0.0, 0.5, 0.9, 1.0, 100, 5));
    auto b = compute_efficiency(trace(0.0, 0.3, 0.3, 0.4, 30, 1));
    auto s = aggregate_efficiency({a, b});
    EXPECT_EQ(s.count, 2u);
    EXPECT_EQ(s.oet_count, 1u);
    EXPECT_DOUBLE_EQ(s.mean.ttft, 0.4);
    EXPECT_DOUBLE_EQ(s.mean.itps, 150.0);
    EXPECT_NEAR(*s.mean.otps, 10.0, 1e-9);
    EXPECT_NEAR(s.mean.total_time, 0.7, 1e-12);
    EXPECT_THROW(aggregate_efficiency({}), EfficiencyError);
}

TEST(Aggregate, JsonRoundTrip) {
    auto s = aggregate_efficiency({compute_efficiency(trace(0.0, 0.5, 0.9, 1.0, 100, 5))});
    auto back = efficiency_summary_from_json(to_json(s));
    EXPECT_EQ(to_json(back), to_json(s));
    auto single = aggregate_efficiency({compute_efficiency(trace(0.0, 0.3, 0.3, 0.3, 10, 1))});
    EXPECT_TRUE(to_json(single)["oet"].is_null());
}

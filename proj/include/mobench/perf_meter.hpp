#pragma once

// Token-level efficiency metrics derived from generation traces. All
// durations are seconds, all rates tokens per second.

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mobench/common.hpp"
#include "mobench/runner_gate.hpp"

namespace mobench {

class EfficiencyError : public Error {
public:
    using Error::Error;
};

struct EfficiencyMetrics {
    double ttft = 0.0;        // first token - submit
    double itps = 0.0;        // input tokens / ttft
    std::optional<double> oet;             // last token - first token, needs >= 2 output tokens
    std::optional<double> otps;            // (n_output - 1) / oet
    std::optional<double> otps_inclusive;  // n_output / oet
    double total_time = 0.0;  // done - submit
    std::optional<double> total_time_sample;  // done - sample start, when the harness recorded it
};

inline EfficiencyMetrics compute_efficiency(const GenerationTrace& t) {
    const std::string who = "trace '" + t.request_id + "'";
    if (t.n_output_tokens == 0 || !t.t_first_token || !t.t_last_token)
        throw EfficiencyError(who + ": no output tokens");
    EfficiencyMetrics m;
    m.ttft = *t.t_first_token - t.t_submit;
    if (!(m.ttft > 0.0)) throw EfficiencyError(who + ": zero-duration time to first token");
    m.itps = static_cast<double>(t.n_input_tokens) / m.ttft;
    m.total_time = t.t_done - t.t_submit;
    if (t.t_sample_start) m.total_time_sample = t.t_done - *t.t_sample_start;
    if (t.n_output_tokens >= 2) {
        double oet = *t.t_last_token - *t.t_first_token;
        if (!(oet > 0.0)) throw EfficiencyError(who + ": zero output evaluation time over " +
                                                std::to_string(t.n_output_tokens) + " tokens");
        m.oet = oet;
        m.otps = static_cast<double>(t.n_output_tokens - 1) / oet;
        m.otps_inclusive = static_cast<double>(t.n_output_tokens) / oet;
    }
    return m;
}

/// Field-wise means. Optional fields are averaged over the subset where they
/// are present; `counts` records how many values went into each mean.
struct EfficiencySummary {
    EfficiencyMetrics mean;
    std::size_t count = 0;
    std::size_t oet_count = 0;
    std::size_t total_time_sample_count = 0;
};

inline EfficiencySummary aggregate_efficiency(const std::vector<EfficiencyMetrics>& items) {
    if (items.empty()) throw EfficiencyError("aggregate_efficiency: empty list");
    EfficiencySummary s;
    double ttft = 0, itps = 0, total = 0, oet = 0, otps = 0, otps_inc = 0, total_sample = 0;
    for (const auto& m : items) {
        ttft += m.ttft;
        itps += m.itps;
        total += m.total_time;
        if (m.oet) {
            oet += *m.oet;
            otps += *m.otps;
            otps_inc += *m.otps_inclusive;
            ++s.oet_count;
        }
        if (m.total_time_sample) {
            total_sample += *m.total_time_sample;
            ++s.total_time_sample_count;
        }
    }
    s.count = items.size();
    const double n = static_cast<double>(s.count);
    s.mean.ttft = ttft / n;
    s.mean.itps = itps / n;
    s.mean.total_time = total / n;
    if (s.oet_count) {
        const double k = static_cast<double>(s.oet_count);
        s.mean.oet = oet / k;
        s.mean.otps = otps / k;
        s.mean.otps_inclusive = otps_inc / k;
    }
    if (s.total_time_sample_count)
        s.mean.total_time_sample = total_sample / static_cast<double>(s.total_time_sample_count);
    return s;
}

inline nlohmann::json to_json(const EfficiencySummary& s) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return nlohmann::json{{"count", s.count},
                          {"ttft", s.mean.ttft},
                          {"itps", s.mean.itps},
                          {"total_time", s.mean.total_time},
                          {"oet_count", s.oet_count},
                          {"oet", opt(s.mean.oet)},
                          {"otps", opt(s.mean.otps)},
                          {"otps_inclusive", opt(s.mean.otps_inclusive)},
                          {"total_time_sample_count", s.total_time_sample_count},
                          {"total_time_sample", opt(s.mean.total_time_sample)}};
}

inline EfficiencySummary efficiency_summary_from_json(const nlohmann::json& j) {
    auto opt = [&](const char* k) -> std::optional<double> {
        if (!j.contains(k) || j[k].is_null()) return std::nullopt;
        return j[k].get<double>();
    };
    EfficiencySummary s;
    s.count = j.at("count").get<std::size_t>();
    s.mean.ttft = j.at("ttft").get<double>();
    s.mean.itps = j.at("itps").get<double>();
    s.mean.total_time = j.at("total_time").get<double>();
    s.oet_count = j.value("oet_count", std::size_t{0});
    s.mean.oet = opt("oet");
    s.mean.otps = opt("otps");
    s.mean.otps_inclusive = opt("otps_inclusive");
    s.total_time_sample_count = j.value("total_time_sample_count", std::size_t{0});
    s.mean.total_time_sample = opt("total_time_sample");
    return s;
}

}  // namespace mobench

#pragma once

// Concurrent CPU / RAM / battery sampling of a process during generation.
//
// CPU is reported as a share of total machine capacity:
//   process CPU-time delta / (wall delta * logical cores) * 100
// and additionally per-core (cpu_pct_raw, may exceed 100).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "mobench/common.hpp"
#include "mobench/runner_gate.hpp"

namespace mobench {

struct UtilizationSample {
    double ts = 0.0;  // seconds since recording start
    double cpu_pct = 0.0;
    double cpu_pct_raw = 0.0;
    double ram_gib = 0.0;
    std::optional<double> battery_pct;
};

struct UtilizationTrace {
    std::string model;
    std::string quantization;
    std::string dataset;
    double sampling_interval = 0.2;
    std::vector<UtilizationSample> samples;
    bool truncated = false;  // target process went away while recording
};

struct ProcessReading {
    double cpu_seconds = 0.0;
    double rss_bytes = 0.0;
};

/// Platform seam for resource readings.
class UtilizationSource {
public:
    virtual ~UtilizationSource() = default;
    virtual bool available() const = 0;
    /// nullopt when the process no longer exists.
    virtual std::optional<ProcessReading> read(int pid) = 0;
    virtual std::optional<double> battery_pct() = 0;
    virtual unsigned logical_cores() const = 0;
    virtual double now() const { return monotonic_seconds(); }
};

/// Linux /proc and /sys reader.
class ProcfsSource : public UtilizationSource {
public:
    bool available() const override { return std::filesystem::exists("/proc/self/stat"); }

    std::optional<ProcessReading> read(int pid) override {
        const auto dir = std::filesystem::path("/proc") / std::to_string(pid);
        std::ifstream stat(dir / "stat");
        std::ifstream statm(dir / "statm");
        if (!stat || !statm) return std::nullopt;
        std::string line;
        std::getline(stat, line);
        auto close = line.rfind(')');
        if (close == std::string::npos) return std::nullopt;
        std::istringstream rest(line.substr(close + 2));
        // Fields after the command name start at field 3 (state).
        std::string field;
        unsigned long long utime = 0, stime = 0;
        for (int i = 3; i <= 15 && rest >> field; ++i) {
            if (i == 3 && field == "Z") return std::nullopt;  // zombie: exited
            if (i == 14) utime = std::stoull(field);
            if (i == 15) stime = std::stoull(field);
        }
        unsigned long long size_pages = 0, resident_pages = 0;
        if (!(statm >> size_pages >> resident_pages)) return std::nullopt;
        static const double ticks = static_cast<double>(sysconf(_SC_CLK_TCK));
        static const double page = static_cast<double>(sysconf(_SC_PAGESIZE));
        return ProcessReading{static_cast<double>(utime + stime) / ticks, static_cast<double>(resident_pages) * page};
    }

    std::optional<double> battery_pct() override {
        std::error_code ec;
        const std::filesystem::path root = "/sys/class/power_supply";
        if (!std::filesystem::exists(root, ec)) return std::nullopt;
        for (const auto& entry : std::filesystem::directory_iterator(root, ec)) {
            std::ifstream type(entry.path() / "type");
            std::string t;
            if (!(type >> t) || t != "Battery") continue;
            std::ifstream cap(entry.path() / "capacity");
            double v = 0;
            if (cap >> v) return v;
        }
        return std::nullopt;
    }

    unsigned logical_cores() const override {
        auto n = sysconf(_SC_NPROCESSORS_ONLN);
        return n > 0 ? static_cast<unsigned>(n) : 1U;
    }
};

/// A running sampler. Samples are appended only by the sampling thread and
/// handed over by stop(); stop() is idempotent.
class Recording {
public:
    Recording(int pid, double interval, std::shared_ptr<UtilizationSource> source, UtilizationTrace meta)
        : pid_(pid), interval_(interval), source_(std::move(source)), trace_(std::move(meta)) {
        if (!(interval_ > 0.0)) throw ConfigError("telemetry interval must be > 0");
        if (!source_ || !source_->available())
            throw CapabilityError("telemetry: resource sampler backend is not available on this platform");
        auto first = source_->read(pid_);
        if (!first) throw Error("telemetry: target process " + std::to_string(pid_) + " is not alive");
        trace_.sampling_interval = interval_;
        cores_ = std::max(1U, source_->logical_cores());
        t0_ = source_->now();
        prev_wall_ = t0_;
        prev_cpu_ = first->cpu_seconds;
        thread_ = std::thread([this] { loop(); });
    }

    Recording(const Recording&) = delete;
    Recording& operator=(const Recording&) = delete;

    ~Recording() { stop(); }

    UtilizationTrace stop() {
        std::lock_guard<std::mutex> guard(stop_mutex_);
        if (!stopped_) {
            {
                std::lock_guard<std::mutex> lk(mu_);
                stopping_ = true;
            }
            cv_.notify_all();
            if (thread_.joinable()) thread_.join();
            // Closing sample so short runs still produce a point.
            if (!trace_.truncated) {
                double since = source_->now() - prev_wall_;
                if (trace_.samples.empty() || since >= interval_ / 2) take_sample();
            }
            stopped_ = true;
        }
        return trace_;
    }

private:
    void loop() {
        std::unique_lock<std::mutex> lk(mu_);
        auto next = std::chrono::steady_clock::now();
        while (!stopping_) {
            next += std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                std::chrono::duration<double>(interval_));
            if (cv_.wait_until(lk, next, [this] { return stopping_; })) break;
            lk.unlock();
            bool alive = take_sample();
            lk.lock();
            if (!alive) break;
        }
    }

    /// Returns false when the target has gone.
    bool take_sample() {
        auto r = source_->read(pid_);
        const double now = source_->now();
        if (!r) {
            trace_.truncated = true;
            return false;
        }
        const double wall = now - prev_wall_;
        if (wall <= 0.0) return true;
        UtilizationSample s;
        s.ts = now - t0_;
        if (!trace_.samples.empty() && s.ts <= trace_.samples.back().ts) return true;
        const double cpu = std::max(0.0, r->cpu_seconds - prev_cpu_);
        s.cpu_pct_raw = cpu / wall * 100.0;
        s.cpu_pct = s.cpu_pct_raw / static_cast<double>(cores_);
        s.ram_gib = r->rss_bytes / (1024.0 * 1024.0 * 1024.0);
        s.battery_pct = source_->battery_pct();
        trace_.samples.push_back(s);
        prev_wall_ = now;
        prev_cpu_ = r->cpu_seconds;
        return true;
    }

    int pid_;
    double interval_;
    std::shared_ptr<UtilizationSource> source_;
    UtilizationTrace trace_;
    unsigned cores_ = 1;
    double t0_ = 0.0;
    double prev_wall_ = 0.0;
    double prev_cpu_ = 0.0;

    std::mutex mu_;
    std::condition_variable cv_;
    bool stopping_ = false;
    std::mutex stop_mutex_;
    bool stopped_ = false;
    std::thread thread_;
};

inline std::unique_ptr<Recording> start_sampling(int pid, double interval,
                                                 std::shared_ptr<UtilizationSource> source = nullptr,
                                                 UtilizationTrace meta = {}) {
    if (!source) source = std::make_shared<ProcfsSource>();
    return std::make_unique<Recording>(pid, interval, std::move(source), std::move(meta));
}

struct UtilizationSummary {
    double cpu_mean_pct = 0.0;
    double cpu_raw_mean_pct = 0.0;
    double ram_peak_gib = 0.0;
    double ram_mean_gib = 0.0;
    std::optional<double> bdr_pct;  // absent when no battery reading exists
    bool charging = false;          // battery rose over the run; bdr clamped to 0
    std::size_t sample_count = 0;
    bool truncated = false;
};

inline UtilizationSummary summarize(const UtilizationTrace& trace) {
    if (trace.samples.empty()) throw Error("summarize: trace has no samples");
    UtilizationSummary s;
    double cpu = 0, raw = 0, ram = 0;
    std::optional<double> first_battery, last_battery;
    for (const auto& x : trace.samples) {
        cpu += std::clamp(x.cpu_pct, 0.0, 100.0);
        raw += x.cpu_pct_raw;
        ram += x.ram_gib;
        s.ram_peak_gib = std::max(s.ram_peak_gib, x.ram_gib);
        if (x.battery_pct) {
            if (!first_battery) first_battery = x.battery_pct;
            last_battery = x.battery_pct;
        }
    }
    const double n = static_cast<double>(trace.samples.size());
    s.cpu_mean_pct = cpu / n;
    s.cpu_raw_mean_pct = raw / n;
    s.ram_mean_gib = ram / n;
    if (first_battery) {
        double drain = *first_battery - *last_battery;
        if (drain < 0.0) {
            s.charging = true;
            drain = 0.0;
        }
        s.bdr_pct = drain;
    }
    s.sample_count = trace.samples.size();
    s.truncated = trace.truncated;
    return s;
}

inline nlohmann::json to_json(const UtilizationSummary& s) {
    return nlohmann::json{{"cpu_mean_pct", s.cpu_mean_pct},
                          {"cpu_raw_mean_pct", s.cpu_raw_mean_pct},
                          {"ram_peak_gib", s.ram_peak_gib},
                          {"ram_mean_gib", s.ram_mean_gib},
                          {"bdr_pct", s.bdr_pct ? nlohmann::json(*s.bdr_pct) : nlohmann::json(nullptr)},
                          {"bdr_available", s.bdr_pct.has_value()},
                          {"charging", s.charging},
                          {"sample_count", s.sample_count},
                          {"truncated", s.truncated}};
}

inline UtilizationSummary utilization_summary_from_json(const nlohmann::json& j) {
    UtilizationSummary s;
    s.cpu_mean_pct = j.at("cpu_mean_pct").get<double>();
    s.cpu_raw_mean_pct = j.value("cpu_raw_mean_pct", 0.0);
    s.ram_peak_gib = j.at("ram_peak_gib").get<double>();
    s.ram_mean_gib = j.at("ram_mean_gib").get<double>();
    if (j.contains("bdr_pct") && !j["bdr_pct"].is_null()) s.bdr_pct = j["bdr_pct"].get<double>();
    s.charging = j.value("charging", false);
    s.sample_count = j.value("sample_count", std::size_t{0});
    s.truncated = j.value("truncated", false);
    return s;
}

inline constexpr std::string_view kTraceCsvHeader = "ts,cpu_pct,ram_gib,battery_pct";

inline std::string trace_to_csv(const UtilizationTrace& trace) {
    std::string out(kTraceCsvHeader);
    out += '\n';
    for (const auto& s : trace.samples) {
        out += detail::full_precision(s.ts) + "," + detail::full_precision(s.cpu_pct) + "," +
               detail::full_precision(s.ram_gib) + "," +
               (s.battery_pct ? detail::full_precision(*s.battery_pct) : std::string()) + "\n";
    }
    return out;
}

inline UtilizationTrace trace_from_csv(std::string_view csv) {
    UtilizationTrace t;
    auto lines = detail::split(csv, '\n');
    if (lines.empty() || detail::trim(lines[0]) != kTraceCsvHeader)
        throw ParseError("trace CSV: expected header '" + std::string(kTraceCsvHeader) + "'");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto line = detail::trim(lines[i]);
        if (line.empty()) continue;
        auto cols = detail::split(line, ',');
        if (cols.size() != 4) throw ParseError("trace CSV line " + std::to_string(i + 1) + ": expected 4 columns");
        UtilizationSample s;
        try {
            s.ts = std::stod(cols[0]);
            s.cpu_pct = std::stod(cols[1]);
            s.cpu_pct_raw = s.cpu_pct;
            s.ram_gib = std::stod(cols[2]);
            if (!cols[3].empty()) s.battery_pct = std::stod(cols[3]);
        } catch (const std::exception&) {
            throw ParseError("trace CSV line " + std::to_string(i + 1) + ": non-numeric value");
        }
        if (!t.samples.empty() && s.ts <= t.samples.back().ts)
            throw ParseError("trace CSV line " + std::to_string(i + 1) + ": timestamps must be strictly increasing");
        t.samples.push_back(s);
    }
    return t;
}

}  // namespace mobench

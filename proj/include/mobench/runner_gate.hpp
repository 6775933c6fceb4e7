#pragma once

// Streaming generation through pluggable runners.
//
// Wire protocol (UTF-8, one JSON object per line):
//   harness -> engine   {"type":"probe"}
//                       {"type":"generate","id":..,"prompt":..,"image_ref":..,
//                        "max_new_tokens":..,"temperature":..,"seed":..}
//   engine  -> harness  {"type":"profile","name":..,"size_category":..,
//                        "quantization":..,"disk_usage_gb":..,"modality":..}
//                       {"request_id":..,"kind":"prompt_accepted"}
//                       {"request_id":..,"kind":"token","text":..}
//                       {"request_id":..,"kind":"done","n_input_tokens":..,"n_output_tokens":..}
//                       {"request_id":..,"kind":"error","message":..}
// Event timestamps are assigned by the harness when a line is received. Only
// in-process test doubles may supply their own (virtual) timestamps.

#include <chrono>
#include <csignal>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "mobench/common.hpp"
#include "mobench/dataset_hub.hpp"

extern char** environ;

namespace mobench {

class RunnerError : public Error {
public:
    using Error::Error;
};

/// Event stream broke the per-request ordering contract.
class ProtocolError : public RunnerError {
public:
    using RunnerError::RunnerError;
};

enum class Quantization { bit16, bit8, bit4, bit3 };
enum class SizeCategory { large, medium };
enum class Modality { text, multimodal };

inline std::string_view to_string(Quantization q) {
    switch (q) {
        case Quantization::bit16: return "16bit";
        case Quantization::bit8: return "8bit";
        case Quantization::bit4: return "4bit";
        case Quantization::bit3: return "3bit";
    }
    return "?";
}

inline Quantization parse_quantization(std::string_view s) {
    for (auto q : {Quantization::bit16, Quantization::bit8, Quantization::bit4, Quantization::bit3})
        if (to_string(q) == s) return q;
    throw ConfigError("unknown quantization tag: " + std::string(s) + " (expected 16bit, 8bit, 4bit or 3bit)");
}

inline std::string_view to_string(SizeCategory c) { return c == SizeCategory::large ? ">6B" : "1B-6B"; }

inline SizeCategory parse_size_category(std::string_view s) {
    if (s == ">6B") return SizeCategory::large;
    if (s == "1B-6B") return SizeCategory::medium;
    throw ConfigError("unknown size category: " + std::string(s) + " (expected >6B or 1B-6B)");
}

inline std::string_view to_string(Modality m) { return m == Modality::text ? "text" : "multimodal"; }

inline Modality parse_modality(std::string_view s) {
    if (s == "text") return Modality::text;
    if (s == "multimodal") return Modality::multimodal;
    throw ConfigError("unknown modality: " + std::string(s));
}

struct ModelProfile {
    std::string name;
    SizeCategory size_category = SizeCategory::medium;
    Quantization quantization = Quantization::bit16;
    double disk_usage_gb = 0.0;
    Modality modality = Modality::text;

    bool operator==(const ModelProfile&) const = default;
};

inline nlohmann::json to_json(const ModelProfile& p) {
    return nlohmann::json{{"name", p.name},
                          {"size_category", std::string(to_string(p.size_category))},
                          {"quantization", std::string(to_string(p.quantization))},
                          {"disk_usage_gb", p.disk_usage_gb},
                          {"modality", std::string(to_string(p.modality))}};
}

inline ModelProfile profile_from_json(const nlohmann::json& j) {
    try {
        ModelProfile p;
        p.name = j.at("name").get<std::string>();
        p.size_category = parse_size_category(j.value("size_category", std::string("1B-6B")));
        p.quantization = parse_quantization(j.at("quantization").get<std::string>());
        p.disk_usage_gb = j.at("disk_usage_gb").get<double>();
        p.modality = parse_modality(j.value("modality", std::string("text")));
        if (!(p.disk_usage_gb > 0.0)) throw ConfigError("model profile: disk_usage_gb must be > 0");
        if (p.name.empty()) throw ConfigError("model profile: name must be non-empty");
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model profile: ") + e.what());
    }
}

struct GenerationRequest {
    std::string id;
    std::string prompt;
    std::optional<std::string> image_ref;
    std::size_t max_new_tokens = 256;
    double temperature = 0.0;
    std::uint64_t seed = 0;
};

inline nlohmann::json to_json(const GenerationRequest& r) {
    nlohmann::json j{{"type", "generate"},        {"id", r.id},
                     {"prompt", r.prompt},        {"max_new_tokens", r.max_new_tokens},
                     {"temperature", r.temperature}, {"seed", r.seed}};
    j["image_ref"] = r.image_ref ? nlohmann::json(*r.image_ref) : nlohmann::json(nullptr);
    return j;
}

inline GenerationRequest request_from_json(const nlohmann::json& j) {
    GenerationRequest r;
    r.id = j.at("id").get<std::string>();
    r.prompt = j.at("prompt").get<std::string>();
    if (j.contains("image_ref") && j["image_ref"].is_string()) r.image_ref = j["image_ref"].get<std::string>();
    r.max_new_tokens = j.value("max_new_tokens", std::size_t{256});
    r.temperature = j.value("temperature", 0.0);
    r.seed = j.value("seed", std::uint64_t{0});
    return r;
}

enum class EventKind { prompt_accepted, token, done, error };

inline std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::prompt_accepted: return "prompt_accepted";
        case EventKind::token: return "token";
        case EventKind::done: return "done";
        case EventKind::error: return "error";
    }
    return "?";
}

struct TokenEvent {
    std::string request_id;
    EventKind kind = EventKind::token;
    std::string text;                 // token text, or the message of an error event
    std::optional<double> ts;         // seconds; set by the harness (or a virtual-time runner)
    std::size_t n_input_tokens = 0;   // done only
    std::size_t n_output_tokens = 0;  // done only
};

inline TokenEvent make_event(std::string id, EventKind kind, std::string text = {}) {
    TokenEvent e;
    e.request_id = std::move(id);
    e.kind = kind;
    e.text = std::move(text);
    return e;
}

inline nlohmann::json to_json(const TokenEvent& e) {
    nlohmann::json j{{"request_id", e.request_id}, {"kind", std::string(to_string(e.kind))}};
    if (e.kind == EventKind::token) j["text"] = e.text;
    if (e.kind == EventKind::error) j["message"] = e.text;
    if (e.kind == EventKind::done) {
        j["n_input_tokens"] = e.n_input_tokens;
        j["n_output_tokens"] = e.n_output_tokens;
    }
    return j;
}

inline TokenEvent event_from_json(const nlohmann::json& j) {
    TokenEvent e;
    try {
        e.request_id = j.at("request_id").get<std::string>();
        auto kind = j.at("kind").get<std::string>();
        if (kind == "prompt_accepted") {
            e.kind = EventKind::prompt_accepted;
        } else if (kind == "token") {
            e.kind = EventKind::token;
            e.text = j.at("text").get<std::string>();
        } else if (kind == "done") {
            e.kind = EventKind::done;
            e.n_input_tokens = j.at("n_input_tokens").get<std::size_t>();
            e.n_output_tokens = j.at("n_output_tokens").get<std::size_t>();
        } else if (kind == "error") {
            e.kind = EventKind::error;
            e.text = j.value("message", std::string("unspecified runner error"));
        } else {
            throw ProtocolError("unknown event kind '" + kind + "'");
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ProtocolError(std::string("malformed event: ") + ex.what());
    }
    return e;
}

struct GenerationTrace {
    std::string request_id;
    double t_submit = 0.0;
    std::optional<double> t_first_token;
    std::optional<double> t_last_token;
    double t_done = 0.0;
    std::optional<double> t_sample_start;  // when the harness began the sample, before hydration
    std::size_t n_input_tokens = 0;
    std::size_t n_output_tokens = 0;
    std::string output_text;

    bool operator==(const GenerationTrace&) const = default;
};

inline nlohmann::json to_json(const GenerationTrace& t) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return nlohmann::json{{"request_id", t.request_id},
                          {"t_sample_start", opt(t.t_sample_start)},
                          {"t_submit", t.t_submit},
                          {"t_first_token", opt(t.t_first_token)},
                          {"t_last_token", opt(t.t_last_token)},
                          {"t_done", t.t_done},
                          {"n_input_tokens", t.n_input_tokens},
                          {"n_output_tokens", t.n_output_tokens},
                          {"output_text", t.output_text}};
}

/// Seconds on the steady clock since the first call in this process.
inline double monotonic_seconds() {
    using clock = std::chrono::steady_clock;
    static const auto epoch = clock::now();
    return std::chrono::duration<double>(clock::now() - epoch).count();
}

/// Per-request event state machine: exactly one prompt_accepted, then tokens
/// with non-decreasing timestamps, then exactly one done (or error).
class EventAssembler {
public:
    explicit EventAssembler(std::string request_id) { trace_.request_id = std::move(request_id); }

    void feed(const TokenEvent& e) {
        if (e.request_id != trace_.request_id)
            throw ProtocolError("event for request '" + e.request_id + "' while generating '" + trace_.request_id + "'");
        if (!e.ts) throw ProtocolError("event without timestamp");
        const double ts = *e.ts;
        if (state_ == State::finished)
            throw ProtocolError("request '" + trace_.request_id + "': " + std::string(to_string(e.kind)) +
                                " after the terminal event");
        if (e.kind == EventKind::error) {
            state_ = State::finished;
            throw RunnerError("runner reported error for '" + trace_.request_id + "': " + e.text);
        }
        if (state_ == State::awaiting_accept) {
            if (e.kind != EventKind::prompt_accepted)
                throw ProtocolError("request '" + trace_.request_id + "': " + std::string(to_string(e.kind)) +
                                    " before prompt_accepted");
            trace_.t_submit = ts;
            last_ts_ = ts;
            state_ = State::streaming;
            return;
        }
        if (ts < last_ts_)
            throw ProtocolError("request '" + trace_.request_id + "': timestamps went backwards");
        last_ts_ = ts;
        switch (e.kind) {
            case EventKind::prompt_accepted:
                throw ProtocolError("request '" + trace_.request_id + "': duplicate prompt_accepted");
            case EventKind::token:
                if (!trace_.t_first_token) trace_.t_first_token = ts;
                trace_.t_last_token = ts;
                ++tokens_;
                trace_.output_text += e.text;
                return;
            case EventKind::done:
                if (e.n_output_tokens != tokens_)
                    throw ProtocolError("request '" + trace_.request_id + "': done reports " +
                                        std::to_string(e.n_output_tokens) + " output tokens but " +
                                        std::to_string(tokens_) + " were streamed");
                trace_.t_done = ts;
                trace_.n_input_tokens = e.n_input_tokens;
                trace_.n_output_tokens = tokens_;
                state_ = State::finished;
                complete_ = true;
                return;
            case EventKind::error:
                break;
        }
    }

    bool complete() const { return complete_; }

    GenerationTrace finish() const {
        if (!complete_) throw ProtocolError("request '" + trace_.request_id + "': stream ended without done");
        return trace_;
    }

private:
    enum class State { awaiting_accept, streaming, finished };
    State state_ = State::awaiting_accept;
    GenerationTrace trace_;
    std::size_t tokens_ = 0;
    double last_ts_ = 0.0;
    bool complete_ = false;
};

using EventSink = std::function<void(TokenEvent)>;

/// Inference backend. One in-flight generation at a time.
class Runner {
public:
    virtual ~Runner() = default;
    virtual ModelProfile probe() = 0;
    /// Emit the full event sequence for one request into `sink`.
    virtual void stream(const GenerationRequest& request, const EventSink& sink) = 0;
    /// True when the runner stamps events with its own deterministic clock.
    virtual bool virtual_time() const { return false; }
    /// Process to attribute resource usage to; nullopt means this process.
    virtual std::optional<int> process_id() const { return std::nullopt; }
};

inline GenerationTrace generate(Runner& runner, const GenerationRequest& request,
                                std::optional<double> t_sample_start = std::nullopt) {
    EventAssembler assembler(request.id);
    const bool use_runner_clock = runner.virtual_time();
    runner.stream(request, [&](TokenEvent e) {
        if (!use_runner_clock || !e.ts) e.ts = monotonic_seconds();
        assembler.feed(e);
    });
    auto trace = assembler.finish();
    trace.t_sample_start = t_sample_start;
    return trace;
}

/// Split text into word chunks that keep their trailing whitespace, so the
/// chunks concatenate back to the original exactly.
inline std::vector<std::string> chunk_words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (std::size_t i = 0; i < text.size(); ++i) {
        cur += text[i];
        bool at_space = detail::is_ascii_space(text[i]);
        bool next_is_word = i + 1 < text.size() && !detail::is_ascii_space(text[i + 1]);
        if (at_space && next_is_word) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

// ---------------------------------------------------------------------------
// Stub runner

struct StubOptions {
    std::string response = "ok";
    std::size_t chars_per_token = 1;
    double prefill_seconds = 0.05;
    double per_token_seconds = 0.01;
    bool realtime = false;     // sleep through the schedule and use harness timestamps
    std::size_t allocate_mib = 0;  // resident buffer touched at construction
    ModelProfile profile{"stub", SizeCategory::medium, Quantization::bit16, 0.001, Modality::text};
};

inline StubOptions stub_options_from_json(const nlohmann::json& j) {
    StubOptions o;
    o.response = j.value("response", o.response);
    o.chars_per_token = j.value("chars_per_token", o.chars_per_token);
    o.prefill_seconds = j.value("prefill_seconds", o.prefill_seconds);
    o.per_token_seconds = j.value("per_token_seconds", o.per_token_seconds);
    o.realtime = j.value("realtime", o.realtime);
    o.allocate_mib = j.value("allocate_mib", o.allocate_mib);
    if (j.contains("profile")) o.profile = profile_from_json(j["profile"]);
    if (o.chars_per_token == 0) throw ConfigError("stub.chars_per_token must be > 0");
    if (o.prefill_seconds <= 0.0 || o.per_token_seconds < 0.0)
        throw ConfigError("stub: prefill_seconds must be > 0 and per_token_seconds >= 0");
    return o;
}

/// Deterministic runner: answers every request with a fixed response, split
/// into fixed-width character tokens and paced on a virtual clock.
class StubRunner : public Runner {
public:
    explicit StubRunner(StubOptions opts = {}) : opts_(std::move(opts)) {
        if (opts_.allocate_mib) {
            ballast_.assign(opts_.allocate_mib << 20, 0);
            for (std::size_t i = 0; i < ballast_.size(); i += 4096) ballast_[i] = static_cast<char>(i);
        }
    }

    ModelProfile probe() override { return opts_.profile; }
    bool virtual_time() const override { return !opts_.realtime; }

    void stream(const GenerationRequest& request, const EventSink& sink) override {
        std::vector<std::string> tokens;
        for (std::size_t i = 0; i < opts_.response.size(); i += opts_.chars_per_token)
            tokens.push_back(opts_.response.substr(i, opts_.chars_per_token));
        if (tokens.size() > request.max_new_tokens) tokens.resize(request.max_new_tokens);

        auto emit = [&](TokenEvent e, double offset) {
            if (opts_.realtime) {
                std::this_thread::sleep_until(start_ + std::chrono::duration<double>(offset));
            } else {
                e.ts = clock_ + offset;
            }
            sink(std::move(e));
        };
        start_ = std::chrono::steady_clock::now();
        emit(make_event(request.id, EventKind::prompt_accepted), 0.0);
        double offset = opts_.prefill_seconds;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (i) offset += opts_.per_token_seconds;
            emit(make_event(request.id, EventKind::token, tokens[i]), offset);
        }
        auto done = make_event(request.id, EventKind::done);
        done.n_input_tokens = whitespace_word_count(request.prompt);
        done.n_output_tokens = tokens.size();
        emit(done, offset);
        clock_ += offset;
    }

private:
    StubOptions opts_;
    std::vector<char> ballast_;
    double clock_ = 0.0;
    std::chrono::steady_clock::time_point start_;
};

// ---------------------------------------------------------------------------
// Replay runner

struct ReplayEntry {
    std::string output;
    std::vector<std::string> tokens;
    std::size_t n_input_tokens = 0;
    std::vector<double> token_timings;  // seconds after submit, one per token; empty = default pacing
    std::optional<double> done_at;
};

/// Canned answers keyed by request id. Multi-turn follow-ups use "<id>#<turn>".
struct ReplayManifest {
    ModelProfile profile;
    std::map<std::string, ReplayEntry> entries;
};

inline ReplayManifest parse_replay_manifest(const nlohmann::json& j) {
    ReplayManifest m;
    if (!j.is_object() || !j.contains("profile") || !j.contains("responses"))
        throw ConfigError("replay manifest: expected an object with 'profile' and 'responses'");
    m.profile = profile_from_json(j["profile"]);
    for (const auto& r : j["responses"]) {
        ReplayEntry e;
        std::string id;
        try {
            id = r.at("id").get<std::string>();
            e.output = r.at("output").get<std::string>();
            e.n_input_tokens = r.value("n_input_tokens", std::size_t{0});
            if (r.contains("tokens")) e.tokens = r["tokens"].get<std::vector<std::string>>();
            if (r.contains("token_timings")) e.token_timings = r["token_timings"].get<std::vector<double>>();
            if (r.contains("done_at")) e.done_at = r["done_at"].get<double>();
        } catch (const nlohmann::json::exception& ex) {
            throw ConfigError(std::string("replay manifest: ") + ex.what());
        }
        if (e.tokens.empty()) {
            e.tokens = chunk_words(e.output);
        } else if (detail::join(e.tokens, "") != e.output) {
            throw ConfigError("replay manifest '" + id + "': tokens do not concatenate to output");
        }
        if (!e.token_timings.empty()) {
            if (e.token_timings.size() != e.tokens.size())
                throw ConfigError("replay manifest '" + id + "': token_timings has " +
                                  std::to_string(e.token_timings.size()) + " entries for " +
                                  std::to_string(e.tokens.size()) + " tokens");
            double prev = 0.0;
            for (double t : e.token_timings) {
                if (t < prev) throw ConfigError("replay manifest '" + id + "': token_timings must be non-decreasing and >= 0");
                prev = t;
            }
            if (e.done_at && *e.done_at < prev)
                throw ConfigError("replay manifest '" + id + "': done_at precedes the last token");
        }
        if (!m.entries.emplace(id, std::move(e)).second) throw ConfigError("replay manifest: duplicate id '" + id + "'");
    }
    return m;
}

inline ReplayManifest load_replay_manifest(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(detail::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("replay manifest " + path.string() + ": " + e.what());
    }
    return parse_replay_manifest(j);
}

/// Returns canned outputs with canned (or default) token timings on a virtual
/// clock that advances across requests.
class ReplayRunner : public Runner {
public:
    explicit ReplayRunner(ReplayManifest manifest) : manifest_(std::move(manifest)) {}

    static constexpr double kDefaultPrefill = 0.05;
    static constexpr double kDefaultPerToken = 0.01;

    ModelProfile probe() override { return manifest_.profile; }
    bool virtual_time() const override { return true; }

    void stream(const GenerationRequest& request, const EventSink& sink) override {
        auto it = manifest_.entries.find(request.id);
        if (it == manifest_.entries.end()) throw RunnerError("replay: no canned output for id '" + request.id + "'");
        const auto& e = it->second;
        const double base = clock_;
        auto accepted = make_event(request.id, EventKind::prompt_accepted);
        accepted.ts = base;
        sink(accepted);
        double last = 0.0;
        for (std::size_t i = 0; i < e.tokens.size(); ++i) {
            last = e.token_timings.empty() ? kDefaultPrefill + kDefaultPerToken * static_cast<double>(i)
                                           : e.token_timings[i];
            auto tok = make_event(request.id, EventKind::token, e.tokens[i]);
            tok.ts = base + last;
            sink(tok);
        }
        double done_offset = e.done_at.value_or(last);
        auto done = make_event(request.id, EventKind::done);
        done.ts = base + done_offset;
        done.n_input_tokens = e.n_input_tokens;
        done.n_output_tokens = e.tokens.size();
        sink(done);
        clock_ = base + done_offset;
    }

private:
    ReplayManifest manifest_;
    double clock_ = 0.0;
};

// ---------------------------------------------------------------------------
// External engine over stdio

/// Child process with line-oriented stdin/stdout pipes.
class ChildProcess {
public:
    explicit ChildProcess(const std::vector<std::string>& argv) {
        if (argv.empty()) throw ConfigError("external runner: empty command");
        int in_pipe[2];
        int out_pipe[2];
        if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) throw RunnerError("external runner: pipe() failed");
        posix_spawn_file_actions_t actions;
        posix_spawn_file_actions_init(&actions);
        posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
        posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
        posix_spawn_file_actions_addclose(&actions, in_pipe[1]);
        posix_spawn_file_actions_addclose(&actions, out_pipe[0]);
        std::vector<char*> args;
        for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        int rc = posix_spawnp(&pid_, args[0], &actions, nullptr, args.data(), environ);
        posix_spawn_file_actions_destroy(&actions);
        close(in_pipe[0]);
        close(out_pipe[1]);
        if (rc != 0) {
            close(in_pipe[1]);
            close(out_pipe[0]);
            throw RunnerError("external runner: cannot start '" + argv[0] + "': " + std::strerror(rc));
        }
        to_child_ = in_pipe[1];
        from_child_ = out_pipe[0];
        fcntl(to_child_, F_SETFD, FD_CLOEXEC);
        fcntl(from_child_, F_SETFD, FD_CLOEXEC);
    }

    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    ~ChildProcess() {
        if (to_child_ >= 0) close(to_child_);
        if (from_child_ >= 0) close(from_child_);
        if (pid_ > 0) {
            for (int i = 0; i < 100; ++i) {
                if (waitpid(pid_, nullptr, WNOHANG) == pid_) return;
                std::this_thread::sleep_for(std::chrono::milliseconds(10));
            }
            kill(pid_, SIGKILL);
            waitpid(pid_, nullptr, 0);
        }
    }

    int pid() const { return pid_; }

    void write_line(std::string_view line) {
        std::string buf(line);
        buf += '\n';
        std::size_t off = 0;
        while (off < buf.size()) {
            auto n = ::write(to_child_, buf.data() + off, buf.size() - off);
            if (n <= 0) throw RunnerError("external runner: engine closed its input");
            off += static_cast<std::size_t>(n);
        }
    }

    /// Next line without the newline; nullopt at end of stream.
    std::optional<std::string> read_line() {
        for (;;) {
            auto nl = buffer_.find('\n');
            if (nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                return line;
            }
            char chunk[4096];
            auto n = ::read(from_child_, chunk, sizeof(chunk));
            if (n <= 0) {
                if (buffer_.empty()) return std::nullopt;
                std::string line = std::move(buffer_);
                buffer_.clear();
                return line;
            }
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

private:
    pid_t pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

class ExternalRunner : public Runner {
public:
    explicit ExternalRunner(std::vector<std::string> argv) : child_(std::make_unique<ChildProcess>(argv)) {
        signal(SIGPIPE, SIG_IGN);
    }

    std::optional<int> process_id() const override { return child_->pid(); }

    ModelProfile probe() override {
        child_->write_line(R"({"type":"probe"})");
        auto line = child_->read_line();
        if (!line) throw RunnerError("external runner: engine exited during probe handshake");
        try {
            auto j = nlohmann::json::parse(*line);
            if (j.value("type", std::string()) != "profile")
                throw ProtocolError("external runner: expected a profile message, got: " + *line);
            return profile_from_json(j);
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("external runner: bad profile message: ") + e.what());
        } catch (const ConfigError& e) {
            throw ProtocolError(std::string("external runner: bad profile message: ") + e.what());
        }
    }

    void stream(const GenerationRequest& request, const EventSink& sink) override {
        child_->write_line(to_json(request).dump());
        for (;;) {
            auto line = child_->read_line();
            if (!line) throw RunnerError("external runner: engine closed the stream during '" + request.id + "'");
            if (detail::trim(*line).empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(*line);
            } catch (const nlohmann::json::parse_error&) {
                throw ProtocolError("external runner: unparseable event line: " + *line);
            }
            auto e = event_from_json(j);
            auto kind = e.kind;
            sink(std::move(e));
            if (kind == EventKind::done || kind == EventKind::error) return;
        }
    }

private:
    std::unique_ptr<ChildProcess> child_;
};

}  // namespace mobench

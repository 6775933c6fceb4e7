#pragma once

// HTTP judge client for OpenAI-style chat completion endpoints.

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mobench/judge_bridge.hpp"

namespace mobench {

struct RemoteJudgeConfig {
    std::string base_url = "https://api.openai.com";  // scheme://host[:port]
    std::string path = "/v1/chat/completions";
    std::string model = "gpt-4o";
    std::string api_key_env = "MOBENCH_JUDGE_API_KEY";
    int max_attempts = 3;
    double initial_backoff_seconds = 1.0;  // doubles after each failed attempt
    double timeout_seconds = 120.0;
};

inline RemoteJudgeConfig remote_judge_config_from_json(const nlohmann::json& j) {
    RemoteJudgeConfig c;
    c.base_url = j.value("base_url", c.base_url);
    c.path = j.value("path", c.path);
    c.model = j.value("model", c.model);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.max_attempts = j.value("max_attempts", c.max_attempts);
    c.initial_backoff_seconds = j.value("initial_backoff_seconds", c.initial_backoff_seconds);
    c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
    if (c.max_attempts < 1 || c.max_attempts > 3) throw ConfigError("judge.max_attempts must be between 1 and 3");
    return c;
}

class RemoteJudge : public JudgeClient {
public:
    explicit RemoteJudge(RemoteJudgeConfig cfg) : cfg_(std::move(cfg)) {
        if (const char* key = std::getenv(cfg_.api_key_env.c_str())) api_key_ = key;
    }

    std::string complete(const JudgeQuery& q) override {
        nlohmann::json body{{"model", cfg_.model},
                            {"temperature", 0},
                            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", q.prompt}}})}};
        const auto payload = body.dump();
        std::string last_error;
        double backoff = cfg_.initial_backoff_seconds;
        for (int attempt = 1; attempt <= cfg_.max_attempts; ++attempt) {
            httplib::Client cli(cfg_.base_url);
            auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
                std::chrono::duration<double>(cfg_.timeout_seconds));
            cli.set_read_timeout(timeout);
            cli.set_connection_timeout(std::chrono::seconds(10));
            httplib::Headers headers;
            if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
            auto res = cli.Post(cfg_.path, headers, payload, "application/json");
            if (res && res->status == 200) {
                try {
                    auto j = nlohmann::json::parse(res->body);
                    return j.at("choices").at(0).at("message").at("content").get<std::string>();
                } catch (const nlohmann::json::exception&) {
                    // Malformed body: unparseable verdict, not an outage.
                    return std::string();
                }
            }
            last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
            bool retryable = !res || res->status == 429 || res->status >= 500;
            if (!retryable) break;
            if (attempt < cfg_.max_attempts) {
                std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
                backoff *= 2.0;
            }
        }
        throw JudgeUnavailable("remote judge " + cfg_.base_url + cfg_.path + " failed for '" + q.key +
                               "': " + last_error);
    }

    std::string describe() const override { return "remote:" + cfg_.model; }

private:
    RemoteJudgeConfig cfg_;
    std::string api_key_;
};

}  // namespace mobench

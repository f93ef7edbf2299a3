// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "wcs/chat.hpp"
#include "wcs/log.hpp"

namespace wcs {

class AuthError : public std::runtime_error {
public:
    explicit AuthError(const std::string& what) : std::runtime_error(what) {}
};

class TransportError : public std::runtime_error {
public:
    explicit TransportError(const std::string& what) : std::runtime_error(what) {}
};

class TranscriptExhausted : public std::runtime_error {
public:
    TranscriptExhausted() : std::runtime_error("replay transcript has no remaining entries") {}
};

/// Names the first expected substring missing from the prompt.
class TranscriptMismatch : public std::runtime_error {
public:
    explicit TranscriptMismatch(const std::string& missing)
        : std::runtime_error("prompt does not contain expected substring: \"" + missing + "\""),
          missing_(missing) {}
    const std::string& missing() const { return missing_; }

private:
    std::string missing_;
};

struct CompletionRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    std::optional<double> temperature;  // absent = provider default
};

struct TranscriptEntry {
    std::vector<std::string> expect_contains;
    std::string response;
};

enum class ProviderKind { Http, Replay, Record };

struct ProviderConfig {
    ProviderKind kind = ProviderKind::Replay;
    std::string endpoint = "https://api.openai.com/v1";
    std::string model = "gpt-4";
    std::string api_key_env = "ASM_LLM_API_KEY";
    std::string transcript_path;
    std::optional<double> temperature;
    int max_attempts = 3;       // transport retries per complete() call
    int backoff_ms = 250;       // doubled after each failed attempt
};

/// Chat-completion access point. Handles are shareable; complete() may be
/// called concurrently.
class Provider {
public:
    virtual ~Provider() = default;

    std::string complete(const CompletionRequest& request) {
        calls_.fetch_add(1);
        return do_complete(request);
    }

    int call_count() const { return calls_.load(); }

protected:
    virtual std::string do_complete(const CompletionRequest& request) = 0;

private:
    std::atomic<int> calls_{0};
};

using ProviderPtr = std::shared_ptr<Provider>;

namespace detail {

inline nlohmann::json request_body(const CompletionRequest& request) {
    nlohmann::json body;
    body["model"] = request.model;
    body["messages"] = nlohmann::json::array();
    for (const auto& msg : request.messages) {
        body["messages"].push_back({{"role", to_string(msg.role)}, {"content", msg.content}});
    }
    if (request.temperature) body["temperature"] = *request.temperature;
    return body;
}

/// Splits "https://host:port/base" into the client origin and the base path.
inline std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    std::size_t scheme = endpoint.find("://");
    std::size_t host_start = (scheme == std::string::npos) ? 0 : scheme + 3;
    std::size_t path_start = endpoint.find('/', host_start);
    if (path_start == std::string::npos) return {endpoint, ""};
    std::string base = endpoint.substr(path_start);
    while (!base.empty() && base.back() == '/') base.pop_back();
    return {endpoint.substr(0, path_start), base};
}

inline std::string concat_contents(const CompletionRequest& request) {
    std::string all;
    for (const auto& msg : request.messages) {
        all += msg.content;
        all += '\n';
    }
    return all;
}

}  // namespace detail

/// Live client speaking the OpenAI-compatible chat protocol. Retries with
/// exponential backoff on transport errors and 429/5xx statuses.
class HttpProvider final : public Provider {
public:
    explicit HttpProvider(ProviderConfig config) : config_(std::move(config)) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (!key || !*key) {
            throw AuthError("api key environment variable " + config_.api_key_env + " is not set");
        }
        api_key_ = key;
    }

protected:
    std::string do_complete(const CompletionRequest& request) override {
        auto [origin, base] = detail::split_endpoint(config_.endpoint);
        const std::string path = base + "/chat/completions";
        const std::string body = detail::request_body(request).dump();
        log_debug("POST " + origin + path + " body=" + body);

        httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
        std::string last_error;
        int delay_ms = config_.backoff_ms;
        for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
            httplib::Client client(origin);
            client.set_connection_timeout(30);
            client.set_read_timeout(120);
            auto res = client.Post(path, headers, body, "application/json");
            if (res) {
                if (res->status == 401 || res->status == 403) {
                    throw AuthError("authentication rejected (status " + std::to_string(res->status) + ")");
                }
                if (res->status == 200) {
                    log_debug("response body=" + res->body);
                    return parse_content(res->body);
                }
                if (res->status != 429 && res->status < 500) {
                    throw TransportError("request failed with status " + std::to_string(res->status) + ": " +
                                         res->body);
                }
                last_error = "status " + std::to_string(res->status);
            } else {
                last_error = httplib::to_string(res.error());
            }
            if (attempt < config_.max_attempts) {
                std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
                delay_ms *= 2;
            }
        }
        throw TransportError("request failed after " + std::to_string(config_.max_attempts) +
                             " attempts: " + last_error);
    }

private:
    static std::string parse_content(const std::string& body) {
        nlohmann::json root = nlohmann::json::parse(body, nullptr, false);
        if (root.is_discarded() || !root.contains("choices") || !root["choices"].is_array() ||
            root["choices"].empty() || !root["choices"][0].contains("message") ||
            !root["choices"][0]["message"].contains("content") ||
            !root["choices"][0]["message"]["content"].is_string()) {
            throw TransportError("malformed completion response: " + body);
        }
        return root["choices"][0]["message"]["content"].get<std::string>();
    }

    ProviderConfig config_;
    std::string api_key_;
};

inline std::vector<TranscriptEntry> load_transcript(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TransportError("cannot open transcript: " + path);
    nlohmann::json root = nlohmann::json::parse(in);
    if (!root.is_array()) throw TransportError("transcript must be a JSON array: " + path);
    std::vector<TranscriptEntry> entries;
    for (const auto& ej : root) {
        TranscriptEntry entry;
        if (ej.contains("expect_contains")) {
            for (const auto& s : ej["expect_contains"]) entry.expect_contains.push_back(s.get<std::string>());
        }
        entry.response = ej.at("response").get<std::string>();
        if (entry.response.empty()) throw TransportError("transcript entry has empty response: " + path);
        entries.push_back(std::move(entry));
    }
    return entries;
}

inline void save_transcript(const std::string& path, const std::vector<TranscriptEntry>& entries) {
    nlohmann::json root = nlohmann::json::array();
    for (const auto& entry : entries) {
        root.push_back({{"expect_contains", entry.expect_contains}, {"response", entry.response}});
    }
    std::ofstream out(path);
    if (!out) throw TransportError("cannot write transcript: " + path);
    out << root.dump(2) << "\n";
}

/// Deterministic test double: entries are consumed in order and each asserts
/// its expected substrings against the concatenated prompt.
class ReplayProvider final : public Provider {
public:
    explicit ReplayProvider(std::vector<TranscriptEntry> entries) : entries_(std::move(entries)) {}

    ReplayProvider(std::initializer_list<TranscriptEntry> entries) : entries_(entries) {}

    static std::shared_ptr<ReplayProvider> from_file(const std::string& path) {
        return std::make_shared<ReplayProvider>(load_transcript(path));
    }

    std::size_t remaining() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return entries_.size() - next_;
    }

protected:
    std::string do_complete(const CompletionRequest& request) override {
        std::lock_guard<std::mutex> lock(mutex_);
        if (next_ >= entries_.size()) throw TranscriptExhausted{};
        const TranscriptEntry& entry = entries_[next_];
        const std::string all = detail::concat_contents(request);
        for (const auto& expected : entry.expect_contains) {
            if (all.find(expected) == std::string::npos) {
                throw TranscriptMismatch(expected);
            }
        }
        ++next_;
        return entry.response;
    }

private:
    std::vector<TranscriptEntry> entries_;
    std::size_t next_ = 0;
    mutable std::mutex mutex_;
};

/// Delegates to the live client and appends each exchange to the transcript
/// file, so a recorded session replays against the same request sequence.
class RecordProvider final : public Provider {
public:
    RecordProvider(ProviderConfig config, std::string transcript_path)
        : http_(std::move(config)), transcript_path_(std::move(transcript_path)) {}

protected:
    std::string do_complete(const CompletionRequest& request) override {
        const std::string response = http_.complete(request);
        std::lock_guard<std::mutex> lock(mutex_);
        TranscriptEntry entry;
        if (!request.messages.empty()) {
            entry.expect_contains.push_back(request.messages.back().content);
        }
        entry.response = response;
        recorded_.push_back(std::move(entry));
        save_transcript(transcript_path_, recorded_);
        return response;
    }

private:
    HttpProvider http_;
    std::string transcript_path_;
    std::vector<TranscriptEntry> recorded_;
    std::mutex mutex_;
};

inline ProviderPtr make_provider(const ProviderConfig& config) {
    switch (config.kind) {
        case ProviderKind::Http:
            return std::make_shared<HttpProvider>(config);
        case ProviderKind::Replay:
            return ReplayProvider::from_file(config.transcript_path);
        case ProviderKind::Record:
            return std::make_shared<RecordProvider>(config, config.transcript_path);
    }
    throw std::invalid_argument("unknown provider kind");
}

/// Parses the CLI selector syntax: "http", "http:ENDPOINT", "replay:PATH",
/// "record:PATH". Unknown prefixes are usage errors.
inline ProviderConfig parse_provider_selector(const std::string& selector) {
    ProviderConfig config;
    auto rest_after = [&](const std::string& prefix) { return selector.substr(prefix.size()); };
    if (selector == "http" || selector == "http:") {
        config.kind = ProviderKind::Http;
        return config;
    }
    if (selector.rfind("http:", 0) == 0) {
        config.kind = ProviderKind::Http;
        config.endpoint = rest_after("http:");
        return config;
    }
    if (selector.rfind("replay:", 0) == 0) {
        config.kind = ProviderKind::Replay;
        config.transcript_path = rest_after("replay:");
        if (config.transcript_path.empty()) throw std::invalid_argument("replay: requires a transcript path");
        return config;
    }
    if (selector.rfind("record:", 0) == 0) {
        config.kind = ProviderKind::Record;
        config.transcript_path = rest_after("record:");
        if (config.transcript_path.empty()) throw std::invalid_argument("record: requires a transcript path");
        return config;
    }
    throw std::invalid_argument("unknown provider selector: " + selector +
                                " (expected http[:ENDPOINT], replay:PATH, or record:PATH)");
}

}  // namespace wcs

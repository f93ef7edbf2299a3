// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "support.hpp"
#include "wcs/provider.hpp"

using wcs::CompletionRequest;
using wcs::ProviderConfig;
using wcs::ProviderKind;
using wcs::ReplayProvider;
using wcs::Role;
using wcs::TranscriptEntry;

namespace {

CompletionRequest request_with(const std::string& content) {
    CompletionRequest req;
    req.model = "gpt-4";
    req.messages = {{Role::User, content}};
    return req;
}

/// Guard that sets an environment variable for the test's duration.
struct EnvVar {
    std::string name;
    EnvVar(const std::string& n, const std::string& value) : name(n) { ::setenv(n.c_str(), value.c_str(), 1); }
    ~EnvVar() { ::unsetenv(name.c_str()); }
};

/// Local OpenAI-compatible endpoint with a scriptable status sequence.
class LocalServer {
public:
    explicit LocalServer(std::vector<int> statuses) : statuses_(std::move(statuses)) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            const int call = calls_.fetch_add(1);
            last_body_ = req.body;
            const int status = statuses_[std::min<std::size_t>(call, statuses_.size() - 1)];
            res.status = status;
            if (status == 200) {
                nlohmann::json body{
                    {"choices",
                     {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", "canned reply"}}}}}}};
                res.set_content(body.dump(), "application/json");
            } else {
                res.set_content("{\"error\":\"scripted failure\"}", "application/json");
            }
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~LocalServer() {
        server_.stop();
        thread_.join();
    }

    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
    int calls() const { return calls_.load(); }
    std::string last_body() const { return last_body_; }

private:
    httplib::Server server_;
    std::vector<int> statuses_;
    std::atomic<int> calls_{0};
    std::string last_body_;
    int port_ = 0;
    std::thread thread_;
};

ProviderConfig http_config(const LocalServer& server) {
    ProviderConfig config;
    config.kind = ProviderKind::Http;
    config.endpoint = server.endpoint();
    config.model = "gpt-4";
    config.backoff_ms = 1;  // keep retry tests fast
    return config;
}

}  // namespace

TEST_CASE("replay returns responses in order with matching prompts", "[provider]") {
    ReplayProvider provider({{{"Assemble the Skateboard Truck"}, "1. ..."}});
    const std::string out = provider.complete(request_with("Task: Assemble the Skateboard Truck now"));
    CHECK(out == "1. ...");
    CHECK(provider.call_count() == 1);
}

TEST_CASE("replay mismatch names the missing substring", "[provider]") {
    ReplayProvider provider({{{"Assemble the Skateboard Truck"}, "1. ..."}});
    try {
        provider.complete(request_with("some unrelated prompt"));
        FAIL("expected TranscriptMismatch");
    } catch (const wcs::TranscriptMismatch& e) {
        CHECK(e.missing() == "Assemble the Skateboard Truck");
    }
}

TEST_CASE("replay exhausts after its last entry", "[provider]") {
    ReplayProvider provider({{{}, "only"}});
    CHECK(provider.complete(request_with("x")) == "only");
    CHECK_THROWS_AS(provider.complete(request_with("x")), wcs::TranscriptExhausted);
}

TEST_CASE("replay is deterministic across identical sequences", "[provider]") {
    const std::vector<TranscriptEntry> entries{{{}, "a"}, {{}, "b"}, {{}, "c"}};
    ReplayProvider one(entries);
    ReplayProvider two(entries);
    for (const char* expected : {"a", "b", "c"}) {
        CHECK(one.complete(request_with("p")) == expected);
        CHECK(two.complete(request_with("p")) == expected);
    }
}

TEST_CASE("transcript file round-trips", "[provider]") {
    const auto path = std::filesystem::temp_directory_path() / "wcs_test_transcript.json";
    wcs::save_transcript(path.string(), {{{"needle"}, "respuesta"}});
    const auto loaded = wcs::load_transcript(path.string());
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].expect_contains == std::vector<std::string>{"needle"});
    CHECK(loaded[0].response == "respuesta");
    std::filesystem::remove(path);
}

TEST_CASE("http provider completes against a local endpoint", "[provider][http]") {
    EnvVar key("ASM_LLM_API_KEY", "test-key");
    LocalServer server({200});
    wcs::HttpProvider provider(http_config(server));
    CHECK(provider.complete(request_with("hello")) == "canned reply");
    CHECK(server.calls() == 1);
    // the wire body carries model and messages
    const nlohmann::json body = nlohmann::json::parse(server.last_body());
    CHECK(body["model"] == "gpt-4");
    CHECK(body["messages"][0]["content"] == "hello");
    CHECK_FALSE(body.contains("temperature"));  // default tuning parameters: field omitted
}

TEST_CASE("http provider retries on 5xx and 429 then succeeds", "[provider][http]") {
    EnvVar key("ASM_LLM_API_KEY", "test-key");
    LocalServer server({500, 429, 200});
    wcs::HttpProvider provider(http_config(server));
    CHECK(provider.complete(request_with("hello")) == "canned reply");
    CHECK(server.calls() == 3);
}

TEST_CASE("http provider gives up after its attempt budget", "[provider][http]") {
    EnvVar key("ASM_LLM_API_KEY", "test-key");
    LocalServer server({500, 500, 500, 500});
    wcs::HttpProvider provider(http_config(server));
    CHECK_THROWS_AS(provider.complete(request_with("hello")), wcs::TransportError);
    CHECK(server.calls() == 3);
}

TEST_CASE("unauthorized responses raise AuthError without retry", "[provider][http]") {
    EnvVar key("ASM_LLM_API_KEY", "bad-key");
    LocalServer server({401});
    wcs::HttpProvider provider(http_config(server));
    CHECK_THROWS_AS(provider.complete(request_with("hello")), wcs::AuthError);
    CHECK(server.calls() == 1);
}

TEST_CASE("missing api key is rejected at construction", "[provider]") {
    ::unsetenv("ASM_LLM_API_KEY");
    ProviderConfig config;
    config.kind = ProviderKind::Http;
    CHECK_THROWS_AS(wcs::HttpProvider{config}, wcs::AuthError);
}

TEST_CASE("record mode produces a transcript that replays", "[provider][http]") {
    EnvVar key("ASM_LLM_API_KEY", "test-key");
    LocalServer server({200, 200});
    const auto path = std::filesystem::temp_directory_path() / "wcs_test_recorded.json";
    std::filesystem::remove(path);

    ProviderConfig config = http_config(server);
    config.kind = ProviderKind::Record;
    config.transcript_path = path.string();
    wcs::RecordProvider recorder(config, path.string());
    CHECK(recorder.complete(request_with("first prompt")) == "canned reply");
    CHECK(recorder.complete(request_with("second prompt")) == "canned reply");

    auto replay = ReplayProvider::from_file(path.string());
    CHECK(replay->complete(request_with("first prompt")) == "canned reply");
    CHECK(replay->complete(request_with("second prompt")) == "canned reply");
    CHECK_THROWS_AS(replay->complete(request_with("third")), wcs::TranscriptExhausted);
    std::filesystem::remove(path);
}

TEST_CASE("provider selector syntax", "[provider]") {
    CHECK(wcs::parse_provider_selector("http").kind == ProviderKind::Http);
    CHECK(wcs::parse_provider_selector("http:http://localhost:8080/v1").endpoint ==
          "http://localhost:8080/v1");
    const ProviderConfig replay = wcs::parse_provider_selector("replay:tx.json");
    CHECK(replay.kind == ProviderKind::Replay);
    CHECK(replay.transcript_path == "tx.json");
    const ProviderConfig record = wcs::parse_provider_selector("record:out.json");
    CHECK(record.kind == ProviderKind::Record);
    CHECK_THROWS_AS(wcs::parse_provider_selector("grpc:foo"), std::invalid_argument);
    CHECK_THROWS_AS(wcs::parse_provider_selector("replay:"), std::invalid_argument);
}

TEST_CASE("concurrent replay calls stay serialized", "[provider]") {
    std::vector<TranscriptEntry> entries;
    for (int i = 0; i < 64; ++i) entries.push_back({{}, "r" + std::to_string(i)});
    ReplayProvider provider(entries);
    std::vector<std::thread> threads;
    std::atomic<int> distinct{0};
    std::array<std::atomic<int>, 64> seen{};
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&] {
            for (int i = 0; i < 8; ++i) {
                const std::string r = provider.complete(request_with("p"));
                const int idx = std::stoi(r.substr(1));
                if (seen[idx].fetch_add(1) == 0) distinct.fetch_add(1);
            }
        });
    }
    for (auto& t : threads) t.join();
    CHECK(distinct.load() == 64);  // every entry served exactly once
    CHECK(provider.call_count() == 64);
}

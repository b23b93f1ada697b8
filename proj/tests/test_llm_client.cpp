#include <chrono>
#include <deque>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "lector/errors.hpp"
#include "lector/llm_client.hpp"

using namespace lector;

namespace {

// Replays scripted replies; "!" throws a transport error.
class ScriptTransport : public LlmTransport {
public:
    explicit ScriptTransport(std::deque<std::string> replies, std::string fallback = "0.5")
        : replies_(std::move(replies)), fallback_(std::move(fallback)) {}
    std::string complete(const std::string&, const std::string& prompt) override {
        ++calls;
        last_prompt = prompt;
        std::string r = fallback_;
        if (!replies_.empty()) {
            r = replies_.front();
            replies_.pop_front();
        }
        if (r == "!") throw TransportError("connection refused");
        return r;
    }
    int calls = 0;
    std::string last_prompt;

private:
    std::deque<std::string> replies_;
    std::string fallback_;
};

struct Harness {
    ScriptTransport* transport = nullptr;
    std::vector<std::chrono::milliseconds> sleeps;
    std::shared_ptr<LlmClient> client;
};

Harness make_client(std::deque<std::string> replies, std::string fallback = "0.5") {
    Harness h;
    auto t = std::make_unique<ScriptTransport>(std::move(replies), std::move(fallback));
    h.transport = t.get();
    LlmConfig cfg;
    cfg.endpoint = "http://unused";
    auto* sleeps = &h.sleeps;
    h.client = std::make_shared<LlmClient>(cfg, std::move(t), [sleeps](std::chrono::milliseconds d) { sleeps->push_back(d); });
    return h;
}

Concept concept_of(const std::string& id, const std::string& term) { return Concept{id, term, "gloss", "g", 0.5}; }

}  // namespace

TEST(LlmConfig, Defaults) {
    LlmConfig cfg;
    EXPECT_EQ(cfg.timeout, std::chrono::milliseconds(30'000));
    EXPECT_EQ(cfg.retries, 3);
    EXPECT_EQ(cfg.max_concurrency, 4);
}

TEST(LlmConfig, FromEnvironment) {
    ::setenv("LECTOR_LLM_ENDPOINT", "http://127.0.0.1:9/v1", 1);
    ::setenv("LECTOR_LLM_MODEL", "tiny", 1);
    ::setenv("LECTOR_LLM_KEY", "secret", 1);
    LlmConfig cfg = LlmConfig::from_env();
    EXPECT_EQ(cfg.endpoint, "http://127.0.0.1:9/v1");
    EXPECT_EQ(cfg.model, "tiny");
    EXPECT_EQ(cfg.api_key, "secret");
    ::unsetenv("LECTOR_LLM_ENDPOINT");
    ::unsetenv("LECTOR_LLM_MODEL");
    ::unsetenv("LECTOR_LLM_KEY");
}

TEST(LlmClient, RetriesWithExponentialBackoff) {
    auto h = make_client({"!", "!", "0.6"});
    EXPECT_EQ(h.client->complete("p"), "0.6");
    EXPECT_EQ(h.transport->calls, 3);
    ASSERT_EQ(h.sleeps.size(), 2u);
    EXPECT_EQ(h.sleeps[0], std::chrono::milliseconds(500));
    EXPECT_EQ(h.sleeps[1], std::chrono::milliseconds(1000));
}

TEST(LlmClient, GivesUpAfterRetries) {
    auto h = make_client({}, "!");
    EXPECT_THROW(h.client->complete("p"), TransportError);
    EXPECT_EQ(h.transport->calls, 4);
}

TEST(LlmProvider, ValidReply) {
    auto h = make_client({"Similarity: 0.35"});
    LlmProvider provider(h.client);
    EXPECT_DOUBLE_EQ(provider.score(concept_of("a", "affect"), concept_of("b", "effect")), 0.35);
    EXPECT_NE(h.transport->last_prompt.find("affect"), std::string::npos);
    EXPECT_EQ(provider.calls(), 1u);
}

TEST(LlmProvider, OutOfRangeAfterTwoReprompts) {
    auto h = make_client({}, "1.5");
    LlmProvider provider(h.client);
    EXPECT_THROW(provider.score(concept_of("a", "x"), concept_of("b", "y")), OutOfRangeError);
    EXPECT_EQ(h.transport->calls, 3);
}

TEST(LlmProvider, RepromptRecovers) {
    auto h = make_client({"1.5", "none", "0.2"});
    LlmProvider provider(h.client);
    EXPECT_DOUBLE_EQ(provider.score(concept_of("a", "x"), concept_of("b", "y")), 0.2);
    EXPECT_EQ(h.transport->calls, 3);
}

TEST(LlmProvider, TransportFailureIsSimilarityUnavailable) {
    auto h = make_client({}, "!");
    LlmProvider provider(h.client);
    try {
        provider.score(concept_of("a", "x"), concept_of("b", "y"));
        FAIL();
    } catch (const SimilarityUnavailable& e) {
        EXPECT_EQ(e.first(), "a");
        EXPECT_EQ(e.second(), "b");
    }
}

TEST(Semaphore, BoundsConcurrency) {
    CountingSemaphore sem(2);
    std::atomic<int> active{0}, peak{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&] {
            sem.acquire();
            int now = ++active;
            int prev = peak.load();
            while (now > prev && !peak.compare_exchange_weak(prev, now)) {
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
            --active;
            sem.release();
        });
    }
    for (auto& t : threads) t.join();
    EXPECT_LE(peak.load(), 2);
}

TEST(HttpTransport, RoundTripAgainstLocalServer) {
    httplib::Server server;
    std::string seen_auth, seen_model, seen_prompt;
    server.Post("/v1/complete", [&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        json body = json::parse(req.body);
        seen_model = body.at("model");
        seen_prompt = body.at("prompt");
        res.set_content(json{{"text", "0.61"}}.dump(), "application/json");
    });
    server.Post("/v1/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    LlmConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/complete";
    cfg.model = "stub-model";
    cfg.api_key = "k123";
    cfg.timeout = std::chrono::milliseconds(5000);
    auto client = std::make_shared<LlmClient>(cfg, std::make_unique<HttpLlmTransport>(cfg));
    LlmProvider provider(client);
    EXPECT_DOUBLE_EQ(provider.score(concept_of("a", "affect"), concept_of("b", "effect")), 0.61);
    EXPECT_EQ(seen_auth, "Bearer k123");
    EXPECT_EQ(seen_model, "stub-model");
    EXPECT_NE(seen_prompt.find("effect"), std::string::npos);

    LlmConfig broken = cfg;
    broken.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/broken";
    broken.retries = 1;
    auto bad_client = std::make_shared<LlmClient>(broken, std::make_unique<HttpLlmTransport>(broken),
                                                  [](std::chrono::milliseconds) {});
    EXPECT_THROW(bad_client->complete("x"), TransportError);
    EXPECT_EQ(bad_client->requests(), 2u);

    server.stop();
    worker.join();
}

TEST(HttpTransport, RejectsRelativeEndpoint) {
    LlmConfig cfg;
    cfg.endpoint = "localhost/x";
    EXPECT_THROW(HttpLlmTransport{cfg}, ConfigError);
}

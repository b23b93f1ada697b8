#include "lector/llm_client.hpp"

#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "lector/errors.hpp"

namespace lector {

namespace {

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return (v && *v) ? std::string(v) : std::move(fallback);
}

}  // namespace

LlmConfig LlmConfig::from_env() {
    LlmConfig cfg;
    cfg.endpoint = env_or("LECTOR_LLM_ENDPOINT", "");
    cfg.model = env_or("LECTOR_LLM_MODEL", cfg.model);
    cfg.api_key = env_or("LECTOR_LLM_KEY", "");
    return cfg;
}

HttpLlmTransport::HttpLlmTransport(LlmConfig config) : config_(std::move(config)) {
    const std::string& url = config_.endpoint;
    auto scheme_end = url.find("://");
    if (url.empty() || scheme_end == std::string::npos) {
        throw ConfigError("LECTOR_LLM_ENDPOINT must be an absolute http(s) URL");
    }
    auto path_start = url.find('/', scheme_end + 3);
    base_ = path_start == std::string::npos ? url : url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::string HttpLlmTransport::complete(const std::string& model, const std::string& prompt) {
    httplib::Client client(base_);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    const std::string body = json{{"model", model}, {"prompt", prompt}}.dump();

    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300) throw TransportError("HTTP status " + std::to_string(res->status));
    try {
        return json::parse(res->body).at("text").get<std::string>();
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed reply body: ") + e.what());
    }
}

void CountingSemaphore::acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return slots_ > 0; });
    --slots_;
}

void CountingSemaphore::release() {
    {
        std::lock_guard lock(mutex_);
        ++slots_;
    }
    cv_.notify_one();
}

LlmClient::LlmClient(LlmConfig config, std::unique_ptr<LlmTransport> transport, Sleeper sleeper)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      semaphore_(std::max(1, config_.max_concurrency)) {
    if (!transport_) throw ConfigError("LlmClient requires a transport");
}

std::string LlmClient::complete(const std::string& prompt) {
    auto delay = config_.backoff_initial;
    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        if (attempt > 0) {
            sleeper_(delay);
            delay *= 2;
        }
        semaphore_.acquire();
        try {
            requests_.fetch_add(1);
            std::string text = transport_->complete(config_.model, prompt);
            semaphore_.release();
            return text;
        } catch (const TransportError& e) {
            semaphore_.release();
            last_error = e.what();
        } catch (...) {
            semaphore_.release();
            throw;
        }
    }
    throw TransportError("gave up after " + std::to_string(config_.retries + 1) + " attempts: " + last_error);
}

LlmProvider::LlmProvider(std::shared_ptr<LlmClient> client, PromptSpec spec, int reprompts)
    : client_(std::move(client)), spec_(std::move(spec)), reprompts_(reprompts) {
    if (!client_) throw ConfigError("LlmProvider requires a client");
    // Surfaces template errors at construction instead of mid-matrix.
    Concept probe{"probe", "probe", "", "", 0.5};
    construct_prompt(probe, probe, spec_);
}

double LlmProvider::score(const Concept& a, const Concept& b) {
    const std::string prompt = construct_prompt(a, b, spec_);
    count_call();
    for (int attempt = 0;; ++attempt) {
        std::string reply;
        try {
            reply = client_->complete(prompt);
        } catch (const TransportError& e) {
            throw SimilarityUnavailable(a.id, b.id, e.what());
        }
        try {
            return parse_similarity_response(reply);
        } catch (const OutOfRangeError& e) {
            if (attempt >= reprompts_) {
                throw OutOfRangeError("pair (" + a.id + ", " + b.id + "): " + e.what() + " after " +
                                          std::to_string(reprompts_) + " re-prompts",
                                      e.value());
            }
        } catch (const ParseError& e) {
            if (attempt >= reprompts_) {
                throw ParseError("pair (" + a.id + ", " + b.id + "): " + e.what() + " after " +
                                 std::to_string(reprompts_) + " re-prompts");
            }
        }
    }
}

}  // namespace lector

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <string>

#include "lector/errors.hpp"
#include "lector/semantic.hpp"

namespace lector {

struct LlmConfig {
    std::string endpoint;  // e.g. http://localhost:8080/v1/complete
    std::string model = "default";
    std::string api_key;
    std::chrono::milliseconds timeout{30'000};
    int retries = 3;
    std::chrono::milliseconds backoff_initial{500};
    int max_concurrency = 4;

    // LECTOR_LLM_ENDPOINT, LECTOR_LLM_MODEL, LECTOR_LLM_KEY.
    static LlmConfig from_env();
};

// Raised by a transport when a request could not be completed.
class TransportError : public Error {
public:
    using Error::Error;
};

// One prompt in, one reply text out.
class LlmTransport {
public:
    virtual ~LlmTransport() = default;
    virtual std::string complete(const std::string& model, const std::string& prompt) = 0;
};

// POST {"model", "prompt"} and read {"text"} from the JSON reply.
class HttpLlmTransport final : public LlmTransport {
public:
    explicit HttpLlmTransport(LlmConfig config);
    std::string complete(const std::string& model, const std::string& prompt) override;

private:
    LlmConfig config_;
    std::string base_;
    std::string path_;
};

class CountingSemaphore {
public:
    explicit CountingSemaphore(int slots) : slots_(slots) {}
    void acquire();
    void release();

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int slots_;
};

// Retries transport failures with exponential backoff and bounds the number
// of outstanding requests.
class LlmClient {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    LlmClient(LlmConfig config, std::unique_ptr<LlmTransport> transport, Sleeper sleeper = {});

    // Throws TransportError after `retries` failed re-attempts.
    std::string complete(const std::string& prompt);

    const LlmConfig& config() const noexcept { return config_; }
    std::size_t requests() const noexcept { return requests_.load(); }

private:
    LlmConfig config_;
    std::unique_ptr<LlmTransport> transport_;
    Sleeper sleeper_;
    CountingSemaphore semaphore_;
    std::atomic<std::size_t> requests_{0};
};

// Similarity via LLM inference. Replies outside [0,1] or without a number are
// re-prompted up to `reprompts` times before the error propagates.
class LlmProvider final : public SimilarityProvider {
public:
    static constexpr int kDefaultReprompts = 2;

    LlmProvider(std::shared_ptr<LlmClient> client, PromptSpec spec = PromptSpec::default_spec(),
                int reprompts = kDefaultReprompts);

    double score(const Concept& a, const Concept& b) override;
    std::string provider_id() const override { return "llm"; }
    std::string model_id() const override { return client_->config().model; }
    ProviderTag tag() const override { return ProviderTag::Llm; }

private:
    std::shared_ptr<LlmClient> client_;
    PromptSpec spec_;
    int reprompts_;
};

}  // namespace lector

#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <future>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lector/core_types.hpp"

namespace lector {

// Constant: self-similarity, answered without a provider or the cache.
enum class ProviderTag { Offline, Llm, Cache, Constant };

std::string_view to_string(ProviderTag tag);
ProviderTag parse_provider_tag(std::string_view name);

struct SimilarityScore {
    double value = 0.0;
    ProviderTag provider_tag = ProviderTag::Offline;
};

// Template with the placeholders {a} and {b}, each replaced by "term: gloss".
// The response-schema instruction is appended after the filled template.
struct PromptSpec {
    std::string template_text;
    std::string response_schema;

    static PromptSpec default_spec();
};

std::string construct_prompt(const Concept& a, const Concept& b, const PromptSpec& spec);

// First decimal number in the reply; ParseError if none, OutOfRangeError if outside [0,1].
double parse_similarity_response(std::string_view raw);

// Jaccard index of the character-trigram multisets of the lowercased terms.
double trigram_jaccard(std::string_view a, std::string_view b);

// Group prior plus a trigram refinement of the remaining headroom.
// base_similarity is the shared group's value when group ids match.
double offline_similarity(const Concept& a, const Concept& b, double group_base_similarity);

class SimilarityProvider {
public:
    virtual ~SimilarityProvider() = default;

    // Score one unordered pair; throws SimilarityUnavailable on failure.
    virtual double score(const Concept& a, const Concept& b) = 0;
    virtual std::string provider_id() const = 0;
    virtual std::string model_id() const = 0;
    virtual ProviderTag tag() const = 0;

    std::size_t calls() const noexcept { return calls_.load(); }

protected:
    void count_call() noexcept { calls_.fetch_add(1); }

private:
    std::atomic<std::size_t> calls_{0};
};

// Deterministic stand-in for an LLM. Needs the pool to resolve group priors.
class OfflineProvider final : public SimilarityProvider {
public:
    explicit OfflineProvider(const ConceptPool& pool);

    double score(const Concept& a, const Concept& b) override;
    std::string provider_id() const override { return "offline"; }
    std::string model_id() const override { return "trigram-v1"; }
    ProviderTag tag() const override { return ProviderTag::Offline; }

private:
    std::unordered_map<GroupId, double> base_similarity_;
};

// Persistent append-only store of pair scores, one JSON object per line:
// {"key", "value", "provider_tag", "model"}. An empty path keeps it in memory.
// Concurrent readers, serialized writers, and at most one provider call per
// uncached pair even under concurrency.
class SimilarityCache {
public:
    struct Stats {
        std::size_t entries = 0;
        std::size_t hits = 0;
        std::size_t misses = 0;
    };

    explicit SimilarityCache(std::filesystem::path path = {});

    static std::string make_key(const SimilarityProvider& provider, const ConceptId& a, const ConceptId& b);

    std::optional<double> lookup(const std::string& key);

    // Returns the cached value or runs compute() once for the key.
    // `computed` is set when this call ran the provider.
    template <typename Fn>
    double get_or_compute(const std::string& key, const std::string& model, ProviderTag tag, Fn&& compute,
                          bool* computed = nullptr);

    Stats stats() const;
    std::size_t size() const;
    const std::filesystem::path& path() const noexcept { return path_; }

    // Truncates the backing file and forgets every entry.
    void clear();

    // Reads the entry count of a cache file without loading providers.
    static std::size_t count_entries(const std::filesystem::path& path);

private:
    void load();
    void append(const std::string& key, double value, ProviderTag tag, const std::string& model);

    std::filesystem::path path_;
    mutable std::shared_mutex map_mutex_;
    std::unordered_map<std::string, double> values_;
    std::mutex write_mutex_;
    std::mutex inflight_mutex_;
    std::map<std::string, std::shared_future<double>> inflight_;
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> misses_{0};
};

SimilarityScore similarity(const Concept& a, const Concept& b, SimilarityProvider& provider, SimilarityCache& cache);

class InterferenceMatrix {
public:
    InterferenceMatrix() = default;
    // All-zero matrix over the given ids.
    explicit InterferenceMatrix(std::vector<ConceptId> ids);

    std::size_t size() const noexcept { return ids_.size(); }
    const std::vector<ConceptId>& concept_ids() const noexcept { return ids_; }
    double at(std::size_t i, std::size_t j) const;
    // Sets both (i,j) and (j,i); the diagonal is fixed at zero.
    void set_pair(std::size_t i, std::size_t j, double value);
    std::optional<std::size_t> index_of(const ConceptId& id) const;

    // Symmetry, zero diagonal, entries in [0,1].
    std::vector<std::string> validate() const;

    std::span<const double> row(std::size_t i) const;

    bool operator==(const InterferenceMatrix&) const = default;

private:
    std::vector<ConceptId> ids_;
    std::vector<double> entries_;
};

// Exactly n(n-1)/2 lookups; pairs are distributed across `jobs` workers.
InterferenceMatrix build_matrix(std::span<const Concept> concepts, SimilarityProvider& provider, SimilarityCache& cache,
                                unsigned jobs = 1);

// Mean of row `target` over `active` minus the target itself; 0 when empty.
double interference_pressure(const InterferenceMatrix& matrix, std::size_t target, std::span<const std::size_t> active);

struct ConfusablePair {
    ConceptId first;
    ConceptId second;
    double value = 0.0;
};

// Highest off-diagonal entries, ties broken by id order.
std::vector<ConfusablePair> top_confusable_pairs(const InterferenceMatrix& matrix, std::size_t count);

std::string matrix_to_csv(const InterferenceMatrix& matrix);

// Template implementation ---------------------------------------------------

template <typename Fn>
double SimilarityCache::get_or_compute(const std::string& key, const std::string& model, ProviderTag tag, Fn&& compute,
                                       bool* computed) {
    if (auto v = lookup(key)) return *v;

    std::promise<double> promise;
    std::shared_future<double> pending;
    bool owner = false;
    {
        std::lock_guard lock(inflight_mutex_);
        if (auto v = lookup(key)) return *v;
        auto it = inflight_.find(key);
        if (it != inflight_.end()) {
            pending = it->second;
        } else {
            pending = promise.get_future().share();
            inflight_.emplace(key, pending);
            owner = true;
        }
    }
    if (!owner) {
        hits_.fetch_add(1);
        return pending.get();
    }

    misses_.fetch_add(1);
    try {
        double value = compute();
        append(key, value, tag, model);
        promise.set_value(value);
        if (computed) *computed = true;
    } catch (...) {
        promise.set_exception(std::current_exception());
    }
    {
        std::lock_guard lock(inflight_mutex_);
        inflight_.erase(key);
    }
    return pending.get();
}

}  // namespace lector

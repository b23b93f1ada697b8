#include "lector/semantic.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include "lector/errors.hpp"

namespace lector {

namespace {

constexpr std::string_view kPlaceholderA = "{a}";
constexpr std::string_view kPlaceholderB = "{b}";

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
    std::size_t n = 0;
    for (std::size_t pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

std::string describe(const Concept& c) { return c.gloss.empty() ? c.term : c.term + ": " + c.gloss; }

std::map<std::string, int> trigram_counts(std::string_view term) {
    std::string lower(term);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
    std::map<std::string, int> counts;
    for (std::size_t i = 0; i + 3 <= lower.size(); ++i) ++counts[lower.substr(i, 3)];
    return counts;
}

}  // namespace

std::string_view to_string(ProviderTag tag) {
    switch (tag) {
        case ProviderTag::Offline: return "offline";
        case ProviderTag::Llm: return "llm";
        case ProviderTag::Cache: return "cache";
        case ProviderTag::Constant: return "constant";
    }
    return "unknown";
}

ProviderTag parse_provider_tag(std::string_view name) {
    for (ProviderTag t : {ProviderTag::Offline, ProviderTag::Llm, ProviderTag::Cache, ProviderTag::Constant}) {
        if (name == to_string(t)) return t;
    }
    throw ConfigError("unknown provider tag '" + std::string(name) + "'");
}

PromptSpec PromptSpec::default_spec() {
    return PromptSpec{
        "You are helping a student prepare for a vocabulary examination.\n"
        "Rate how likely the student is to confuse these two concepts when recalling them.\n"
        "Concept A: {a}\n"
        "Concept B: {b}\n",
        "Answer with a single decimal between 0 and 1, where 0 means no confusion risk and 1 means "
        "they are almost certain to be confused. Reply with the number only.",
    };
}

std::string construct_prompt(const Concept& a, const Concept& b, const PromptSpec& spec) {
    if (count_occurrences(spec.template_text, kPlaceholderA) != 1 ||
        count_occurrences(spec.template_text, kPlaceholderB) != 1) {
        throw ConfigError("prompt template must contain {a} and {b} exactly once each");
    }
    std::string out = spec.template_text;
    // Substitute the later placeholder first so the earlier offset stays valid.
    std::size_t pa = out.find(kPlaceholderA);
    std::size_t pb = out.find(kPlaceholderB);
    if (pa > pb) {
        out.replace(pa, kPlaceholderA.size(), describe(a));
        out.replace(pb, kPlaceholderB.size(), describe(b));
    } else {
        out.replace(pb, kPlaceholderB.size(), describe(b));
        out.replace(pa, kPlaceholderA.size(), describe(a));
    }
    if (!out.empty() && out.back() != '\n') out.push_back('\n');
    out += spec.response_schema;
    return out;
}

double parse_similarity_response(std::string_view raw) {
    static const std::regex number(R"([-+]?(?:\d+(?:\.\d*)?|\.\d+))");
    std::cmatch m;
    if (!std::regex_search(raw.data(), raw.data() + raw.size(), m, number)) {
        throw ParseError("no decimal number in reply");
    }
    std::string token = m.str();
    if (!token.empty() && token.front() == '+') token.erase(0, 1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) throw ParseError("unreadable number '" + token + "'");
    if (!(value >= 0.0 && value <= 1.0)) {
        throw OutOfRangeError("similarity " + token + " outside [0,1]", value);
    }
    return value;
}

double trigram_jaccard(std::string_view a, std::string_view b) {
    auto ca = trigram_counts(a);
    auto cb = trigram_counts(b);
    if (ca.empty() && cb.empty()) {
        std::string la(a), lb(b);
        auto lower = [](std::string& s) {
            std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
        };
        lower(la);
        lower(lb);
        return la == lb ? 1.0 : 0.0;
    }
    long inter = 0;
    long uni = 0;
    auto ia = ca.begin();
    auto ib = cb.begin();
    while (ia != ca.end() || ib != cb.end()) {
        if (ib == cb.end() || (ia != ca.end() && ia->first < ib->first)) {
            uni += ia->second;
            ++ia;
        } else if (ia == ca.end() || ib->first < ia->first) {
            uni += ib->second;
            ++ib;
        } else {
            inter += std::min(ia->second, ib->second);
            uni += std::max(ia->second, ib->second);
            ++ia;
            ++ib;
        }
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double offline_similarity(const Concept& a, const Concept& b, double group_base_similarity) {
    double group_term = (a.group_id == b.group_id) ? group_base_similarity : 0.0;
    return clamp_unit(group_term + 0.5 * trigram_jaccard(a.term, b.term) * (1.0 - group_term));
}

OfflineProvider::OfflineProvider(const ConceptPool& pool) {
    for (const SemanticGroup& g : pool.groups) base_similarity_[g.group_id] = g.base_similarity;
}

double OfflineProvider::score(const Concept& a, const Concept& b) {
    count_call();
    double base = 0.0;
    if (a.group_id == b.group_id) {
        auto it = base_similarity_.find(a.group_id);
        if (it != base_similarity_.end()) base = it->second;
    }
    return offline_similarity(a, b, base);
}

// --- SimilarityCache --------------------------------------------------------

SimilarityCache::SimilarityCache(std::filesystem::path path) : path_(std::move(path)) {
    if (!path_.empty()) load();
}

std::string SimilarityCache::make_key(const SimilarityProvider& provider, const ConceptId& a, const ConceptId& b) {
    const ConceptId& lo = std::min(a, b);
    const ConceptId& hi = std::max(a, b);
    return provider.provider_id() + "|" + provider.model_id() + "|" + lo + "|" + hi;
}

void SimilarityCache::load() {
    if (!std::filesystem::exists(path_)) return;
    if (std::filesystem::is_directory(path_)) throw ConfigError("cache path '" + path_.string() + "' is a directory");
    std::ifstream in(path_);
    if (!in) throw ConfigError("cannot read cache '" + path_.string() + "'");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            values_[j.at("key").get<std::string>()] = j.at("value").get<double>();
        } catch (const json::exception& e) {
            throw ConfigError("cache '" + path_.string() + "' line " + std::to_string(lineno) + ": " + e.what());
        }
    }
}

std::size_t SimilarityCache::count_entries(const std::filesystem::path& path) { return SimilarityCache(path).size(); }

std::optional<double> SimilarityCache::lookup(const std::string& key) {
    std::shared_lock lock(map_mutex_);
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    hits_.fetch_add(1);
    return it->second;
}

void SimilarityCache::append(const std::string& key, double value, ProviderTag tag, const std::string& model) {
    std::lock_guard write_lock(write_mutex_);
    if (!path_.empty()) {
        std::ofstream out(path_, std::ios::app);
        if (!out) throw ConfigError("cannot append to cache '" + path_.string() + "'");
        json j{{"key", key}, {"value", value}, {"provider_tag", std::string(to_string(tag))}, {"model", model}};
        out << j.dump() << '\n';
    }
    std::unique_lock lock(map_mutex_);
    values_[key] = value;
}

SimilarityCache::Stats SimilarityCache::stats() const { return Stats{size(), hits_.load(), misses_.load()}; }

std::size_t SimilarityCache::size() const {
    std::shared_lock lock(map_mutex_);
    return values_.size();
}

void SimilarityCache::clear() {
    std::lock_guard write_lock(write_mutex_);
    std::unique_lock lock(map_mutex_);
    values_.clear();
    if (!path_.empty()) {
        std::ofstream out(path_, std::ios::trunc);
        if (!out) throw ConfigError("cannot truncate cache '" + path_.string() + "'");
    }
}

SimilarityScore similarity(const Concept& a, const Concept& b, SimilarityProvider& provider, SimilarityCache& cache) {
    if (a.id == b.id) return {1.0, ProviderTag::Constant};
    const std::string key = SimilarityCache::make_key(provider, a.id, b.id);
    bool computed = false;
    const Concept& lo = a.id < b.id ? a : b;
    const Concept& hi = a.id < b.id ? b : a;
    double value = cache.get_or_compute(
        key, provider.model_id(), provider.tag(), [&] { return provider.score(lo, hi); }, &computed);
    return {value, computed ? provider.tag() : ProviderTag::Cache};
}

// --- InterferenceMatrix -----------------------------------------------------

InterferenceMatrix::InterferenceMatrix(std::vector<ConceptId> ids)
    : ids_(std::move(ids)), entries_(ids_.size() * ids_.size(), 0.0) {}

double InterferenceMatrix::at(std::size_t i, std::size_t j) const {
    if (i >= size() || j >= size()) throw std::out_of_range("interference matrix index out of bounds");
    return entries_[i * size() + j];
}

void InterferenceMatrix::set_pair(std::size_t i, std::size_t j, double value) {
    if (i >= size() || j >= size()) throw std::out_of_range("interference matrix index out of bounds");
    if (i == j) return;
    double v = clamp_unit(value);
    entries_[i * size() + j] = v;
    entries_[j * size() + i] = v;
}

std::optional<std::size_t> InterferenceMatrix::index_of(const ConceptId& id) const {
    auto it = std::find(ids_.begin(), ids_.end(), id);
    if (it == ids_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - ids_.begin());
}

std::span<const double> InterferenceMatrix::row(std::size_t i) const {
    if (i >= size()) throw std::out_of_range("interference matrix row out of bounds");
    return std::span<const double>(entries_).subspan(i * size(), size());
}

std::vector<std::string> InterferenceMatrix::validate() const {
    std::vector<std::string> out;
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
        if (entries_[i * n + i] != 0.0) out.push_back("diagonal nonzero at " + std::to_string(i));
        for (std::size_t j = 0; j < n; ++j) {
            double v = entries_[i * n + j];
            if (!(v >= 0.0 && v <= 1.0)) out.push_back("entry out of range at " + std::to_string(i) + "," + std::to_string(j));
            if (v != entries_[j * n + i]) out.push_back("asymmetric at " + std::to_string(i) + "," + std::to_string(j));
        }
    }
    return out;
}

InterferenceMatrix build_matrix(std::span<const Concept> concepts, SimilarityProvider& provider, SimilarityCache& cache,
                                unsigned jobs) {
    std::vector<ConceptId> ids;
    ids.reserve(concepts.size());
    for (const Concept& c : concepts) ids.push_back(c.id);
    InterferenceMatrix matrix(ids);
    const std::size_t n = concepts.size();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(n * (n > 0 ? n - 1 : 0) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    }
    std::vector<double> values(pairs.size(), 0.0);
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, pairs.size()))));

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            values[k] = similarity(concepts[pairs[k].first], concepts[pairs[k].second], provider, cache).value;
        }
    };
    if (jobs == 1) {
        work(0, pairs.size());
    } else {
        std::vector<std::thread> workers;
        std::vector<std::exception_ptr> errors(jobs);
        const std::size_t chunk = (pairs.size() + jobs - 1) / jobs;
        for (unsigned w = 0; w < jobs; ++w) {
            std::size_t begin = std::min(pairs.size(), w * chunk);
            std::size_t end = std::min(pairs.size(), begin + chunk);
            workers.emplace_back([&, w, begin, end] {
                try {
                    work(begin, end);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : workers) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    for (std::size_t k = 0; k < pairs.size(); ++k) matrix.set_pair(pairs[k].first, pairs[k].second, values[k]);
    return matrix;
}

double interference_pressure(const InterferenceMatrix& matrix, std::size_t target, std::span<const std::size_t> active) {
    if (target >= matrix.size()) throw std::out_of_range("interference_pressure: target out of bounds");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k : active) {
        if (k >= matrix.size()) throw std::out_of_range("interference_pressure: active index out of bounds");
        if (k == target) continue;
        sum += matrix.at(target, k);
        ++count;
    }
    return count == 0 ? 0.0 : clamp_unit(sum / static_cast<double>(count));
}

std::vector<ConfusablePair> top_confusable_pairs(const InterferenceMatrix& matrix, std::size_t count) {
    std::vector<ConfusablePair> pairs;
    const auto& ids = matrix.concept_ids();
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        for (std::size_t j = i + 1; j < matrix.size(); ++j) pairs.push_back({ids[i], ids[j], matrix.at(i, j)});
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const ConfusablePair& x, const ConfusablePair& y) {
        if (x.value != y.value) return x.value > y.value;
        if (x.first != y.first) return x.first < y.first;
        return x.second < y.second;
    });
    if (pairs.size() > count) pairs.resize(count);
    return pairs;
}

std::string matrix_to_csv(const InterferenceMatrix& matrix) {
    std::ostringstream out;
    const auto& ids = matrix.concept_ids();
    out << "concept_id";
    for (const auto& id : ids) out << ',' << id;
    out << '\n';
    char buf[64];
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        out << ids[i];
        for (std::size_t j = 0; j < matrix.size(); ++j) {
            auto res = std::to_chars(buf, buf + sizeof buf, matrix.at(i, j));
            out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace lector

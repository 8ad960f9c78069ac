#include "ssp/embedding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "json.hpp"

#include "ssp/http.hpp"

namespace ssp {

using nlohmann::json;

double cosine(const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size())
        throw ValidationError("cosine: dimension mismatch (" + std::to_string(u.size()) +
                              " vs " + std::to_string(v.size()) + ")");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) throw ValidationError("cosine: zero-norm vector");
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

void EmbeddingStore::insert(const std::string& id, std::vector<double> vec) {
    if (vec.empty()) throw ValidationError("embedding for '" + id + "' is empty");
    for (double x : vec) {
        if (!std::isfinite(x))
            throw ValidationError("embedding for '" + id + "' has a non-finite component");
    }
    if (vectors_.empty()) {
        dim_ = vec.size();
    } else if (vec.size() != dim_) {
        throw ValidationError("embedding for '" + id + "' has dimension " +
                              std::to_string(vec.size()) + ", expected " + std::to_string(dim_));
    }
    vectors_[id] = std::move(vec);
}

const std::vector<double>& EmbeddingStore::vector_of(const std::string& id) const {
    auto it = vectors_.find(id);
    if (it == vectors_.end()) throw ValidationError("no embedding for id: " + id);
    return it->second;
}

std::vector<std::string> EmbeddingStore::ids() const {
    std::vector<std::string> out;
    out.reserve(vectors_.size());
    for (const auto& [id, _] : vectors_) out.push_back(id);
    return out;
}

std::vector<std::pair<std::string, double>> EmbeddingStore::top_k_by_vector(
    const std::vector<double>& query, const std::vector<std::string>& pool_ids,
    std::size_t k) const {
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(pool_ids.size());
    for (const auto& id : pool_ids) scored.emplace_back(id, cosine(query, vector_of(id)));
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (k > scored.size())
        throw ValidationError("top_k: k=" + std::to_string(k) + " exceeds pool size " +
                              std::to_string(scored.size()));
    scored.resize(k);
    return scored;
}

std::vector<std::pair<std::string, double>> EmbeddingStore::top_k(
    const std::string& query_id, const std::vector<std::string>& pool_ids,
    std::size_t k) const {
    const auto& query = vector_of(query_id);
    std::vector<std::string> pool;
    pool.reserve(pool_ids.size());
    for (const auto& id : pool_ids) {
        if (id != query_id) pool.push_back(id);
    }
    return top_k_by_vector(query, pool, k);
}

std::string EmbeddingStore::to_jsonl() const {
    std::string out;
    for (const auto& [id, vec] : vectors_) {
        json obj;
        obj["id"] = id;
        obj["vector"] = vec;
        out += obj.dump();
        out += "\n";
    }
    return out;
}

EmbeddingStore EmbeddingStore::from_jsonl(const std::string& text) {
    EmbeddingStore store;
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(start, end - start);
        start = end + 1;
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
        }
        if (!obj.contains("id") || !obj.contains("vector"))
            throw ParseError("expected keys 'id' and 'vector'", lineno);
        store.insert(obj.at("id").get<std::string>(),
                     obj.at("vector").get<std::vector<double>>());
    }
    return store;
}

EmbeddingStore EmbeddingStore::load_file(const std::string& path) {
    return from_jsonl(read_text_file(path));
}

void EmbeddingStore::save_file(const std::string& path) const {
    write_text_file(path, to_jsonl());
}

std::string embedding_text(const TaskSpec& task, const Example& example) {
    if (task.kind == TaskKind::pair_classification)
        return example.premise + " [SEP] " + example.hypothesis;
    std::string out;
    for (std::size_t i = 0; i < example.tokens.size(); ++i) {
        if (i) out += ' ';
        out += example.tokens[i];
    }
    return out;
}

namespace {

struct Batch {
    std::size_t offset;
    std::vector<std::string> texts;
};

std::vector<std::vector<double>> fetch_batch(const EmbeddingClientConfig& config,
                                             const std::vector<std::string>& texts) {
    json body;
    body["model"] = config.model;
    body["input"] = texts;

    std::map<std::string, std::string> headers;
    if (!config.api_key.empty()) headers["Authorization"] = "Bearer " + config.api_key;

    HttpRequestPolicy policy{config.timeout_ms, config.max_retries, config.backoff_ms};
    const std::string response = post_json(config.base_url, config.path, headers,
                                           body.dump(), policy);
    json parsed;
    try {
        parsed = json::parse(response);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("embedding response is not JSON: ") + e.what());
    }
    if (!parsed.contains("data") || !parsed.at("data").is_array())
        throw ProtocolError("embedding response has no 'data' array");
    const auto& data = parsed.at("data");
    if (data.size() != texts.size())
        throw ProtocolError("embedding response has " + std::to_string(data.size()) +
                            " entries for " + std::to_string(texts.size()) + " inputs");
    std::vector<std::vector<double>> vectors;
    vectors.reserve(data.size());
    for (const auto& item : data) {
        if (!item.contains("embedding"))
            throw ProtocolError("embedding response entry lacks 'embedding'");
        vectors.push_back(item.at("embedding").get<std::vector<double>>());
    }
    return vectors;
}

}  // namespace

EmbeddingStore fetch_embeddings(const EmbeddingClientConfig& config,
                                const std::vector<EmbeddingInput>& inputs) {
    EmbeddingStore store;
    if (inputs.empty()) {
        if (!config.persist_path.empty()) store.save_file(config.persist_path);
        return store;
    }
    if (config.batch_size == 0) throw ConfigError("embedding batch_size must be positive");

    std::vector<Batch> batches;
    for (std::size_t off = 0; off < inputs.size(); off += config.batch_size) {
        Batch b;
        b.offset = off;
        for (std::size_t i = off; i < std::min(off + config.batch_size, inputs.size()); ++i)
            b.texts.push_back(inputs[i].text);
        batches.push_back(std::move(b));
    }

    std::vector<std::vector<std::vector<double>>> results(batches.size());
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::atomic<std::size_t> next{0};

    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(config.max_parallel, batches.size()));
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= batches.size()) return;
            try {
                results[i] = fetch_batch(config, batches[i].texts);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work);
        for (auto& t : threads) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    for (std::size_t b = 0; b < batches.size(); ++b) {
        for (std::size_t i = 0; i < results[b].size(); ++i)
            store.insert(inputs[batches[b].offset + i].id, std::move(results[b][i]));
    }
    if (!config.persist_path.empty()) store.save_file(config.persist_path);
    return store;
}

}  // namespace ssp

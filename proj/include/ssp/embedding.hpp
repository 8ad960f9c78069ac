#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ssp/corpus.hpp"

namespace ssp {

/// cos(u,v) = dot(u,v)/(|u||v|), clamped to [-1,1]. Throws ValidationError
/// on length mismatch or a zero-norm input.
double cosine(const std::vector<double>& u, const std::vector<double>& v);

/// Immutable map example_id -> embedding vector. All vectors share one
/// dimension and contain no NaN/Inf components.
class EmbeddingStore {
public:
    EmbeddingStore() = default;

    void insert(const std::string& id, std::vector<double> vec);
    bool contains(const std::string& id) const { return vectors_.count(id) > 0; }
    const std::vector<double>& vector_of(const std::string& id) const;
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return vectors_.size(); }
    std::vector<std::string> ids() const;

    /// The k most similar pool entries to the stored query vector, score
    /// descending, ties broken by ascending id. The query itself is never
    /// returned even if listed in the pool.
    std::vector<std::pair<std::string, double>> top_k(const std::string& query_id,
                                                      const std::vector<std::string>& pool_ids,
                                                      std::size_t k) const;

    /// Same ranking against an external query vector (cross-dataset
    /// retrieval, where the query lives in another store).
    std::vector<std::pair<std::string, double>> top_k_by_vector(
        const std::vector<double>& query, const std::vector<std::string>& pool_ids,
        std::size_t k) const;

    std::string to_jsonl() const;
    static EmbeddingStore from_jsonl(const std::string& text);
    static EmbeddingStore load_file(const std::string& path);
    void save_file(const std::string& path) const;

private:
    std::size_t dim_ = 0;
    std::map<std::string, std::vector<double>> vectors_;
};

/// The string that gets embedded for an example: space-joined tokens for
/// sequence tasks, premise + " [SEP] " + hypothesis for pair classification.
std::string embedding_text(const TaskSpec& task, const Example& example);

struct EmbeddingInput {
    std::string id;
    std::string text;
};

struct EmbeddingClientConfig {
    std::string base_url;             // e.g. http://127.0.0.1:8080
    std::string path = "/v1/embeddings";
    std::string model;
    std::string api_key;              // resolved from the environment by the caller
    std::size_t batch_size = 64;
    int max_retries = 3;
    int backoff_ms = 250;
    int timeout_ms = 30000;
    int max_parallel = 4;
    std::string persist_path;         // when set, the store is written here after the fetch
};

/// Fetches one vector per input from an OpenAI-compatible embeddings
/// endpoint (POST {model, input:[...]}). Batches are fetched with bounded
/// parallelism; an empty input list performs no network calls.
EmbeddingStore fetch_embeddings(const EmbeddingClientConfig& config,
                                const std::vector<EmbeddingInput>& inputs);

}  // namespace ssp

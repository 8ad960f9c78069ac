#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ssp/confidence.hpp"
#include "ssp/corpus.hpp"
#include "ssp/embedding.hpp"
#include "ssp/evalkit.hpp"
#include "ssp/gateway.hpp"
#include "ssp/selector.hpp"

namespace ssp {

enum class PoolProvenance { icl_stage1, imported, gold };

/// The target test set with its Stage I labelling: the exemplar source
/// for Stage II. Confidences are present exactly when the predictions
/// carried probabilities.
struct ExemplarPool {
    const Dataset* dataset = nullptr;
    const EmbeddingStore* embeddings = nullptr;
    std::map<std::string, Prediction> predictions;
    std::optional<std::map<std::string, LabelConfidence>> confidences;
    PoolProvenance provenance = PoolProvenance::imported;
};

struct RunConfig {
    TaskSpec task;
    std::size_t k = 8;
    double percentile = 80.0;
    SelectionMode selector_mode = SelectionMode::full;
    std::uint64_t seed = 0;
    std::unordered_set<std::string> threshold_exclude;
    int parallel = 1;
    bool dry_run = false;
};

struct SelectionTraceEntry {
    std::string query_id;
    SelectionMode mode = SelectionMode::full;
    std::vector<std::string> chosen_ids;  // prompt order: similarity descending
    double objective = 0.0;
    std::vector<std::string> relaxations;
};

std::string trace_to_jsonl(const std::vector<SelectionTraceEntry>& trace);

struct StageResult {
    std::vector<Prediction> predictions;        // dataset order; empty on dry runs
    std::vector<SelectionTraceEntry> trace;     // Stage II only
    std::vector<std::string> failed_ids;        // transport/unparseable fallbacks
    std::size_t repaired_positions = 0;
    std::vector<std::pair<std::string, std::string>> prompts;  // id -> prompt, dry runs only
};

/// Stage I via cross-lingual ICL: for each target point, the top-k most
/// similar labelled source exemplars (descending) are prompted and the
/// response verbalized. Failed points get all-default predictions and are
/// flagged.
StageResult run_stage1_icl(const Dataset& target, const Dataset& source,
                           const EmbeddingStore& target_store,
                           const EmbeddingStore& source_store, LlmClient& llm,
                           const RunConfig& config);

/// Builds a pool from externally produced Stage I predictions (id-keyed,
/// so file order is irrelevant). Throws ValidationError listing missing
/// and extra ids on any mismatch.
ExemplarPool import_stage1(const std::vector<Prediction>& preds, const Dataset& target,
                           const EmbeddingStore* embeddings);

/// Pool that shows gold labels in prompts (skyline mode).
ExemplarPool build_gold_pool(const Dataset& target, const EmbeddingStore* embeddings);

ExemplarPool pool_from_stage1(const Dataset& target, const std::vector<Prediction>& preds,
                              const EmbeddingStore* embeddings);

/// Per-query exemplar selection over the pool minus the query itself.
/// Returns the trace without touching the LLM.
std::vector<SelectionTraceEntry> select_exemplars(const ExemplarPool& pool,
                                                  const RunConfig& config);

/// Stage II: select exemplars per query, prompt with their Stage I labels
/// in descending-similarity order, verbalize the responses.
StageResult run_stage2_ssp(const ExemplarPool& pool, LlmClient& llm, const RunConfig& config);

/// Replaces exactly round(rate * n) positions, chosen uniformly without
/// replacement, by a uniformly random different label.
std::vector<std::string> inject_noise(const std::vector<std::string>& labels, double rate,
                                      const TaskSpec& task, std::mt19937_64& rng);

struct NoiseReport {
    double baseline_f1 = 0.0;  // source-exemplar prompting, no noise involved
    std::vector<std::pair<double, double>> rate_f1;
    std::optional<double> crossover_rate;  // first rate whose F1 drops below the baseline
};

std::string noise_report_to_json(const NoiseReport& report);

/// The noise-robustness harness: gold target pools with injected label
/// noise, similarity-only Stage II at each rate, plus one source-exemplar
/// baseline run.
NoiseReport run_noise_experiment(const Dataset& target, const Dataset& source,
                                 const EmbeddingStore& target_store,
                                 const EmbeddingStore& source_store, LlmClient& llm,
                                 const std::vector<double>& rates, const RunConfig& config);

}  // namespace ssp

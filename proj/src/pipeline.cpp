#include "ssp/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <thread>

#include "json.hpp"

#include "ssp/prompt.hpp"
#include "ssp/rand.hpp"

namespace ssp {

using nlohmann::json;

namespace {

void parallel_for(std::size_t n, int parallel, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const std::size_t workers = std::max<std::size_t>(
        1, std::min<std::size_t>(static_cast<std::size_t>(std::max(parallel, 1)), n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work);
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

std::vector<std::string> default_labels(const TaskSpec& task, const Example& ex) {
    const std::size_t n =
        task.kind == TaskKind::pair_classification ? 1 : ex.tokens.size();
    return std::vector<std::string>(n, task.default_label);
}

Prediction verbalize(const TaskSpec& task, const Example& query, const std::string& response,
                     std::size_t& repaired) {
    Prediction pred;
    pred.example_id = query.id;
    if (task.kind == TaskKind::pair_classification) {
        pred.labels = {parse_nli_response(response)};  // may throw UnparseableResponseError
    } else {
        const ParsedResponse parsed = parse_tagging_response(response, query, task);
        pred.labels = parsed.labels;
        repaired += parsed.repaired_positions.size();
    }
    return pred;
}

struct PerQueryOutcome {
    Prediction prediction;
    bool failed = false;
    std::size_t repaired = 0;
    std::string prompt;  // dry runs only
};

}  // namespace

StageResult run_stage1_icl(const Dataset& target, const Dataset& source,
                           const EmbeddingStore& target_store,
                           const EmbeddingStore& source_store, LlmClient& llm,
                           const RunConfig& config) {
    const TaskSpec& task = target.task;
    if (config.k == 0) throw ValidationError("k must be positive");
    if (source.examples.size() < config.k)
        throw ValidationError("source has " + std::to_string(source.examples.size()) +
                              " examples, need at least k=" + std::to_string(config.k));
    for (const auto& ex : source.examples) {
        if (!ex.labelled())
            throw ValidationError("source example '" + ex.id + "' has no gold labels");
    }
    std::vector<std::string> source_ids;
    for (const auto& ex : source.examples) source_ids.push_back(ex.id);
    std::sort(source_ids.begin(), source_ids.end());

    std::vector<PerQueryOutcome> outcomes(target.examples.size());
    parallel_for(target.examples.size(), config.parallel, [&](std::size_t i) {
        const Example& query = target.examples[i];
        auto& out = outcomes[i];
        const auto ranked =
            source_store.top_k_by_vector(target_store.vector_of(query.id), source_ids, config.k);
        std::vector<PromptExemplar> exemplars;
        for (const auto& [id, _] : ranked) {
            const Example* ex = source.find(id);
            exemplars.push_back({ex, *ex->gold_labels});
        }
        const std::string prompt = render_prompt(task, exemplars, query);
        if (config.dry_run) {
            out.prompt = prompt;
            return;
        }
        try {
            out.prediction = verbalize(task, query, llm.complete(prompt), out.repaired);
        } catch (const TransportError&) {
            out.prediction = {query.id, default_labels(task, query), std::nullopt};
            out.failed = true;
        } catch (const ProtocolError&) {
            out.prediction = {query.id, default_labels(task, query), std::nullopt};
            out.failed = true;
        } catch (const UnparseableResponseError&) {
            out.prediction = {query.id, default_labels(task, query), std::nullopt};
            out.failed = true;
        }
    });

    StageResult result;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        auto& out = outcomes[i];
        if (config.dry_run) {
            result.prompts.emplace_back(target.examples[i].id, std::move(out.prompt));
            continue;
        }
        if (out.failed) result.failed_ids.push_back(target.examples[i].id);
        result.repaired_positions += out.repaired;
        result.predictions.push_back(std::move(out.prediction));
    }
    return result;
}

namespace {

void validate_predictions(const Dataset& target, const std::vector<Prediction>& preds) {
    std::map<std::string, const Prediction*> by_id;
    for (const auto& p : preds) {
        if (!by_id.emplace(p.example_id, &p).second)
            throw ValidationError("duplicate prediction for id: " + p.example_id);
    }
    std::vector<std::string> missing, extra;
    for (const auto& ex : target.examples) {
        if (!by_id.count(ex.id)) missing.push_back(ex.id);
    }
    for (const auto& [id, _] : by_id) {
        if (!target.find(id)) extra.push_back(id);
    }
    if (!missing.empty() || !extra.empty()) {
        std::string msg = "prediction ids do not match the target set;";
        if (!missing.empty()) {
            msg += " missing:";
            for (const auto& id : missing) msg += " " + id;
        }
        if (!extra.empty()) {
            msg += " extra:";
            for (const auto& id : extra) msg += " " + id;
        }
        throw ValidationError(msg);
    }
    for (const auto& ex : target.examples) {
        const Prediction& p = *by_id.at(ex.id);
        const std::size_t want =
            target.task.kind == TaskKind::pair_classification ? 1 : ex.tokens.size();
        if (p.labels.size() != want)
            throw ValidationError("prediction for '" + ex.id + "' has " +
                                  std::to_string(p.labels.size()) + " labels, expected " +
                                  std::to_string(want));
        for (const auto& l : p.labels) {
            if (!target.task.has_label(l))
                throw ValidationError("prediction for '" + ex.id + "' uses unknown label: " + l);
        }
    }
}

}  // namespace

ExemplarPool import_stage1(const std::vector<Prediction>& preds, const Dataset& target,
                           const EmbeddingStore* embeddings) {
    validate_predictions(target, preds);
    std::size_t with_probs = 0;
    for (const auto& p : preds) {
        if (p.probs) ++with_probs;
    }
    if (with_probs != 0 && with_probs != preds.size())
        throw ValidationError("predictions mix present and absent probabilities");

    ExemplarPool pool;
    pool.dataset = &target;
    pool.embeddings = embeddings;
    pool.provenance = PoolProvenance::imported;
    for (const auto& p : preds) pool.predictions[p.example_id] = p;
    if (with_probs == preds.size() && !preds.empty()) {
        std::map<std::string, LabelConfidence> confs;
        for (const auto& p : preds) confs[p.example_id] = estimate_label_confidences(p);
        pool.confidences = std::move(confs);
    }
    return pool;
}

ExemplarPool build_gold_pool(const Dataset& target, const EmbeddingStore* embeddings) {
    std::vector<Prediction> preds;
    for (const auto& ex : target.examples) {
        if (!ex.labelled())
            throw ValidationError("gold pool needs labels; example '" + ex.id + "' has none");
        preds.push_back({ex.id, *ex.gold_labels, std::nullopt});
    }
    ExemplarPool pool = import_stage1(preds, target, embeddings);
    pool.provenance = PoolProvenance::gold;
    return pool;
}

ExemplarPool pool_from_stage1(const Dataset& target, const std::vector<Prediction>& preds,
                              const EmbeddingStore* embeddings) {
    ExemplarPool pool = import_stage1(preds, target, embeddings);
    pool.provenance = PoolProvenance::icl_stage1;
    return pool;
}

namespace {

struct PoolIndex {
    std::vector<std::string> ids;                        // ascending
    std::map<std::string, const Example*> examples;
    std::optional<ThresholdTable> thresholds;
};

PoolIndex index_pool(const ExemplarPool& pool, const RunConfig& config) {
    if (!pool.dataset) throw ValidationError("pool has no dataset");
    if (!pool.embeddings) throw ValidationError("pool has no embeddings");
    PoolIndex idx;
    for (const auto& ex : pool.dataset->examples) {
        idx.examples[ex.id] = &ex;
        idx.ids.push_back(ex.id);
        if (!pool.predictions.count(ex.id))
            throw ValidationError("pool is missing a prediction for id: " + ex.id);
    }
    std::sort(idx.ids.begin(), idx.ids.end());

    const bool wants_confidence = config.selector_mode == SelectionMode::full ||
                                  config.selector_mode == SelectionMode::no_coverage;
    if (wants_confidence && pool.confidences) {
        std::vector<LabelConfidence> all;
        for (const auto& id : idx.ids) all.push_back(pool.confidences->at(id));
        idx.thresholds = compute_thresholds(all, config.percentile);
    }
    return idx;
}

SelectionProblem build_problem(const ExemplarPool& pool, const PoolIndex& idx,
                               const RunConfig& config, const std::string& query_id,
                               const std::vector<double>& query_vec) {
    SelectionProblem problem;
    problem.query_id = query_id;
    problem.coverage_labels = pool.dataset->task.coverage_labels;
    problem.k = config.k;
    problem.mode = config.selector_mode;
    problem.thresholds = idx.thresholds;
    problem.threshold_exclude = config.threshold_exclude;
    for (const auto& id : idx.ids) {
        if (id == query_id) continue;
        SelectionCandidate cand;
        cand.sim = cosine(query_vec, pool.embeddings->vector_of(id));
        const Prediction& pred = pool.predictions.at(id);
        for (const auto& label : pred.labels) cand.label_counts[label] += 1;
        if (pool.confidences) cand.conf = pool.confidences->at(id).conf;
        problem.candidates[id] = std::move(cand);
    }
    return problem;
}

// Prompt order: similarity descending, ties by ascending id.
std::vector<std::string> prompt_order(const SelectionProblem& problem,
                                      const std::vector<std::string>& chosen) {
    std::vector<std::string> ordered = chosen;
    std::sort(ordered.begin(), ordered.end(), [&](const std::string& a, const std::string& b) {
        const double sa = problem.candidates.at(a).sim;
        const double sb = problem.candidates.at(b).sim;
        if (sa != sb) return sa > sb;
        return a < b;
    });
    return ordered;
}

}  // namespace

std::vector<SelectionTraceEntry> select_exemplars(const ExemplarPool& pool,
                                                  const RunConfig& config) {
    const PoolIndex idx = index_pool(pool, config);
    const auto& examples = pool.dataset->examples;
    std::vector<SelectionTraceEntry> trace(examples.size());
    parallel_for(examples.size(), config.parallel, [&](std::size_t i) {
        const std::string& id = examples[i].id;
        const auto problem =
            build_problem(pool, idx, config, id, pool.embeddings->vector_of(id));
        const SelectionResult res = select(problem, config.seed);
        trace[i] = {id, config.selector_mode, prompt_order(problem, res.chosen_ids),
                    res.objective, res.relaxations};
    });
    return trace;
}

StageResult run_stage2_ssp(const ExemplarPool& pool, LlmClient& llm, const RunConfig& config) {
    const PoolIndex idx = index_pool(pool, config);
    const TaskSpec& task = pool.dataset->task;
    const auto& examples = pool.dataset->examples;

    std::vector<PerQueryOutcome> outcomes(examples.size());
    std::vector<SelectionTraceEntry> trace(examples.size());
    parallel_for(examples.size(), config.parallel, [&](std::size_t i) {
        const Example& query = examples[i];
        auto& out = outcomes[i];
        const auto problem =
            build_problem(pool, idx, config, query.id, pool.embeddings->vector_of(query.id));
        const SelectionResult res = select(problem, config.seed);
        const auto ordered = prompt_order(problem, res.chosen_ids);
        trace[i] = {query.id, config.selector_mode, ordered, res.objective, res.relaxations};

        std::vector<PromptExemplar> exemplars;
        exemplars.reserve(ordered.size());
        for (const auto& id : ordered)
            exemplars.push_back({idx.examples.at(id), pool.predictions.at(id).labels});
        const std::string prompt = render_prompt(task, exemplars, query);
        if (config.dry_run) {
            out.prompt = prompt;
            return;
        }
        try {
            out.prediction = verbalize(task, query, llm.complete(prompt), out.repaired);
        } catch (const TransportError&) {
            out.prediction = {query.id, default_labels(task, query), std::nullopt};
            out.failed = true;
        } catch (const ProtocolError&) {
            out.prediction = {query.id, default_labels(task, query), std::nullopt};
            out.failed = true;
        } catch (const UnparseableResponseError&) {
            out.prediction = {query.id, default_labels(task, query), std::nullopt};
            out.failed = true;
        }
    });

    StageResult result;
    result.trace = std::move(trace);
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        auto& out = outcomes[i];
        if (config.dry_run) {
            result.prompts.emplace_back(examples[i].id, std::move(out.prompt));
            continue;
        }
        if (out.failed) result.failed_ids.push_back(examples[i].id);
        result.repaired_positions += out.repaired;
        result.predictions.push_back(std::move(out.prediction));
    }
    return result;
}

std::string trace_to_jsonl(const std::vector<SelectionTraceEntry>& trace) {
    std::string out;
    for (const auto& entry : trace) {
        json obj;
        obj["query_id"] = entry.query_id;
        obj["mode"] = to_string(entry.mode);
        obj["chosen_ids"] = entry.chosen_ids;
        obj["objective"] = entry.objective;
        obj["relaxations"] = entry.relaxations;
        out += obj.dump();
        out += "\n";
    }
    return out;
}

std::vector<std::string> inject_noise(const std::vector<std::string>& labels, double rate,
                                      const TaskSpec& task, std::mt19937_64& rng) {
    if (rate < 0.0 || rate > 1.0) throw ValidationError("noise rate must be in [0, 1]");
    for (const auto& l : labels) {
        if (!task.has_label(l)) throw ValidationError("inject_noise: unknown label " + l);
    }
    std::vector<std::string> noisy = labels;
    const auto n = static_cast<std::uint64_t>(labels.size());
    const auto flips = static_cast<std::uint64_t>(std::llround(rate * static_cast<double>(n)));
    if (flips > 0 && task.labels.size() < 2)
        throw ValidationError("inject_noise needs at least two labels to flip between");

    // partial Fisher-Yates: the first `flips` entries are a uniform sample
    std::vector<std::size_t> positions(n);
    for (std::size_t i = 0; i < n; ++i) positions[i] = i;
    for (std::uint64_t i = 0; i < flips; ++i) {
        const std::uint64_t j = i + bounded_rand(rng, n - i);
        std::swap(positions[i], positions[j]);
    }
    for (std::uint64_t i = 0; i < flips; ++i) {
        const std::size_t pos = positions[i];
        // uniform over the labels other than the current one
        const auto& all = task.labels;
        std::size_t cur = 0;
        while (all[cur] != noisy[pos]) ++cur;
        std::uint64_t pick = bounded_rand(rng, all.size() - 1);
        if (pick >= cur) ++pick;
        noisy[pos] = all[pick];
    }
    return noisy;
}

namespace {

ExemplarPool noisy_gold_pool(const Dataset& target, const EmbeddingStore* embeddings,
                             double rate, const TaskSpec& task, std::mt19937_64& rng) {
    std::vector<std::string> flat;
    for (const auto& ex : target.examples) {
        for (const auto& l : *ex.gold_labels) flat.push_back(l);
    }
    const auto noisy = inject_noise(flat, rate, task, rng);
    std::vector<Prediction> preds;
    std::size_t off = 0;
    for (const auto& ex : target.examples) {
        const std::size_t n = ex.gold_labels->size();
        preds.push_back({ex.id,
                         std::vector<std::string>(noisy.begin() + off, noisy.begin() + off + n),
                         std::nullopt});
        off += n;
    }
    ExemplarPool pool = import_stage1(preds, target, embeddings);
    pool.provenance = PoolProvenance::gold;
    return pool;
}

}  // namespace

NoiseReport run_noise_experiment(const Dataset& target, const Dataset& source,
                                 const EmbeddingStore& target_store,
                                 const EmbeddingStore& source_store, LlmClient& llm,
                                 const std::vector<double>& rates, const RunConfig& config) {
    for (const auto& ex : target.examples) {
        if (!ex.labelled())
            throw ValidationError("noise experiment needs gold target labels; '" + ex.id +
                                  "' has none");
    }
    NoiseReport report;

    // Source-exemplar baseline, as in the plain cross-lingual setup.
    {
        const StageResult base = run_stage1_icl(target, source, target_store, source_store,
                                                llm, config);
        report.baseline_f1 = score(target, base.predictions, target.task).micro_f1;
    }

    RunConfig stage2_config = config;
    stage2_config.selector_mode = SelectionMode::similarity_only;
    for (std::size_t r = 0; r < rates.size(); ++r) {
        std::mt19937_64 rng(config.seed + r);
        const ExemplarPool pool =
            noisy_gold_pool(target, &target_store, rates[r], target.task, rng);
        const StageResult stage2 = run_stage2_ssp(pool, llm, stage2_config);
        const double f1 = score(target, stage2.predictions, target.task).micro_f1;
        report.rate_f1.emplace_back(rates[r], f1);
        if (!report.crossover_rate && f1 < report.baseline_f1)
            report.crossover_rate = rates[r];
    }
    return report;
}

std::string noise_report_to_json(const NoiseReport& report) {
    json j;
    j["baseline_f1"] = report.baseline_f1;
    json rates = json::array();
    for (const auto& [rate, f1] : report.rate_f1)
        rates.push_back(json{{"rate", rate}, {"f1", f1}});
    j["rates"] = rates;
    if (report.crossover_rate)
        j["crossover_rate"] = *report.crossover_rate;
    else
        j["crossover_rate"] = nullptr;
    return j.dump(2) + "\n";
}

}  // namespace ssp

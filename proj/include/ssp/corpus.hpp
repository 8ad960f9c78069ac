#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ssp/errors.hpp"

namespace ssp {

enum class TaskKind { sequence_labelling, pair_classification };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& s);

/// Task definition: full tagset, default tag, which labels the selector's
/// coverage constraint ranges over, and the prompt template to use.
struct TaskSpec {
    TaskKind kind = TaskKind::sequence_labelling;
    std::vector<std::string> labels;           // ordered, duplicate-free
    std::string default_label;                 // O for NER, X for POS
    std::vector<std::string> coverage_labels;  // subset of labels
    std::string template_id;                   // ner | pos | nli
    std::string language;                      // BCP-47-style code

    bool has_label(const std::string& label) const;
    /// Throws ValidationError on any broken invariant.
    void validate() const;
};

/// One test or training instance. Sequence tasks use `tokens`;
/// pair classification uses `premise`/`hypothesis`.
struct Example {
    std::string id;
    std::vector<std::string> tokens;
    std::string premise;
    std::string hypothesis;
    std::optional<std::vector<std::string>> gold_labels;

    bool labelled() const { return gold_labels.has_value(); }
};

/// Model output for one example: a label per position (one for NLI),
/// with per-position probabilities when the backing model exposes them.
struct Prediction {
    std::string example_id;
    std::vector<std::string> labels;
    std::optional<std::vector<double>> probs;
};

struct Dataset {
    TaskSpec task;
    std::vector<Example> examples;

    const Example* find(const std::string& id) const;
};

/// Parses blank-line-separated blocks of "word<TAB>tag" lines. The tag
/// column may be absent (unlabelled test data) but must be consistent
/// within a block. A "# id = <value>" line before a block overrides the
/// default positional id.
Dataset parse_conll(const std::string& text, const TaskSpec& task);

/// Parses one JSON object per line: {"premise","hypothesis","label"?,"id"?}.
Dataset parse_nli_jsonl(const std::string& text, const TaskSpec& task);

/// Inverse serializers; parse(write(d)) == d.
std::string write_conll(const Dataset& dataset);
std::string write_nli_jsonl(const Dataset& dataset);

/// Predictions JSONL: {"id","labels":[...],"probs":[...]?} per line,
/// in dataset order. Throws ValidationError when an example lacks a
/// prediction.
std::string write_predictions(const Dataset& dataset, const std::vector<Prediction>& preds);
void write_predictions_file(const Dataset& dataset, const std::vector<Prediction>& preds,
                            const std::string& path);

std::vector<Prediction> read_predictions(const std::string& text);
std::vector<Prediction> read_predictions_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace ssp

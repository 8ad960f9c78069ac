#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "ssp/corpus.hpp"

namespace ssp::test {

inline TaskSpec ner_task() {
    TaskSpec task;
    task.kind = TaskKind::sequence_labelling;
    task.labels = {"O", "B-PER", "I-PER", "B-LOC", "I-LOC", "B-ORG", "I-ORG", "B-DATE",
                   "I-DATE"};
    task.default_label = "O";
    task.coverage_labels = task.labels;
    task.template_id = "ner";
    task.language = "kin";
    return task;
}

inline TaskSpec pos_task(std::vector<std::string> labels = {"DET", "NOUN", "VERB", "PUNCT",
                                                            "X"}) {
    TaskSpec task;
    task.kind = TaskKind::sequence_labelling;
    task.labels = std::move(labels);
    const bool has_x =
        std::find(task.labels.begin(), task.labels.end(), "X") != task.labels.end();
    task.default_label = has_x ? "X" : task.labels.front();
    task.coverage_labels = task.labels;
    task.template_id = "pos";
    task.language = "fo";
    return task;
}

inline TaskSpec nli_task() {
    TaskSpec task;
    task.kind = TaskKind::pair_classification;
    task.labels = {"entailment", "contradiction", "neutral"};
    task.default_label = "neutral";
    task.coverage_labels = task.labels;
    task.template_id = "nli";
    task.language = "aym";
    return task;
}

inline Example seq_example(std::string id, std::vector<std::string> tokens,
                           std::vector<std::string> gold = {}) {
    Example ex;
    ex.id = std::move(id);
    ex.tokens = std::move(tokens);
    if (!gold.empty()) ex.gold_labels = std::move(gold);
    return ex;
}

}  // namespace ssp::test

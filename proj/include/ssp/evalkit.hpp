#pragma once

#include <map>
#include <string>
#include <vector>

#include "ssp/corpus.hpp"

namespace ssp {

struct LabelScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long gold_count = 0;
    long pred_count = 0;
};

/// gold label -> predicted label -> count.
using ConfusionMatrix = std::map<std::string, std::map<std::string, long>>;

struct EvalReport {
    std::vector<std::string> labels;
    double micro_f1 = 0.0;        // headline metric (see score() for the per-task rule)
    double accuracy = 0.0;        // all positions
    double macro_f1 = 0.0;
    double micro_f1_nondefault = 0.0;  // default label excluded from both sides
    double span_f1 = 0.0;         // exact-match BIO spans; sequence tasks only
    bool has_span_f1 = false;
    std::map<std::string, LabelScores> per_label;
    ConfusionMatrix confusion;
    long total_positions = 0;
    // Position-level correctness per example, for external significance tests.
    std::vector<std::pair<std::string, std::vector<bool>>> per_example_correct;
};

/// A BIO entity span [begin, end) of a given type.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::string type;
    bool operator==(const Span&) const = default;
};

/// Linear-scan BIO span extraction; an I- tag without a same-type
/// predecessor starts a new span.
std::vector<Span> extract_spans(const std::vector<std::string>& labels);

/// Scores predictions against gold labels, aligned by example id.
/// Headline micro_f1: NER (template "ner") excludes the default label
/// from both numerator and denominator; POS counts every position
/// (micro-F1 == accuracy); NLI reports accuracy. Throws ValidationError
/// on id or length mismatches.
EvalReport score(const Dataset& golds, const std::vector<Prediction>& preds,
                 const TaskSpec& task);

/// One selection event: which exemplars were chosen for a query.
struct SelectionEvent {
    std::string query_id;
    std::vector<std::string> chosen_ids;
};

struct ExemplarPrecision {
    std::map<std::string, double> per_label;  // only labels that occurred in exemplars
    std::map<std::string, long> positions;    // exemplar positions carrying the label
    double macro = 0.0;
};

/// Label-wise precision of the Stage I labels shown inside prompts,
/// over all K x N selected exemplar positions: the fraction whose gold
/// label agrees with the displayed label.
ExemplarPrecision exemplar_precision(const std::vector<SelectionEvent>& events,
                                     const std::map<std::string, Prediction>& stage1,
                                     const Dataset& golds);

/// Elementwise a - b; both matrices are completed over the union of
/// their row/column labels, which must match the given label set.
std::map<std::string, std::map<std::string, long>> confusion_diff(const EvalReport& a,
                                                                  const EvalReport& b);

std::string report_to_json(const EvalReport& report);
std::string per_label_csv(const EvalReport& report);
std::string confusion_csv(const EvalReport& report);

}  // namespace ssp

#pragma once

#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "ssp/corpus.hpp"

namespace ssp {

/// Per-example label confidences: for each label the example predicted
/// somewhere, the mean probability over the positions that predicted it.
/// Labels the example never predicted have confidence 0.
struct LabelConfidence {
    std::string example_id;
    std::map<std::string, double> conf;       // only labels in label_counts
    std::map<std::string, int> label_counts;  // the multiset L_i

    double conf_for(const std::string& label) const {
        auto it = conf.find(label);
        return it == conf.end() ? 0.0 : it->second;
    }
    bool predicts(const std::string& label) const { return label_counts.count(label) > 0; }
};

/// Per-label nearest-rank percentile thresholds over a prediction pool.
struct ThresholdTable {
    std::map<std::string, double> tau;
    double percentile = 80.0;

    bool has(const std::string& label) const { return tau.count(label) > 0; }
    double tau_for(const std::string& label) const;
};

/// Throws ValidationError when the prediction carries no probabilities;
/// callers must then run the selector without confidence constraints.
LabelConfidence estimate_label_confidences(const Prediction& pred);

/// tau_l = the value at ascending rank ceil(percentile/100 * m) among the
/// m confidences of pool members that predicted l. Labels predicted
/// nowhere in the pool get no entry.
ThresholdTable compute_thresholds(const std::vector<LabelConfidence>& pool, double percentile);

/// True iff conf[l] >= tau_l for every predicted label l (labels in
/// `exclude` are not checked). Throws ValidationError when the table has
/// no entry for a predicted, non-excluded label.
bool eligible(const LabelConfidence& lc, const ThresholdTable& thresholds,
              const std::unordered_set<std::string>& exclude = {});

/// Confidence table audit export: {"id","conf":{label:value}} per line.
std::string confidences_to_jsonl(const std::vector<LabelConfidence>& pool);

}  // namespace ssp

#include "ssp/confidence.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace ssp {

double ThresholdTable::tau_for(const std::string& label) const {
    auto it = tau.find(label);
    if (it == tau.end()) throw ValidationError("no threshold for label: " + label);
    return it->second;
}

LabelConfidence estimate_label_confidences(const Prediction& pred) {
    if (!pred.probs)
        throw ValidationError("confidences unavailable: prediction for '" + pred.example_id +
                              "' has no probabilities");
    if (pred.probs->size() != pred.labels.size())
        throw ValidationError("labels/probs length mismatch for id " + pred.example_id);

    LabelConfidence lc;
    lc.example_id = pred.example_id;
    std::map<std::string, double> sums;
    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
        sums[pred.labels[i]] += (*pred.probs)[i];
        lc.label_counts[pred.labels[i]] += 1;
    }
    for (const auto& [label, sum] : sums) lc.conf[label] = sum / lc.label_counts[label];
    return lc;
}

ThresholdTable compute_thresholds(const std::vector<LabelConfidence>& pool, double percentile) {
    if (pool.empty()) throw ValidationError("compute_thresholds: empty pool");
    if (!(percentile > 0.0 && percentile <= 100.0))
        throw ValidationError("percentile must be in (0, 100]");

    std::map<std::string, std::vector<double>> by_label;
    for (const auto& lc : pool) {
        for (const auto& [label, value] : lc.conf) by_label[label].push_back(value);
    }

    ThresholdTable table;
    table.percentile = percentile;
    for (auto& [label, values] : by_label) {
        std::sort(values.begin(), values.end());
        const double m = static_cast<double>(values.size());
        // Nearest rank: 1-based index ceil(percentile*m/100) into the
        // ascending sort, so tau is always an attained value.
        auto rank = static_cast<std::size_t>(std::ceil(percentile * m / 100.0));
        rank = std::clamp<std::size_t>(rank, 1, values.size());
        table.tau[label] = values[rank - 1];
    }
    return table;
}

bool eligible(const LabelConfidence& lc, const ThresholdTable& thresholds,
              const std::unordered_set<std::string>& exclude) {
    for (const auto& [label, _] : lc.label_counts) {
        if (exclude.count(label)) continue;
        if (lc.conf_for(label) < thresholds.tau_for(label)) return false;
    }
    return true;
}

std::string confidences_to_jsonl(const std::vector<LabelConfidence>& pool) {
    std::string out;
    for (const auto& lc : pool) {
        nlohmann::json obj;
        obj["id"] = lc.example_id;
        obj["conf"] = lc.conf;
        out += obj.dump();
        out += "\n";
    }
    return out;
}

}  // namespace ssp

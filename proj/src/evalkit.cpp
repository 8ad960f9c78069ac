#include "ssp/evalkit.hpp"

#include <algorithm>

#include "json.hpp"

namespace ssp {

using nlohmann::json;

namespace {

double f1_of(double precision, double recall) {
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

double ratio(long num, long den) { return den == 0 ? 0.0 : static_cast<double>(num) / den; }

bool bio_continues(const std::string& prev, const std::string& cur) {
    // cur is an I- tag; it continues a span started by prev iff prev is
    // B-/I- of the same type.
    if (prev.size() < 2 || (prev[0] != 'B' && prev[0] != 'I') || prev[1] != '-') return false;
    return prev.substr(2) == cur.substr(2);
}

}  // namespace

std::vector<Span> extract_spans(const std::vector<std::string>& labels) {
    std::vector<Span> spans;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::string& tag = labels[i];
        const bool is_b = tag.rfind("B-", 0) == 0;
        const bool is_i = tag.rfind("I-", 0) == 0;
        if (!is_b && !is_i) continue;
        if (is_i && i > 0 && bio_continues(labels[i - 1], tag)) {
            spans.back().end = i + 1;
            continue;
        }
        spans.push_back({i, i + 1, tag.substr(2)});
    }
    return spans;
}

EvalReport score(const Dataset& golds, const std::vector<Prediction>& preds,
                 const TaskSpec& task) {
    task.validate();
    std::map<std::string, const Prediction*> by_id;
    for (const auto& p : preds) by_id[p.example_id] = &p;

    EvalReport report;
    report.labels = task.labels;
    for (const auto& l : task.labels) {
        report.per_label[l] = {};
        for (const auto& m : task.labels) report.confusion[l][m] = 0;
    }

    long correct = 0, total = 0;
    long nd_tp = 0, nd_pred = 0, nd_gold = 0;  // non-default micro counts
    std::map<std::string, long> tp, gold_count, pred_count;
    long span_tp = 0, span_gold = 0, span_pred = 0;
    const bool bio_tagset =
        task.kind == TaskKind::sequence_labelling &&
        std::any_of(task.labels.begin(), task.labels.end(),
                    [](const std::string& l) { return l.rfind("B-", 0) == 0; });

    for (const auto& ex : golds.examples) {
        if (!ex.gold_labels)
            throw ValidationError("example '" + ex.id + "' has no gold labels to score against");
        auto it = by_id.find(ex.id);
        if (it == by_id.end()) throw ValidationError("no prediction for example id: " + ex.id);
        const Prediction& pred = *it->second;
        const auto& gold = *ex.gold_labels;
        if (pred.labels.size() != gold.size())
            throw ValidationError("prediction for '" + ex.id + "' has " +
                                  std::to_string(pred.labels.size()) + " labels, gold has " +
                                  std::to_string(gold.size()));

        std::vector<bool> correct_vec(gold.size(), false);
        for (std::size_t i = 0; i < gold.size(); ++i) {
            const std::string& g = gold[i];
            const std::string& p = pred.labels[i];
            if (!task.has_label(g)) throw ValidationError("gold label not in task: " + g);
            if (!task.has_label(p)) throw ValidationError("predicted label not in task: " + p);
            ++total;
            ++gold_count[g];
            ++pred_count[p];
            ++report.confusion[g][p];
            if (g == p) {
                ++correct;
                ++tp[g];
                correct_vec[i] = true;
            }
            if (p != task.default_label) {
                ++nd_pred;
                if (g == p) ++nd_tp;
            }
            if (g != task.default_label) ++nd_gold;
        }
        report.per_example_correct.emplace_back(ex.id, std::move(correct_vec));

        if (bio_tagset) {
            const auto gold_spans = extract_spans(gold);
            const auto pred_spans = extract_spans(pred.labels);
            span_gold += static_cast<long>(gold_spans.size());
            span_pred += static_cast<long>(pred_spans.size());
            for (const auto& s : pred_spans) {
                if (std::find(gold_spans.begin(), gold_spans.end(), s) != gold_spans.end())
                    ++span_tp;
            }
        }
    }

    report.total_positions = total;
    report.accuracy = ratio(correct, total);
    report.micro_f1_nondefault = f1_of(ratio(nd_tp, nd_pred), ratio(nd_tp, nd_gold));
    if (bio_tagset) {
        report.has_span_f1 = true;
        report.span_f1 = f1_of(ratio(span_tp, span_pred), ratio(span_tp, span_gold));
    }

    double macro_sum = 0.0;
    for (const auto& l : task.labels) {
        LabelScores& s = report.per_label[l];
        s.gold_count = gold_count[l];
        s.pred_count = pred_count[l];
        s.precision = ratio(tp[l], pred_count[l]);
        s.recall = ratio(tp[l], gold_count[l]);
        s.f1 = f1_of(s.precision, s.recall);
        macro_sum += s.f1;
    }
    report.macro_f1 = task.labels.empty() ? 0.0 : macro_sum / task.labels.size();

    // Headline metric: NER-style tasks exclude the default tag; POS and
    // NLI count every position.
    report.micro_f1 = task.template_id == "ner" ? report.micro_f1_nondefault : report.accuracy;
    return report;
}

ExemplarPrecision exemplar_precision(const std::vector<SelectionEvent>& events,
                                     const std::map<std::string, Prediction>& stage1,
                                     const Dataset& golds) {
    std::map<std::string, long> agree, total;
    for (const auto& event : events) {
        for (const auto& id : event.chosen_ids) {
            auto pit = stage1.find(id);
            if (pit == stage1.end())
                throw ValidationError("no Stage I prediction for exemplar id: " + id);
            const Example* ex = golds.find(id);
            if (!ex || !ex->gold_labels)
                throw ValidationError("no gold labels for exemplar id: " + id);
            const auto& shown = pit->second.labels;
            const auto& gold = *ex->gold_labels;
            if (shown.size() != gold.size())
                throw ValidationError("label length mismatch for exemplar id: " + id);
            for (std::size_t i = 0; i < shown.size(); ++i) {
                ++total[shown[i]];
                if (shown[i] == gold[i]) ++agree[shown[i]];
            }
        }
    }
    ExemplarPrecision out;
    double sum = 0.0;
    for (const auto& [label, count] : total) {
        out.per_label[label] = ratio(agree[label], count);
        out.positions[label] = count;
        sum += out.per_label[label];
    }
    out.macro = total.empty() ? 0.0 : sum / static_cast<double>(total.size());
    return out;
}

std::map<std::string, std::map<std::string, long>> confusion_diff(const EvalReport& a,
                                                                  const EvalReport& b) {
    if (a.labels != b.labels)
        throw ValidationError("confusion_diff: reports have different label sets");
    std::map<std::string, std::map<std::string, long>> diff;
    for (const auto& g : a.labels) {
        for (const auto& p : a.labels)
            diff[g][p] = a.confusion.at(g).at(p) - b.confusion.at(g).at(p);
    }
    return diff;
}

std::string report_to_json(const EvalReport& report) {
    json j;
    j["micro_f1"] = report.micro_f1;
    j["accuracy"] = report.accuracy;
    j["macro_f1"] = report.macro_f1;
    j["micro_f1_nondefault"] = report.micro_f1_nondefault;
    if (report.has_span_f1) j["span_f1"] = report.span_f1;
    j["total_positions"] = report.total_positions;
    json per_label = json::object();
    for (const auto& [label, s] : report.per_label) {
        per_label[label] = {{"precision", s.precision},
                            {"recall", s.recall},
                            {"f1", s.f1},
                            {"gold_count", s.gold_count},
                            {"pred_count", s.pred_count}};
    }
    j["per_label"] = per_label;
    json confusion = json::object();
    for (const auto& [g, row] : report.confusion) confusion[g] = row;
    j["confusion"] = confusion;
    json per_example = json::array();
    for (const auto& [id, vec] : report.per_example_correct) {
        json entry;
        entry["id"] = id;
        entry["correct"] = vec;
        per_example.push_back(entry);
    }
    j["per_example"] = per_example;
    return j.dump(2) + "\n";
}

std::string per_label_csv(const EvalReport& report) {
    std::string out = "label,precision,recall,f1,gold_count,pred_count\n";
    for (const auto& label : report.labels) {
        const LabelScores& s = report.per_label.at(label);
        out += label + "," + std::to_string(s.precision) + "," + std::to_string(s.recall) +
               "," + std::to_string(s.f1) + "," + std::to_string(s.gold_count) + "," +
               std::to_string(s.pred_count) + "\n";
    }
    return out;
}

std::string confusion_csv(const EvalReport& report) {
    std::string out = "gold\\pred";
    for (const auto& label : report.labels) out += "," + label;
    out += "\n";
    for (const auto& g : report.labels) {
        out += g;
        for (const auto& p : report.labels) out += "," + std::to_string(report.confusion.at(g).at(p));
        out += "\n";
    }
    return out;
}

}  // namespace ssp

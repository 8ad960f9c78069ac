#include "ssp/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace ssp {

using nlohmann::json;

std::string to_string(TaskKind kind) {
    return kind == TaskKind::sequence_labelling ? "sequence-labelling" : "pair-classification";
}

TaskKind task_kind_from_string(const std::string& s) {
    if (s == "sequence-labelling") return TaskKind::sequence_labelling;
    if (s == "pair-classification") return TaskKind::pair_classification;
    throw ValidationError("unknown task kind: " + s);
}

bool TaskSpec::has_label(const std::string& label) const {
    return std::find(labels.begin(), labels.end(), label) != labels.end();
}

void TaskSpec::validate() const {
    if (labels.empty()) throw ValidationError("task has an empty label set");
    std::unordered_set<std::string> seen;
    for (const auto& l : labels) {
        if (!seen.insert(l).second) throw ValidationError("duplicate label: " + l);
    }
    if (!has_label(default_label))
        throw ValidationError("default label '" + default_label + "' is not in the label set");
    for (const auto& l : coverage_labels) {
        if (!has_label(l))
            throw ValidationError("coverage label '" + l + "' is not in the label set");
    }
}

const Example* Dataset::find(const std::string& id) const {
    for (const auto& ex : examples) {
        if (ex.id == id) return &ex;
    }
    return nullptr;
}

namespace {

// A separator line is empty up to trailing spaces/tabs (and an optional \r).
bool is_blank(const std::string& line) {
    return line.find_first_not_of(" \t\r") == std::string::npos;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

void check_unique_ids(const Dataset& dataset) {
    std::unordered_set<std::string> ids;
    for (const auto& ex : dataset.examples) {
        if (!ids.insert(ex.id).second)
            throw ValidationError("duplicate example id: " + ex.id);
    }
}

constexpr const char* kIdDirective = "# id =";

}  // namespace

Dataset parse_conll(const std::string& text, const TaskSpec& task) {
    task.validate();
    if (task.kind != TaskKind::sequence_labelling)
        throw ValidationError("parse_conll requires a sequence-labelling task");

    Dataset dataset{task, {}};
    std::vector<std::string> words;
    std::vector<std::string> tags;
    std::optional<std::string> pending_id;
    bool block_tagged = false;
    std::size_t next_index = 0;

    auto flush = [&]() {
        if (words.empty()) return;
        Example ex;
        ex.id = pending_id ? *pending_id : std::to_string(next_index);
        ex.tokens = std::move(words);
        if (block_tagged) ex.gold_labels = std::move(tags);
        dataset.examples.push_back(std::move(ex));
        words.clear();
        tags.clear();
        pending_id.reset();
        ++next_index;
    };

    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t lineno = i + 1;
        std::string line = strip_cr(lines[i]);
        if (is_blank(line)) {
            flush();
            continue;
        }
        if (line.rfind(kIdDirective, 0) == 0) {
            if (!words.empty())
                throw ParseError("id directive inside a sentence block", lineno);
            std::string value = line.substr(std::string(kIdDirective).size());
            const auto start = value.find_first_not_of(' ');
            pending_id = start == std::string::npos ? std::string() : value.substr(start);
            if (pending_id->empty()) throw ParseError("empty id directive", lineno);
            continue;
        }
        const std::size_t ntabs = std::count(line.begin(), line.end(), '\t');
        if (ntabs > 1) throw ParseError("expected 'word' or 'word<TAB>tag'", lineno);
        if (ntabs == 1) {
            const auto tab = line.find('\t');
            std::string word = line.substr(0, tab);
            std::string tag = line.substr(tab + 1);
            if (word.empty() || tag.empty()) throw ParseError("empty field", lineno);
            if (!words.empty() && !block_tagged)
                throw ParseError("tagged line in an untagged block", lineno);
            block_tagged = true;
            if (!task.has_label(tag))
                throw ValidationError("unknown tag '" + tag + "' at line " + std::to_string(lineno));
            words.push_back(std::move(word));
            tags.push_back(std::move(tag));
        } else {
            if (!words.empty() && block_tagged)
                throw ParseError("untagged line in a tagged block", lineno);
            block_tagged = false;
            words.push_back(std::move(line));
        }
    }
    flush();
    check_unique_ids(dataset);
    return dataset;
}

Dataset parse_nli_jsonl(const std::string& text, const TaskSpec& task) {
    task.validate();
    if (task.kind != TaskKind::pair_classification)
        throw ValidationError("parse_nli_jsonl requires a pair-classification task");

    Dataset dataset{task, {}};
    const auto lines = split_lines(text);
    std::size_t next_index = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t lineno = i + 1;
        std::string line = strip_cr(lines[i]);
        if (is_blank(line)) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
        }
        if (!obj.is_object()) throw ParseError("expected a JSON object", lineno);
        if (!obj.contains("premise")) throw ParseError("missing key 'premise'", lineno);
        if (!obj.contains("hypothesis")) throw ParseError("missing key 'hypothesis'", lineno);

        Example ex;
        ex.id = obj.contains("id") ? obj.at("id").get<std::string>() : std::to_string(next_index);
        ex.premise = obj.at("premise").get<std::string>();
        ex.hypothesis = obj.at("hypothesis").get<std::string>();
        if (obj.contains("label") && !obj.at("label").is_null()) {
            std::string label = obj.at("label").get<std::string>();
            if (!task.has_label(label))
                throw ValidationError("unknown label '" + label + "' at line " +
                                      std::to_string(lineno));
            ex.gold_labels = std::vector<std::string>{std::move(label)};
        }
        dataset.examples.push_back(std::move(ex));
        ++next_index;
    }
    check_unique_ids(dataset);
    return dataset;
}

std::string write_conll(const Dataset& dataset) {
    std::string out;
    bool first = true;
    for (const auto& ex : dataset.examples) {
        if (!first) out += "\n";
        first = false;
        out += std::string(kIdDirective) + " " + ex.id + "\n";
        for (std::size_t i = 0; i < ex.tokens.size(); ++i) {
            out += ex.tokens[i];
            if (ex.gold_labels) {
                out += "\t";
                out += (*ex.gold_labels)[i];
            }
            out += "\n";
        }
    }
    return out;
}

std::string write_nli_jsonl(const Dataset& dataset) {
    std::string out;
    for (const auto& ex : dataset.examples) {
        json obj;
        obj["id"] = ex.id;
        obj["premise"] = ex.premise;
        obj["hypothesis"] = ex.hypothesis;
        if (ex.gold_labels) obj["label"] = ex.gold_labels->front();
        out += obj.dump();
        out += "\n";
    }
    return out;
}

std::string write_predictions(const Dataset& dataset, const std::vector<Prediction>& preds) {
    std::string out;
    for (const auto& ex : dataset.examples) {
        const Prediction* pred = nullptr;
        for (const auto& p : preds) {
            if (p.example_id == ex.id) {
                pred = &p;
                break;
            }
        }
        if (!pred) throw ValidationError("no prediction for example id: " + ex.id);
        json obj;
        obj["id"] = pred->example_id;
        obj["labels"] = pred->labels;
        if (pred->probs) obj["probs"] = *pred->probs;
        out += obj.dump();
        out += "\n";
    }
    return out;
}

void write_predictions_file(const Dataset& dataset, const std::vector<Prediction>& preds,
                            const std::string& path) {
    write_text_file(path, write_predictions(dataset, preds));
}

std::vector<Prediction> read_predictions(const std::string& text) {
    std::vector<Prediction> preds;
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string line = strip_cr(lines[i]);
        if (is_blank(line)) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), i + 1);
        }
        Prediction p;
        if (!obj.contains("id")) throw ParseError("missing key 'id'", i + 1);
        if (!obj.contains("labels")) throw ParseError("missing key 'labels'", i + 1);
        p.example_id = obj.at("id").get<std::string>();
        p.labels = obj.at("labels").get<std::vector<std::string>>();
        if (obj.contains("probs")) {
            p.probs = obj.at("probs").get<std::vector<double>>();
            if (p.probs->size() != p.labels.size())
                throw ValidationError("labels/probs length mismatch for id " + p.example_id);
            for (double prob : *p.probs) {
                if (!(prob >= 0.0 && prob <= 1.0))
                    throw ValidationError("probability out of [0,1] for id " + p.example_id);
            }
        }
        preds.push_back(std::move(p));
    }
    return preds;
}

std::vector<Prediction> read_predictions_file(const std::string& path) {
    return read_predictions(read_text_file(path));
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << content;
    if (!out) throw ConfigError("write failed: " + path);
}

}  // namespace ssp

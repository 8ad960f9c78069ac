#include "ssp/prompt.hpp"

#include <algorithm>
#include <cctype>

namespace ssp {

namespace {

const char* kNerDescription =
    "Tag the following sentence according to the BIO scheme for the NER task, using the tags "
    "PER (person), LOC (location), ORG (organization) and DATE (date). Follow the format "
    "specified in the examples below:";

const char* kPosDescription =
    "Tag the following sentence according to the Part of Speech (POS) of each word. The valid "
    "tags are ADJ, ADP, ADV, AUX, CCONJ, DET, INTJ, NOUN, NUM, PART, PRON, PROPN, PUNCT, "
    "SCONJ, SYM, VERB, X. Follow the format specified in the examples below:";

const char* kNliDescription =
    "You are an NLP assistant whose purpose is to solve Natural Language Inference (NLI) "
    "problems. NLI is the task of determining the inference relation between two (short, "
    "ordered) texts: entailment, contradiction, or neutral. Answer as concisely as possible "
    "in the same format as the examples below:";

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

std::string tag_block(const std::vector<std::string>& tokens,
                      const std::vector<std::string>& labels) {
    std::string out = "Tags:\n```\n";
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        out += tokens[i];
        out += '\t';
        out += labels[i];
        out += '\n';
    }
    out += "```\n";
    return out;
}

}  // namespace

std::string task_description(const std::string& template_id) {
    if (template_id == "ner") return kNerDescription;
    if (template_id == "pos") return kPosDescription;
    if (template_id == "nli") return kNliDescription;
    throw ValidationError("unknown template id: " + template_id);
}

std::string query_line(const TaskSpec& task, const Example& example) {
    if (task.kind == TaskKind::pair_classification)
        return "Premise: " + example.premise + " , Hypothesis: " + example.hypothesis + " ,";
    return "Sentence: " + join_tokens(example.tokens);
}

std::string render_prompt(const TaskSpec& task, const std::vector<PromptExemplar>& exemplars,
                          const Example& query) {
    std::string out = task_description(task.template_id);
    out += '\n';
    if (task.kind == TaskKind::pair_classification) {
        for (const auto& ex : exemplars) {
            if (ex.labels.size() != 1)
                throw ValidationError("NLI exemplar '" + ex.example->id +
                                      "' needs exactly one label");
            out += query_line(task, *ex.example);
            out += "\nAnswer: " + ex.labels[0] + "\n";
        }
        out += query_line(task, query);
        out += "\nAnswer:";
        return out;
    }
    for (const auto& ex : exemplars) {
        if (ex.labels.size() != ex.example->tokens.size())
            throw ValidationError("exemplar '" + ex.example->id + "' has " +
                                  std::to_string(ex.labels.size()) + " labels for " +
                                  std::to_string(ex.example->tokens.size()) + " tokens");
        out += query_line(task, *ex.example);
        out += '\n';
        out += tag_block(ex.example->tokens, ex.labels);
    }
    out += query_line(task, query);
    out += "\nTags:\n```\n";
    return out;
}

std::string render_response(const TaskSpec& task, const Example& query,
                            const std::vector<std::string>& labels) {
    if (task.kind == TaskKind::pair_classification) {
        if (labels.size() != 1) throw ValidationError("NLI response needs exactly one label");
        return " " + labels[0];
    }
    if (labels.size() != query.tokens.size())
        throw ValidationError("response labels do not fit the query");
    std::string out;
    for (std::size_t i = 0; i < query.tokens.size(); ++i) {
        out += query.tokens[i];
        out += '\t';
        out += labels[i];
        out += '\n';
    }
    out += "```";
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> lcs_align(
    const std::vector<std::string>& generated_words,
    const std::vector<std::string>& reference_words) {
    const std::size_t n = generated_words.size();
    const std::size_t m = reference_words.size();
    // suffix-length table: len[i][j] = LCS of generated[i..] vs reference[j..]
    std::vector<std::size_t> len((n + 1) * (m + 1), 0);
    auto at = [m](std::size_t i, std::size_t j) { return i * (m + 1) + j; };
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = m; j-- > 0;) {
            if (generated_words[i] == reference_words[j])
                len[at(i, j)] = len[at(i + 1, j + 1)] + 1;
            else
                len[at(i, j)] = std::max(len[at(i + 1, j)], len[at(i, j + 1)]);
        }
    }
    // Walk forward, taking every optimal match and otherwise advancing in
    // the generated sequence first; this keeps matched reference indices
    // as small as possible.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::size_t i = 0, j = 0;
    while (i < n && j < m) {
        if (generated_words[i] == reference_words[j] &&
            len[at(i, j)] == len[at(i + 1, j + 1)] + 1) {
            pairs.emplace_back(i, j);
            ++i;
            ++j;
        } else if (len[at(i + 1, j)] >= len[at(i, j + 1)]) {
            ++i;
        } else {
            ++j;
        }
    }
    return pairs;
}

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

ParsedResponse parse_tagging_response(const std::string& response, const Example& query,
                                      const TaskSpec& task) {
    ParsedResponse parsed;
    parsed.raw = response;

    std::vector<std::string> words;
    std::vector<std::string> tags;
    std::size_t start = 0;
    while (start <= response.size()) {
        std::size_t end = response.find('\n', start);
        if (end == std::string::npos) end = response.size();
        const std::string line = response.substr(start, end - start);
        start = end + 1;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped == "```" || stripped == "Tags:") continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) continue;  // prose
        const std::string word = trim(line.substr(0, tab));
        std::string rest = line.substr(tab + 1);
        const auto tab2 = rest.find('\t');
        if (tab2 != std::string::npos) rest = rest.substr(0, tab2);
        const std::string tag = trim(rest);
        if (word.empty()) continue;
        words.push_back(word);
        tags.push_back(tag);
        if (end == response.size()) break;
    }

    const auto alignment = lcs_align(words, query.tokens);
    parsed.labels.assign(query.tokens.size(), task.default_label);
    std::vector<bool> matched(query.tokens.size(), false);
    for (const auto& [gi, ri] : alignment) {
        matched[ri] = true;
        if (task.has_label(tags[gi])) {
            parsed.labels[ri] = tags[gi];
        } else {
            parsed.repaired_positions.insert(ri);
        }
    }
    for (std::size_t p = 0; p < matched.size(); ++p) {
        if (!matched[p]) parsed.repaired_positions.insert(p);
    }
    parsed.surplus_pairs = words.size() - alignment.size();
    return parsed;
}

std::string parse_nli_response(const std::string& response) {
    static const std::vector<std::string> kLabels = {"entailment", "contradiction", "neutral"};
    std::string lower(response.size(), '\0');
    std::transform(response.begin(), response.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    auto is_word_char = [](unsigned char c) { return std::isalpha(c) != 0; };

    std::size_t best = std::string::npos;
    std::string found;
    for (const auto& label : kLabels) {
        std::size_t pos = 0;
        while ((pos = lower.find(label, pos)) != std::string::npos) {
            const bool left_ok = pos == 0 || !is_word_char(lower[pos - 1]);
            const std::size_t after = pos + label.size();
            const bool right_ok = after >= lower.size() || !is_word_char(lower[after]);
            if (left_ok && right_ok) {
                if (pos < best) {
                    best = pos;
                    found = label;
                }
                break;
            }
            ++pos;
        }
    }
    if (best == std::string::npos)
        throw UnparseableResponseError("no NLI label in response: " + response);
    return found;
}

}  // namespace ssp

#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ssp/corpus.hpp"

namespace ssp {

/// A labelled exemplar as placed into the prompt: the example plus the
/// labels to show for it (gold or Stage I, the caller decides).
struct PromptExemplar {
    const Example* example = nullptr;
    std::vector<std::string> labels;
};

/// The instruction paragraph for a template id (ner | pos | nli).
std::string task_description(const std::string& template_id);

/// "Sentence: w_1 w_2 ... w_T" for sequence tasks,
/// "Premise: {p} , Hypothesis: {h} ," for pair classification.
std::string query_line(const TaskSpec& task, const Example& example);

/// Renders the full prompt: task description, exemplar blocks in the
/// given order (callers pass them in descending similarity), then the
/// query block. Byte-deterministic. Throws ValidationError when an
/// exemplar's labels do not fit its example.
std::string render_prompt(const TaskSpec& task, const std::vector<PromptExemplar>& exemplars,
                          const Example& query);

/// The ideal completion for a query with the given labels, in the same
/// shape the templates ask the model to produce.
std::string render_response(const TaskSpec& task, const Example& query,
                            const std::vector<std::string>& labels);

/// Longest common subsequence under exact word equality, as strictly
/// increasing (generated index, reference index) pairs. Among maximum
/// alignments, matches are placed as early in the reference as possible.
std::vector<std::pair<std::size_t, std::size_t>> lcs_align(
    const std::vector<std::string>& generated_words,
    const std::vector<std::string>& reference_words);

struct ParsedResponse {
    std::vector<std::string> labels;         // exactly |query.tokens| entries
    std::set<std::size_t> repaired_positions;  // indices assigned the default tag by repair
    std::size_t surplus_pairs = 0;           // generated pairs outside the alignment
    std::string raw;
};

/// Total parser for tagging responses: extracts word<TAB>tag pairs
/// (skipping fences and prose), aligns the generated words to the query
/// tokens by LCS, and fills unmatched or invalidly tagged positions with
/// the task's default label.
ParsedResponse parse_tagging_response(const std::string& response, const Example& query,
                                      const TaskSpec& task);

/// Case-insensitive whole-word search for entailment / contradiction /
/// neutral; the first occurrence wins. Throws UnparseableResponseError
/// when none is present.
std::string parse_nli_response(const std::string& response);

}  // namespace ssp

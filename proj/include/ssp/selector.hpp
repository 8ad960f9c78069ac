#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "ssp/confidence.hpp"

namespace ssp {

enum class SelectionMode { full, no_confidence, no_coverage, similarity_only, random };

std::string to_string(SelectionMode mode);
SelectionMode selection_mode_from_string(const std::string& s);

struct SelectionCandidate {
    double sim = 0.0;
    std::map<std::string, int> label_counts;                  // the multiset L_i
    std::optional<std::map<std::string, double>> conf;        // mean confidence per predicted label
};

/// One exemplar-selection instance for a single query: maximize the total
/// similarity of exactly k candidates, subject (by mode) to per-candidate
/// confidence eligibility and to every coverage label appearing in at
/// least one chosen candidate's label multiset.
struct SelectionProblem {
    std::string query_id;
    std::map<std::string, SelectionCandidate> candidates;     // never contains query_id
    std::vector<std::string> coverage_labels;
    std::size_t k = 8;
    std::optional<ThresholdTable> thresholds;
    SelectionMode mode = SelectionMode::full;
    std::unordered_set<std::string> threshold_exclude;        // labels exempt from eligibility
};

struct SelectionResult {
    std::vector<std::string> chosen_ids;   // ascending id order, exactly k entries
    double objective = 0.0;                // sum of sims over chosen (quantized, see below)
    std::vector<std::string> relaxations;  // constraints dropped to restore feasibility
};

/// Exact solver. Eligibility is a per-candidate filter, so the problem is
/// a max-weight k-subset with a coverage side constraint, solved by
/// dynamic programming over coverage bitmasks (branch and bound when the
/// mask table would be too large). Among equal-objective optima the
/// lexicographically smallest id set wins.
///
/// Similarities are quantized to a 1e-12 fixed-point grid internally so
/// the DP, the branch and bound, and the brute-force oracle agree
/// bit-for-bit on objectives and tie-breaks; the reported objective is
/// the quantized sum.
///
/// Infeasibility triggers a relaxation ladder, each step recorded in the
/// result: (1) drop coverage for labels with no eligible holder, (2)
/// lower the confidence percentile in steps of 10, (3) drop the
/// confidence constraint entirely. Throws InfeasibleError when the
/// ladder is exhausted.
SelectionResult select(const SelectionProblem& problem,
                       std::optional<std::uint64_t> seed = std::nullopt);

/// Test oracle: enumerates every k-subset and applies the constraints
/// literally, with the same relaxation ladder and tie-break as select().
/// Requires |candidates| <= 20.
SelectionResult brute_force_select(const SelectionProblem& problem);

}  // namespace ssp

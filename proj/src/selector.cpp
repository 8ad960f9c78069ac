#include "ssp/selector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ssp/rand.hpp"

namespace ssp {

std::string to_string(SelectionMode mode) {
    switch (mode) {
        case SelectionMode::full: return "full";
        case SelectionMode::no_confidence: return "no-confidence";
        case SelectionMode::no_coverage: return "no-coverage";
        case SelectionMode::similarity_only: return "similarity-only";
        case SelectionMode::random: return "random";
    }
    return "?";
}

SelectionMode selection_mode_from_string(const std::string& s) {
    if (s == "full") return SelectionMode::full;
    if (s == "no-confidence") return SelectionMode::no_confidence;
    if (s == "no-coverage") return SelectionMode::no_coverage;
    if (s == "similarity-only") return SelectionMode::similarity_only;
    if (s == "random") return SelectionMode::random;
    throw ValidationError("unknown selection mode: " + s);
}

namespace {

constexpr std::int64_t kNoValue = std::numeric_limits<std::int64_t>::min();
constexpr double kQuantum = 1e-12;
// DP table budget; beyond this the branch-and-bound path takes over.
constexpr std::size_t kDpBudgetBytes = 64u << 20;

std::int64_t quantize(double sim) {
    if (!std::isfinite(sim) || std::abs(sim) > 1e3)
        throw ValidationError("similarity out of range: " + std::to_string(sim));
    return std::llround(sim / kQuantum);
}

struct Prepared {
    std::vector<std::string> ids;          // ascending
    std::vector<std::int64_t> weights;     // quantized sims, aligned with ids
    std::vector<std::uint64_t> masks;      // coverage-label bits, aligned with ids
    std::vector<std::string> mask_labels;  // bit -> label
    std::uint64_t full_mask = 0;
    std::size_t k = 0;
};

struct Attempt {
    std::vector<std::uint32_t> eligible;   // indices into Prepared, ascending
    std::uint64_t required = 0;
    std::vector<std::string> relaxations;
};

Prepared prepare(const SelectionProblem& problem) {
    if (problem.k == 0) throw ValidationError("k must be positive");
    if (problem.candidates.count(problem.query_id))
        throw ValidationError("query '" + problem.query_id + "' is listed as its own candidate");
    if (problem.k > problem.candidates.size())
        throw InfeasibleError("k=" + std::to_string(problem.k) + " exceeds candidate count " +
                              std::to_string(problem.candidates.size()));

    Prepared prep;
    prep.k = problem.k;
    std::map<std::string, int> label_bit;
    for (const auto& label : problem.coverage_labels) {
        if (!label_bit.count(label)) {
            const int bit = static_cast<int>(prep.mask_labels.size());
            if (bit >= 64) throw ConfigError("more than 64 coverage labels are not supported");
            label_bit[label] = bit;
            prep.mask_labels.push_back(label);
            prep.full_mask |= 1ull << bit;
        }
    }
    for (const auto& [id, cand] : problem.candidates) {
        prep.ids.push_back(id);
        prep.weights.push_back(quantize(cand.sim));
        std::uint64_t mask = 0;
        for (const auto& [label, count] : cand.label_counts) {
            auto it = label_bit.find(label);
            if (it != label_bit.end() && count > 0) mask |= 1ull << it->second;
        }
        prep.masks.push_back(mask);
    }
    return prep;
}

LabelConfidence candidate_confidence(const std::string& id, const SelectionCandidate& cand) {
    LabelConfidence lc;
    lc.example_id = id;
    lc.label_counts = cand.label_counts;
    if (cand.conf) lc.conf = *cand.conf;
    return lc;
}

std::vector<std::uint32_t> filter_eligible(const SelectionProblem& problem,
                                           const Prepared& prep,
                                           const ThresholdTable& thresholds) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i < prep.ids.size(); ++i) {
        const auto& cand = problem.candidates.at(prep.ids[i]);
        if (!cand.conf)
            throw ValidationError("thresholds given but candidate '" + prep.ids[i] +
                                  "' has no confidences");
        if (eligible(candidate_confidence(prep.ids[i], cand), thresholds,
                     problem.threshold_exclude))
            out.push_back(i);
    }
    return out;
}

std::vector<std::uint32_t> all_indices(const Prepared& prep) {
    std::vector<std::uint32_t> out(prep.ids.size());
    for (std::uint32_t i = 0; i < out.size(); ++i) out[i] = i;
    return out;
}

std::string join_labels(const Prepared& prep, std::uint64_t mask) {
    std::string out;
    for (std::size_t bit = 0; bit < prep.mask_labels.size(); ++bit) {
        if (mask & (1ull << bit)) {
            if (!out.empty()) out += ", ";
            out += prep.mask_labels[bit];
        }
    }
    return out;
}

// Coverage labels no eligible candidate holds cannot be satisfied; drop
// them and note the relaxation.
void drop_uncoverable(const Prepared& prep, Attempt& attempt) {
    std::uint64_t coverable = 0;
    for (auto i : attempt.eligible) coverable |= prep.masks[i];
    const std::uint64_t dropped = attempt.required & ~coverable;
    if (dropped) {
        attempt.relaxations.push_back("dropped coverage for labels with no eligible holder: " +
                                      join_labels(prep, dropped));
        attempt.required &= coverable;
    }
}

// The ladder that select() and brute_force_select() share, so both report
// identical feasibility, objectives, and relaxations.
std::vector<Attempt> build_attempts(const SelectionProblem& problem, const Prepared& prep) {
    const bool wants_coverage = problem.mode == SelectionMode::full ||
                                problem.mode == SelectionMode::no_confidence;
    const bool wants_confidence = problem.mode == SelectionMode::full ||
                                  problem.mode == SelectionMode::no_coverage;
    const std::uint64_t base_required = wants_coverage ? prep.full_mask : 0;

    std::vector<Attempt> attempts;
    std::vector<std::string> notes;

    if (wants_confidence && problem.thresholds) {
        Attempt base;
        base.eligible = filter_eligible(problem, prep, *problem.thresholds);
        base.required = base_required;
        drop_uncoverable(prep, base);
        attempts.push_back(std::move(base));

        // Step 2: lower the percentile by 10 at a time and retry.
        std::vector<LabelConfidence> pool;
        for (const auto& [id, cand] : problem.candidates) {
            if (cand.conf) pool.push_back(candidate_confidence(id, cand));
        }
        if (!pool.empty()) {
            for (int step = 1; problem.thresholds->percentile - 10.0 * step > 0.0; ++step) {
                const double p = problem.thresholds->percentile - 10.0 * step;
                Attempt att;
                notes.push_back("lowered confidence percentile to " +
                                std::to_string(static_cast<int>(p)));
                att.relaxations = notes;
                att.eligible = filter_eligible(problem, prep, compute_thresholds(pool, p));
                att.required = base_required;
                drop_uncoverable(prep, att);
                attempts.push_back(std::move(att));
            }
        }
        // Step 3: drop the confidence constraint entirely.
        Attempt last;
        notes.push_back("dropped confidence constraint");
        last.relaxations = notes;
        last.eligible = all_indices(prep);
        last.required = base_required;
        drop_uncoverable(prep, last);
        attempts.push_back(std::move(last));
    } else {
        Attempt only;
        only.eligible = all_indices(prep);
        only.required = base_required;
        if (wants_confidence && !problem.thresholds)
            only.relaxations.push_back("confidence constraint skipped: no probabilities");
        drop_uncoverable(prep, only);
        attempts.push_back(std::move(only));
    }
    return attempts;
}

struct CoreResult {
    bool feasible = false;
    std::int64_t value = 0;
    std::vector<std::uint32_t> chosen;  // ascending indices into Prepared
};

// Unconstrained max-weight k-subset: sort by weight descending, id
// ascending; the boundary tie goes to the smaller ids, which is the
// lexicographically smallest optimal set.
CoreResult solve_top_k(const Prepared& prep, const Attempt& attempt) {
    CoreResult res;
    if (attempt.eligible.size() < prep.k) return res;
    std::vector<std::uint32_t> order = attempt.eligible;
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (prep.weights[a] != prep.weights[b]) return prep.weights[a] > prep.weights[b];
        return a < b;
    });
    order.resize(prep.k);
    std::sort(order.begin(), order.end());
    res.feasible = true;
    res.chosen = std::move(order);
    for (auto i : res.chosen) res.value += prep.weights[i];
    return res;
}

// Remaps the required labels onto a dense bit range so the DP table is as
// small as the instance allows.
struct DenseMask {
    std::vector<std::uint64_t> bit_of;  // sparse bit index -> dense bit, 0 if absent
    std::uint32_t width = 0;

    std::uint32_t densify(std::uint64_t sparse) const {
        std::uint32_t out = 0;
        for (std::uint32_t b = 0; b < bit_of.size(); ++b) {
            if ((sparse >> b) & 1) out |= static_cast<std::uint32_t>(bit_of[b]);
        }
        return out;
    }
};

DenseMask densify_required(std::uint64_t required) {
    DenseMask dm;
    dm.bit_of.assign(64, 0);
    for (std::uint32_t b = 0; b < 64; ++b) {
        if ((required >> b) & 1) dm.bit_of[b] = 1ull << dm.width++;
    }
    return dm;
}

// DP over (chosen count, still-needed coverage mask). Each state stores
// the best quantized value and the lexicographically smallest index set
// achieving it; ties therefore resolve identically to the brute-force
// enumeration.
CoreResult solve_dp(const Prepared& prep, const Attempt& attempt, std::uint64_t required,
                    const DenseMask& dm) {
    const std::size_t k = prep.k;
    const std::size_t n = attempt.eligible.size();
    const std::uint32_t width = dm.width;
    const std::size_t nmask = 1ull << width;
    const std::uint32_t goal = dm.densify(required);

    std::vector<std::int64_t> value((k + 1) * nmask, kNoValue);
    std::vector<std::uint16_t> chosen((k + 1) * nmask * k, 0);
    value[0] = 0;  // c = 0, covered = 0

    auto slot = [&](std::size_t c, std::uint32_t mask) { return c * nmask + mask; };

    for (std::size_t t = 0; t < n; ++t) {
        const std::uint32_t idx = attempt.eligible[t];
        const std::int64_t w = prep.weights[idx];
        const std::uint32_t m = dm.densify(prep.masks[idx] & required);
        // c can be at most t (t candidates seen) and must leave enough
        // candidates to reach k.
        const std::size_t hi = std::min(k - 1, t);
        const std::size_t lo = k >= n - t ? k - (n - t) : 0;
        for (std::size_t c = hi + 1; c-- > lo;) {
            const std::size_t src_base = slot(c, 0);
            const std::size_t dst_level = slot(c + 1, 0);
            for (std::uint32_t mask = 0; mask < nmask; ++mask) {
                const std::int64_t v = value[src_base + mask];
                if (v == kNoValue) continue;
                const std::uint32_t nm = mask | m;
                const std::size_t dst = dst_level + nm;
                const std::int64_t nv = v + w;
                if (nv < value[dst]) continue;
                std::uint16_t* dst_set = chosen.data() + dst * k;
                const std::uint16_t* src_set = chosen.data() + (src_base + mask) * k;
                if (nv == value[dst]) {
                    // Keep the lexicographically smaller index set.
                    bool smaller = false;
                    for (std::size_t j = 0; j < c; ++j) {
                        if (src_set[j] != dst_set[j]) {
                            smaller = src_set[j] < dst_set[j];
                            break;
                        }
                    }
                    if (!smaller) continue;  // equal prefixes: existing set ends with a
                                             // smaller id than t, since t is the largest
                }
                value[dst] = nv;
                std::copy(src_set, src_set + c, dst_set);
                dst_set[c] = static_cast<std::uint16_t>(t);
            }
        }
    }

    CoreResult res;
    const std::size_t final_slot = slot(k, goal);
    if (value[final_slot] == kNoValue) return res;
    res.feasible = true;
    res.value = value[final_slot];
    const std::uint16_t* set = chosen.data() + final_slot * k;
    for (std::size_t j = 0; j < k; ++j) res.chosen.push_back(attempt.eligible[set[j]]);
    return res;
}

// Depth-first branch and bound, take-branch first, in ascending id order:
// subsets are generated in lexicographic order, so keeping only strict
// improvements preserves the lex-smallest optimum under pruning.
class BranchAndBound {
public:
    BranchAndBound(const Prepared& prep, const Attempt& attempt, std::uint64_t required)
        : prep_(prep), elig_(attempt.eligible), required_(required), k_(prep.k) {
        const std::size_t n = elig_.size();
        suffix_union_.assign(n + 1, 0);
        suffix_top_.assign(n + 1, {});
        for (std::size_t i = n; i-- > 0;) {
            suffix_union_[i] = suffix_union_[i + 1] | prep_.masks[elig_[i]];
            auto top = suffix_top_[i + 1];
            top.push_back(prep_.weights[elig_[i]]);
            std::sort(top.begin(), top.end(), std::greater<>());
            if (top.size() > k_) top.resize(k_);
            suffix_top_[i] = std::move(top);
        }
        picked_.reserve(k_);
    }

    CoreResult run() {
        dfs(0, 0, required_);
        CoreResult res;
        if (!found_) return res;
        res.feasible = true;
        res.value = best_value_;
        res.chosen = best_set_;
        return res;
    }

private:
    void dfs(std::size_t i, std::int64_t weight, std::uint64_t needed) {
        if (picked_.size() == k_) {
            if (needed == 0 && (!found_ || weight > best_value_)) {
                found_ = true;
                best_value_ = weight;
                best_set_ = picked_;
            }
            return;
        }
        const std::size_t remaining = elig_.size() - i;
        const std::size_t slots = k_ - picked_.size();
        if (slots > remaining) return;
        if ((needed & ~suffix_union_[i]) != 0) return;
        std::int64_t bound = weight;
        for (std::size_t j = 0; j < slots; ++j) bound += suffix_top_[i][j];
        if (found_ && bound <= best_value_) return;

        picked_.push_back(elig_[i]);
        dfs(i + 1, weight + prep_.weights[elig_[i]], needed & ~prep_.masks[elig_[i]]);
        picked_.pop_back();
        dfs(i + 1, weight, needed);
    }

    const Prepared& prep_;
    const std::vector<std::uint32_t>& elig_;
    std::uint64_t required_;
    std::size_t k_;
    std::vector<std::uint64_t> suffix_union_;
    std::vector<std::vector<std::int64_t>> suffix_top_;
    std::vector<std::uint32_t> picked_;
    bool found_ = false;
    std::int64_t best_value_ = 0;
    std::vector<std::uint32_t> best_set_;
};

CoreResult solve_exact(const Prepared& prep, const Attempt& attempt) {
    if (attempt.eligible.size() < prep.k) return {};

    // Labels that fewer than k eligible candidates lack are covered by
    // every k-subset; dropping them shrinks the mask space and changes
    // nothing.
    std::uint64_t required = attempt.required;
    for (std::size_t bit = 0; bit < prep.mask_labels.size(); ++bit) {
        const std::uint64_t b = 1ull << bit;
        if (!(required & b)) continue;
        std::size_t non_holders = 0;
        for (auto i : attempt.eligible) {
            if (!(prep.masks[i] & b)) ++non_holders;
        }
        if (non_holders < prep.k) required &= ~b;
    }

    if (required == 0) return solve_top_k(prep, attempt);

    const DenseMask dm = densify_required(required);
    const std::size_t nmask = 1ull << dm.width;
    const std::size_t dp_bytes = (prep.k + 1) * nmask * (sizeof(std::int64_t) +
                                                         prep.k * sizeof(std::uint16_t));
    if (dp_bytes <= kDpBudgetBytes) return solve_dp(prep, attempt, required, dm);
    return BranchAndBound(prep, attempt, required).run();
}

CoreResult enumerate_literal(const Prepared& prep, const Attempt& attempt) {
    CoreResult res;
    const std::size_t n = attempt.eligible.size();
    if (n < prep.k) return res;
    std::vector<std::uint32_t> comb(prep.k);
    for (std::size_t i = 0; i < prep.k; ++i) comb[i] = static_cast<std::uint32_t>(i);
    for (;;) {
        std::uint64_t covered = 0;
        std::int64_t weight = 0;
        for (auto c : comb) {
            covered |= prep.masks[attempt.eligible[c]];
            weight += prep.weights[attempt.eligible[c]];
        }
        if ((attempt.required & ~covered) == 0 && (!res.feasible || weight > res.value)) {
            res.feasible = true;
            res.value = weight;
            res.chosen.clear();
            for (auto c : comb) res.chosen.push_back(attempt.eligible[c]);
        }
        // next combination in lexicographic order
        std::size_t i = prep.k;
        bool exhausted = true;
        while (i-- > 0) {
            if (comb[i] < i + n - prep.k) {
                exhausted = false;
                break;
            }
        }
        if (exhausted) return res;
        ++comb[i];
        for (std::size_t j = i + 1; j < prep.k; ++j) comb[j] = comb[j - 1] + 1;
    }
}

SelectionResult finish(const Prepared& prep, const CoreResult& core,
                       std::vector<std::string> relaxations) {
    SelectionResult result;
    for (auto i : core.chosen) result.chosen_ids.push_back(prep.ids[i]);
    std::sort(result.chosen_ids.begin(), result.chosen_ids.end());
    result.objective = static_cast<double>(core.value) * kQuantum;
    result.relaxations = std::move(relaxations);
    return result;
}

SelectionResult solve_random(const Prepared& prep, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::uint32_t> order = all_indices(prep);
    for (std::size_t i = 0; i < prep.k; ++i) {
        const std::size_t j = i + bounded_rand(rng, order.size() - i);
        std::swap(order[i], order[j]);
    }
    CoreResult core;
    core.feasible = true;
    core.chosen.assign(order.begin(), order.begin() + prep.k);
    std::sort(core.chosen.begin(), core.chosen.end());
    for (auto i : core.chosen) core.value += prep.weights[i];
    return finish(prep, core, {});
}

template <typename Core>
SelectionResult solve_with_ladder(const SelectionProblem& problem, const Prepared& prep,
                                  Core core) {
    const auto attempts = build_attempts(problem, prep);
    for (const auto& attempt : attempts) {
        const CoreResult res = core(prep, attempt);
        if (res.feasible) return finish(prep, res, attempt.relaxations);
    }
    throw InfeasibleError("no feasible exemplar subset for query '" + problem.query_id +
                          "' after the relaxation ladder");
}

}  // namespace

SelectionResult select(const SelectionProblem& problem, std::optional<std::uint64_t> seed) {
    const Prepared prep = prepare(problem);
    if (problem.mode == SelectionMode::random) {
        if (!seed) throw ValidationError("random selection mode requires a seed");
        return solve_random(prep, *seed);
    }
    return solve_with_ladder(problem, prep, solve_exact);
}

SelectionResult brute_force_select(const SelectionProblem& problem) {
    if (problem.candidates.size() > 20)
        throw ValidationError("brute_force_select is limited to 20 candidates");
    if (problem.mode == SelectionMode::random)
        throw ValidationError("brute_force_select has no random mode");
    const Prepared prep = prepare(problem);
    return solve_with_ladder(problem, prep, enumerate_literal);
}

}  // namespace ssp

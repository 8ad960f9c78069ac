#include <random>

#include "doctest.h"

#include "selector_fixtures.hpp"
#include "ssp/selector.hpp"

using namespace ssp;

namespace {

SelectionCandidate cand(double sim, std::vector<std::string> labels,
                        std::map<std::string, double> conf = {}) {
    SelectionCandidate c;
    c.sim = sim;
    for (const auto& l : labels) c.label_counts[l] += 1;
    if (!conf.empty()) c.conf = conf;
    return c;
}

}  // namespace

TEST_CASE("coverage constraint overrides pure similarity") {
    // c1..c4: sims .9/.8/.7/.6, label sets {A},{A},{B},{A,B}; similarity
    // alone would take {c1,c2} = 1.7 but that misses B.
    SelectionProblem p;
    p.query_id = "q";
    p.k = 2;
    p.coverage_labels = {"A", "B"};
    p.mode = SelectionMode::full;
    ThresholdTable t;
    t.tau = {{"A", 0.0}, {"B", 0.0}};
    p.thresholds = t;
    p.candidates["c1"] = cand(0.9, {"A"}, {{"A", 1.0}});
    p.candidates["c2"] = cand(0.8, {"A"}, {{"A", 1.0}});
    p.candidates["c3"] = cand(0.7, {"B"}, {{"B", 1.0}});
    p.candidates["c4"] = cand(0.6, {"A", "B"}, {{"A", 1.0}, {"B", 1.0}});

    // brute force over all C(4,2) subsets: {c1,c2}=1.7 misses B, so the
    // best feasible pair is {c1,c3}=1.6
    const auto res = select(p);
    CHECK(res.chosen_ids == std::vector<std::string>{"c1", "c3"});
    CHECK(res.objective == doctest::Approx(1.6).epsilon(1e-9));
    CHECK(res.relaxations.empty());

    SUBCASE("ineligible B-holder forces the joint cover") {
        // with c3 below its threshold, c4 is the only eligible B-holder
        (*p.candidates["c3"].conf)["B"] = 0.0;
        p.thresholds->tau["B"] = 0.5;
        const auto res2 = select(p);
        CHECK(res2.chosen_ids == std::vector<std::string>{"c1", "c4"});
        CHECK(res2.objective == doctest::Approx(1.5).epsilon(1e-9));
    }

    SUBCASE("similarity-only mode takes the top sims") {
        p.mode = SelectionMode::similarity_only;
        const auto res3 = select(p);
        CHECK(res3.chosen_ids == std::vector<std::string>{"c1", "c2"});
        CHECK(res3.objective == doctest::Approx(1.7).epsilon(1e-9));
    }

    SUBCASE("brute force agrees") {
        const auto oracle = brute_force_select(p);
        const auto fast = select(p);
        CHECK(oracle.chosen_ids == fast.chosen_ids);
        CHECK(oracle.objective == fast.objective);
    }
}

TEST_CASE("select with k equal to all eligible candidates takes them all") {
    SelectionProblem p;
    p.query_id = "q";
    p.k = 3;
    p.coverage_labels = {"A", "B"};
    p.mode = SelectionMode::full;
    ThresholdTable t;
    t.tau = {{"A", 0.5}, {"B", 0.5}};
    p.thresholds = t;
    p.candidates["c1"] = cand(0.5, {"A"}, {{"A", 0.9}});
    p.candidates["c2"] = cand(0.4, {"B"}, {{"B", 0.9}});
    p.candidates["c3"] = cand(0.3, {"A"}, {{"A", 0.9}});
    p.candidates["c4"] = cand(0.9, {"A"}, {{"A", 0.1}});  // ineligible
    const auto res = select(p);
    CHECK(res.chosen_ids == std::vector<std::string>{"c1", "c2", "c3"});
    CHECK(res.relaxations.empty());
}

TEST_CASE("single candidate covering everything") {
    SelectionProblem p;
    p.query_id = "q";
    p.k = 1;
    p.coverage_labels = {"A"};
    p.mode = SelectionMode::no_confidence;
    p.candidates["only"] = cand(0.1, {"A"});
    const auto res = brute_force_select(p);
    CHECK(res.chosen_ids == std::vector<std::string>{"only"});
}

TEST_CASE("select never returns the query and validates inputs") {
    SelectionProblem p;
    p.query_id = "q";
    p.k = 1;
    p.mode = SelectionMode::similarity_only;
    p.candidates["q"] = cand(1.0, {});
    CHECK_THROWS_AS(select(p), ValidationError);

    SelectionProblem p2;
    p2.query_id = "q";
    p2.k = 5;
    p2.mode = SelectionMode::similarity_only;
    p2.candidates["a"] = cand(0.5, {});
    CHECK_THROWS_AS(select(p2), InfeasibleError);
}

TEST_CASE("random mode is seeded, uniform-ish, and requires a seed") {
    SelectionProblem p;
    p.query_id = "q";
    p.k = 2;
    p.mode = SelectionMode::random;
    for (int i = 0; i < 6; ++i)
        p.candidates["c" + std::to_string(i)] = cand(i * 0.1, {});

    CHECK_THROWS_AS(select(p), ValidationError);
    const auto a = select(p, 42);
    const auto b = select(p, 42);
    CHECK(a.chosen_ids == b.chosen_ids);
    REQUIRE(a.chosen_ids.size() == 2);

    // different seeds eventually hit different subsets
    bool varied = false;
    for (std::uint64_t s = 0; s < 20 && !varied; ++s)
        varied = select(p, s).chosen_ids != a.chosen_ids;
    CHECK(varied);
}

TEST_CASE("no-probabilities pools skip the confidence constraint with a record") {
    SelectionProblem p;
    p.query_id = "q";
    p.k = 2;
    p.coverage_labels = {"A", "B"};
    p.mode = SelectionMode::full;  // thresholds absent
    p.candidates["c1"] = cand(0.9, {"A"});
    p.candidates["c2"] = cand(0.8, {"A"});
    p.candidates["c3"] = cand(0.2, {"B"});
    const auto res = select(p);
    CHECK(res.chosen_ids == std::vector<std::string>{"c1", "c3"});
    REQUIRE(res.relaxations.size() == 1);
    CHECK(res.relaxations[0].find("no probabilities") != std::string::npos);
}

TEST_CASE("relaxation ladder drops uncoverable labels, then the confidence constraint") {
    SelectionProblem p;
    p.query_id = "q";
    p.k = 2;
    p.coverage_labels = {"A", "Z"};  // nobody holds Z
    p.mode = SelectionMode::no_confidence;
    p.candidates["c1"] = cand(0.9, {"A"});
    p.candidates["c2"] = cand(0.8, {"A"});
    const auto res = select(p);
    CHECK(res.chosen_ids == std::vector<std::string>{"c1", "c2"});
    REQUIRE(res.relaxations.size() == 1);
    CHECK(res.relaxations[0].find("Z") != std::string::npos);

    // ladder end: all candidates ineligible at the base percentile, made
    // feasible only by dropping the confidence constraint entirely
    SelectionProblem p2;
    p2.query_id = "q";
    p2.k = 2;
    p2.mode = SelectionMode::no_coverage;
    ThresholdTable t;
    t.percentile = 80.0;
    t.tau = {{"A", 0.95}};
    p2.thresholds = t;
    p2.candidates["c1"] = cand(0.9, {"A"}, {{"A", 0.9}});
    p2.candidates["c2"] = cand(0.8, {"A"}, {{"A", 0.8}});
    const auto res2 = select(p2);
    CHECK(res2.chosen_ids == std::vector<std::string>{"c1", "c2"});
    CHECK_FALSE(res2.relaxations.empty());

    const auto oracle = brute_force_select(p2);
    CHECK(oracle.chosen_ids == res2.chosen_ids);
    CHECK(oracle.relaxations == res2.relaxations);
}

TEST_CASE("genuinely impossible coverage is an InfeasibleError for both solvers") {
    SelectionProblem p;
    p.query_id = "q";
    p.k = 1;
    p.coverage_labels = {"A", "B"};
    p.mode = SelectionMode::no_confidence;
    p.candidates["c1"] = cand(0.9, {"A"});
    p.candidates["c2"] = cand(0.8, {"B"});
    // k=1 cannot cover both labels; both labels have holders so nothing is dropped
    CHECK_THROWS_AS(select(p), InfeasibleError);
    CHECK_THROWS_AS(brute_force_select(p), InfeasibleError);
}

TEST_CASE("deterministic lexicographic tie-break") {
    SelectionProblem p;
    p.query_id = "q";
    p.k = 2;
    p.mode = SelectionMode::similarity_only;
    p.candidates["b"] = cand(0.5, {});
    p.candidates["a"] = cand(0.5, {});
    p.candidates["c"] = cand(0.5, {});
    const auto res = select(p);
    CHECK(res.chosen_ids == std::vector<std::string>{"a", "b"});
}

TEST_CASE("oracle equivalence on random instances") {
    std::mt19937_64 rng(2024);
    int feasible = 0, relaxed = 0, infeasible = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const SelectionProblem p = test::random_problem(rng);
        SelectionResult fast, slow;
        bool fast_ok = true, slow_ok = true;
        try {
            fast = select(p);
        } catch (const InfeasibleError&) {
            fast_ok = false;
        }
        try {
            slow = brute_force_select(p);
        } catch (const InfeasibleError&) {
            slow_ok = false;
        }
        REQUIRE(fast_ok == slow_ok);
        if (!fast_ok) {
            ++infeasible;
            continue;
        }
        REQUIRE(fast.objective == slow.objective);  // exact, by construction
        REQUIRE(fast.chosen_ids == slow.chosen_ids);
        REQUIRE(fast.relaxations == slow.relaxations);
        fast.relaxations.empty() ? ++feasible : ++relaxed;
    }
    // the generator must exercise all three outcomes
    CHECK(feasible > 20);
    CHECK(relaxed > 20);
    CHECK(infeasible >= 0);
}

TEST_CASE("ablation ordering on feasible instances") {
    std::mt19937_64 rng(77);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        SelectionProblem p = test::random_problem(rng);
        SelectionResult full;
        try {
            full = select(p);
        } catch (const InfeasibleError&) {
            continue;
        }
        if (!full.relaxations.empty()) continue;
        ++checked;

        auto run_mode = [&](SelectionMode m) {
            SelectionProblem q = p;
            q.mode = m;
            return select(q).objective;
        };
        const double no_cov = run_mode(SelectionMode::no_coverage);
        const double no_conf = run_mode(SelectionMode::no_confidence);
        const double sim_only = run_mode(SelectionMode::similarity_only);
        CHECK(full.objective <= no_cov);
        CHECK(no_cov <= sim_only);
        CHECK(full.objective <= no_conf);
        CHECK(no_conf <= sim_only);
    }
    CHECK(checked > 10);
}

TEST_CASE("branch-and-bound fallback agrees with brute force on wide label sets") {
    // 22 coverage labels exceeds the DP mask budget, forcing the B&B path.
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> real(0.0, 1.0);
    std::vector<std::string> labels;
    for (int l = 0; l < 22; ++l) labels.push_back("L" + std::to_string(l));
    for (int trial = 0; trial < 20; ++trial) {
        SelectionProblem p;
        p.query_id = "q";
        p.k = 4;
        p.coverage_labels = labels;
        p.mode = SelectionMode::no_confidence;
        for (int i = 0; i < 12; ++i) {
            std::vector<std::string> held;
            for (const auto& l : labels) {
                if (real(rng) < 0.35) held.push_back(l);
            }
            p.candidates["c" + std::to_string(10 + i)] = cand(real(rng), held);
        }
        SelectionResult fast, slow;
        bool fast_ok = true, slow_ok = true;
        try {
            fast = select(p);
        } catch (const InfeasibleError&) {
            fast_ok = false;
        }
        try {
            slow = brute_force_select(p);
        } catch (const InfeasibleError&) {
            slow_ok = false;
        }
        REQUIRE(fast_ok == slow_ok);
        if (!fast_ok) continue;
        CHECK(fast.objective == slow.objective);
        CHECK(fast.chosen_ids == slow.chosen_ids);
    }
}

TEST_CASE("brute force rejects oversized instances") {
    SelectionProblem p;
    p.query_id = "q";
    p.k = 1;
    p.mode = SelectionMode::similarity_only;
    for (int i = 0; i < 21; ++i) p.candidates["c" + std::to_string(i)] = cand(0.1, {});
    CHECK_THROWS_AS(brute_force_select(p), ValidationError);
}

TEST_CASE("chosen set and objective stay consistent") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const SelectionProblem p = test::random_problem(rng);
        SelectionResult res;
        try {
            res = select(p);
        } catch (const InfeasibleError&) {
            continue;
        }
        CHECK(res.chosen_ids.size() == p.k);
        double sum = 0.0;
        for (const auto& id : res.chosen_ids) {
            CHECK(p.candidates.count(id) == 1);
            sum += p.candidates.at(id).sim;
        }
        CHECK(std::abs(sum - res.objective) < 1e-9);
        CHECK(std::is_sorted(res.chosen_ids.begin(), res.chosen_ids.end()));
    }
}

TEST_CASE("chosen candidates are eligible and coverage labels are covered") {
    std::mt19937_64 rng(123);
    int full_checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        SelectionProblem p = test::random_problem(rng);
        SelectionResult res;
        try {
            res = select(p);
        } catch (const InfeasibleError&) {
            continue;
        }
        if (!res.relaxations.empty()) continue;
        ++full_checked;

        // eligibility: every predicted label of every chosen candidate is
        // at or above its threshold
        for (const auto& id : res.chosen_ids) {
            const auto& cand = p.candidates.at(id);
            for (const auto& [label, count] : cand.label_counts) {
                CHECK(cand.conf->at(label) >= p.thresholds->tau_for(label));
            }
        }
        // coverage: every coverage label appears in some chosen candidate
        for (const auto& label : p.coverage_labels) {
            bool held = false;
            for (const auto& id : res.chosen_ids)
                held = held || p.candidates.at(id).label_counts.count(label);
            CHECK(held);
        }
    }
    CHECK(full_checked > 20);
}

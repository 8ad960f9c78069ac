#include <random>

#include "doctest.h"

#include "ssp/evalkit.hpp"
#include "test_support.hpp"

using namespace ssp;

namespace {

Dataset tiny_ner() {
    Dataset d{test::ner_task(), {}};
    d.examples.push_back(test::seq_example("0", {"John", "Smith", "slept"},
                                           {"B-PER", "I-PER", "O"}));
    d.examples.push_back(test::seq_example("1", {"in", "Paris"}, {"O", "B-LOC"}));
    return d;
}

}  // namespace

TEST_CASE("perfect predictions score 1.0 everywhere") {
    const Dataset d = tiny_ner();
    std::vector<Prediction> preds;
    for (const auto& ex : d.examples) preds.push_back({ex.id, *ex.gold_labels, std::nullopt});
    const EvalReport r = score(d, preds, d.task);
    CHECK(r.micro_f1 == doctest::Approx(1.0));
    CHECK(r.accuracy == doctest::Approx(1.0));
    CHECK(r.span_f1 == doctest::Approx(1.0));
    CHECK(r.has_span_f1);
}

TEST_CASE("all-default predictions against non-default golds score 0") {
    Dataset d{test::ner_task(), {}};
    d.examples.push_back(test::seq_example("0", {"a", "b"}, {"B-PER", "B-LOC"}));
    std::vector<Prediction> preds{{"0", {"O", "O"}, std::nullopt}};
    const EvalReport r = score(d, preds, d.task);
    CHECK(r.micro_f1 == doctest::Approx(0.0));
    CHECK(r.accuracy == doctest::Approx(0.0));
}

TEST_CASE("hand-computed span and token F1") {
    Dataset d{test::ner_task(), {}};
    d.examples.push_back(test::seq_example("0", {"a", "b", "c"}, {"B-PER", "I-PER", "O"}));
    std::vector<Prediction> preds{{"0", {"B-PER", "O", "O"}, std::nullopt}};
    const EvalReport r = score(d, preds, d.task);
    CHECK(r.span_f1 == doctest::Approx(0.0));
    // P = 1/1, R = 1/2 -> F1 = 2/3
    CHECK(r.micro_f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("POS headline micro equals accuracy over all positions") {
    Dataset d{test::pos_task(), {}};
    d.examples.push_back(test::seq_example("0", {"a", "b", "c", "d"},
                                           {"DET", "NOUN", "VERB", "X"}));
    std::vector<Prediction> preds{{"0", {"DET", "NOUN", "X", "X"}, std::nullopt}};
    const EvalReport r = score(d, preds, d.task);
    CHECK(r.micro_f1 == doctest::Approx(0.75));
    CHECK(r.micro_f1 == doctest::Approx(r.accuracy));
    CHECK_FALSE(r.has_span_f1);
}

TEST_CASE("NLI accuracy and macro F1") {
    Dataset d{test::nli_task(), {}};
    for (int i = 0; i < 3; ++i) {
        Example ex;
        ex.id = std::to_string(i);
        ex.premise = "p";
        ex.hypothesis = "h";
        ex.gold_labels = std::vector<std::string>{d.task.labels[i]};
        d.examples.push_back(ex);
    }
    std::vector<Prediction> preds{{"0", {"entailment"}, std::nullopt},
                                  {"1", {"entailment"}, std::nullopt},
                                  {"2", {"neutral"}, std::nullopt}};
    const EvalReport r = score(d, preds, d.task);
    CHECK(r.accuracy == doctest::Approx(2.0 / 3.0));
    CHECK(r.micro_f1 == doctest::Approx(r.accuracy));
    // entailment: P=.5 R=1 F=2/3; contradiction: 0; neutral: P=1 R=1 F=1
    CHECK(r.macro_f1 == doctest::Approx((2.0 / 3.0 + 0.0 + 1.0) / 3.0).epsilon(1e-12));
}

TEST_CASE("per-label F1 is the harmonic mean of its P and R") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> lab(0, 4);
    Dataset d{test::pos_task(), {}};
    std::vector<Prediction> preds;
    for (int e = 0; e < 20; ++e) {
        std::vector<std::string> gold, pred;
        for (int i = 0; i < 7; ++i) {
            gold.push_back(d.task.labels[lab(rng)]);
            pred.push_back(d.task.labels[lab(rng)]);
        }
        d.examples.push_back(test::seq_example(std::to_string(e), std::vector<std::string>(7, "w"),
                                               gold));
        preds.push_back({std::to_string(e), pred, std::nullopt});
    }
    const EvalReport r = score(d, preds, d.task);
    for (const auto& [label, s] : r.per_label) {
        if (s.precision + s.recall > 0)
            CHECK(s.f1 ==
                  doctest::Approx(2 * s.precision * s.recall / (s.precision + s.recall))
                      .epsilon(1e-12));
        else
            CHECK(s.f1 == 0.0);
    }
    // confusion row sums equal gold label counts
    for (const auto& label : d.task.labels) {
        long row = 0;
        for (const auto& [_, count] : r.confusion.at(label)) row += count;
        CHECK(row == r.per_label.at(label).gold_count);
    }
}

namespace {

// quadratic reference: every maximal same-type B/I run, by scanning all
// (start, end) pairs
std::vector<Span> spans_quadratic(const std::vector<std::string>& labels) {
    std::vector<Span> out;
    const auto n = labels.size();
    auto tagged = [&](std::size_t i) {
        return labels[i].rfind("B-", 0) == 0 || labels[i].rfind("I-", 0) == 0;
    };
    auto type_of = [&](std::size_t i) { return labels[i].substr(2); };
    for (std::size_t s = 0; s < n; ++s) {
        if (!tagged(s)) continue;
        const bool starts = labels[s][0] == 'B' || s == 0 || !tagged(s - 1) ||
                            type_of(s - 1) != type_of(s);
        if (!starts) continue;
        std::size_t e = s + 1;
        while (e < n && labels[e].rfind("I-", 0) == 0 && type_of(e) == type_of(s)) ++e;
        out.push_back({s, e, type_of(s)});
    }
    return out;
}

}  // namespace

TEST_CASE("span extraction equals the quadratic reference on random BIO strings") {
    std::mt19937_64 rng(17);
    const std::vector<std::string> tags = {"O",     "B-PER", "I-PER", "B-LOC",
                                           "I-LOC", "B-ORG", "I-ORG"};
    std::uniform_int_distribution<int> pick(0, static_cast<int>(tags.size()) - 1);
    std::uniform_int_distribution<int> len(0, 15);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<std::string> labels;
        const int n = len(rng);
        for (int i = 0; i < n; ++i) labels.push_back(tags[pick(rng)]);
        CHECK(extract_spans(labels) == spans_quadratic(labels));
    }
}

TEST_CASE("span concatenation reproduces the B-/I- runs") {
    const std::vector<std::string> labels = {"B-PER", "I-PER", "O",     "I-LOC",
                                             "I-LOC", "B-LOC", "I-PER", "O"};
    const auto spans = extract_spans(labels);
    // every tagged position is inside exactly one span
    std::vector<int> covered(labels.size(), 0);
    for (const auto& s : spans) {
        for (std::size_t i = s.begin; i < s.end; ++i) ++covered[i];
    }
    for (std::size_t i = 0; i < labels.size(); ++i)
        CHECK(covered[i] == (labels[i] == "O" ? 0 : 1));
}

TEST_CASE("exemplar precision counts agreement over exemplar positions") {
    Dataset d = tiny_ner();
    std::map<std::string, Prediction> stage1;
    stage1["0"] = {"0", {"B-PER", "I-PER", "O"}, std::nullopt};  // matches gold
    stage1["1"] = {"1", {"O", "B-LOC"}, std::nullopt};           // matches gold
    std::vector<SelectionEvent> events{{"q1", {"0", "1"}}, {"q2", {"0"}}};

    const auto noise_free = exemplar_precision(events, stage1, d);
    for (const auto& [label, precision] : noise_free.per_label)
        CHECK(precision == doctest::Approx(1.0));

    // flip every shown label somewhere wrong
    stage1["0"].labels = {"O", "B-LOC", "B-PER"};
    stage1["1"].labels = {"B-PER", "O"};
    const auto flipped = exemplar_precision(events, stage1, d);
    for (const auto& [label, precision] : flipped.per_label)
        CHECK(precision == doctest::Approx(0.0));
}

TEST_CASE("exemplar precision: one error in four A-positions gives 0.75") {
    TaskSpec task = test::pos_task({"A", "B"});
    task.default_label = "A";
    Dataset d{task, {}};
    d.examples.push_back(test::seq_example("0", {"w", "w"}, {"A", "A"}));
    d.examples.push_back(test::seq_example("1", {"w", "w"}, {"A", "B"}));
    std::map<std::string, Prediction> stage1;
    stage1["0"] = {"0", {"A", "A"}, std::nullopt};
    stage1["1"] = {"1", {"A", "A"}, std::nullopt};  // second A shown over gold B
    std::vector<SelectionEvent> events{{"q", {"0", "1"}}};
    const auto p = exemplar_precision(events, stage1, d);
    CHECK(p.positions.at("A") == 4);
    CHECK(p.per_label.at("A") == doctest::Approx(0.75));
}

TEST_CASE("confusion_diff") {
    Dataset d{test::pos_task({"A", "B"}), {}};
    d.task.default_label = "A";
    d.task.coverage_labels = d.task.labels;
    d.examples.push_back(test::seq_example("0", {"w", "w", "w"}, {"A", "A", "B"}));
    std::vector<Prediction> p1{{"0", {"A", "B", "B"}, std::nullopt}};
    std::vector<Prediction> p2{{"0", {"A", "A", "A"}, std::nullopt}};
    const EvalReport r1 = score(d, p1, d.task);
    const EvalReport r2 = score(d, p2, d.task);

    const auto zero = confusion_diff(r1, r1);
    for (const auto& [g, row] : zero) {
        for (const auto& [p, v] : row) CHECK(v == 0);
    }

    const auto diff = confusion_diff(r1, r2);
    // r1 confusion: A->A 1, A->B 1, B->B 1; r2: A->A 2, B->A 1
    CHECK(diff.at("A").at("A") == -1);
    CHECK(diff.at("A").at("B") == 1);
    CHECK(diff.at("B").at("B") == 1);
    CHECK(diff.at("B").at("A") == -1);

    EvalReport other = r1;
    other.labels = {"A"};
    CHECK_THROWS_AS(confusion_diff(r1, other), ValidationError);
}

TEST_CASE("score validates alignment") {
    Dataset d = tiny_ner();
    std::vector<Prediction> too_few{{"0", {"O", "O", "O"}, std::nullopt}};
    CHECK_THROWS_AS(score(d, too_few, d.task), ValidationError);
    std::vector<Prediction> wrong_len{{"0", {"O"}, std::nullopt},
                                      {"1", {"O", "O"}, std::nullopt}};
    CHECK_THROWS_AS(score(d, wrong_len, d.task), ValidationError);
}

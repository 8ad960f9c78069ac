#include "doctest.h"

#include "ssp/corpus.hpp"
#include "test_support.hpp"

using namespace ssp;

TEST_CASE("parse_conll smallest well-formed input") {
    TaskSpec task = test::pos_task({"DET", "NOUN"});
    const Dataset d = parse_conll("a\tDET\n\nb\tNOUN", task);
    REQUIRE(d.examples.size() == 2);
    CHECK(d.examples[0].tokens == std::vector<std::string>{"a"});
    CHECK(d.examples[1].tokens == std::vector<std::string>{"b"});
    CHECK(d.examples[0].id == "0");
    CHECK(d.examples[1].id == "1");
    CHECK(*d.examples[0].gold_labels == std::vector<std::string>{"DET"});
}

TEST_CASE("parse_conll unlabelled block") {
    const Dataset d = parse_conll("a\nb", test::pos_task());
    REQUIRE(d.examples.size() == 1);
    CHECK(d.examples[0].tokens == std::vector<std::string>{"a", "b"});
    CHECK_FALSE(d.examples[0].gold_labels.has_value());
}

TEST_CASE("parse_conll unknown tag is a validation error naming the tag") {
    try {
        parse_conll("a\tFOO", test::pos_task());
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("FOO") != std::string::npos);
    }
}

TEST_CASE("parse_conll malformed line reports the line number") {
    try {
        parse_conll("a\tDET\nb\tDET\tX", test::pos_task());
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("parse_conll id directive and blank line with trailing spaces") {
    const Dataset d = parse_conll("# id = s7\na\tDET\n   \nb\tNOUN", test::pos_task());
    REQUIRE(d.examples.size() == 2);
    CHECK(d.examples[0].id == "s7");
    CHECK(d.examples[1].id == "1");
}

TEST_CASE("parse_conll rejects mixed tagged/untagged blocks") {
    CHECK_THROWS_AS(parse_conll("a\tDET\nb", test::pos_task()), ParseError);
    CHECK_THROWS_AS(parse_conll("a\nb\tDET", test::pos_task()), ParseError);
}

TEST_CASE("conll write/parse round-trip") {
    TaskSpec task = test::ner_task();
    const std::string text =
        "John\tB-PER\nsmiles\tO\n\n# id = x1\nParis\tB-LOC\n\nun\nlabelled";
    const Dataset d = parse_conll(text, task);
    const Dataset d2 = parse_conll(write_conll(d), task);
    REQUIRE(d2.examples.size() == d.examples.size());
    for (std::size_t i = 0; i < d.examples.size(); ++i) {
        CHECK(d2.examples[i].id == d.examples[i].id);
        CHECK(d2.examples[i].tokens == d.examples[i].tokens);
        CHECK(d2.examples[i].gold_labels == d.examples[i].gold_labels);
    }
}

TEST_CASE("parse_nli_jsonl basics") {
    TaskSpec task = test::nli_task();
    const Dataset d = parse_nli_jsonl(
        R"({"premise":"p1","hypothesis":"h1","label":"neutral"})"
        "\n"
        R"({"premise":"p2","hypothesis":"h2"})",
        task);
    REQUIRE(d.examples.size() == 2);
    CHECK(*d.examples[0].gold_labels == std::vector<std::string>{"neutral"});
    CHECK_FALSE(d.examples[1].gold_labels.has_value());
    CHECK(d.examples[1].id == "1");

    CHECK_THROWS_AS(parse_nli_jsonl(R"({"premise":"p"})", task), ParseError);
    CHECK_THROWS_AS(
        parse_nli_jsonl(R"({"premise":"p","hypothesis":"h","label":"maybe"})", task),
        ValidationError);
}

TEST_CASE("nli write/parse round-trip") {
    TaskSpec task = test::nli_task();
    const std::string text =
        R"({"id":"a","premise":"p1","hypothesis":"h1","label":"entailment"})"
        "\n"
        R"({"id":"b","premise":"p2","hypothesis":"h2"})";
    const Dataset d = parse_nli_jsonl(text, task);
    const Dataset d2 = parse_nli_jsonl(write_nli_jsonl(d), task);
    REQUIRE(d2.examples.size() == 2);
    CHECK(d2.examples[0].premise == "p1");
    CHECK(d2.examples[1].gold_labels == d.examples[1].gold_labels);
}

TEST_CASE("write_predictions round-trips and orders by dataset") {
    TaskSpec task = test::pos_task();
    const Dataset d = parse_conll("a\nb\n\nc", task);
    std::vector<Prediction> preds;
    preds.push_back({"1", {"NOUN"}, std::nullopt});  // reversed order on purpose
    preds.push_back({"0", {"DET", "VERB"}, std::vector<double>{0.5, 0.25}});

    const std::string text = write_predictions(d, preds);
    const auto lines_first = text.substr(0, text.find('\n'));
    CHECK(lines_first.find("\"0\"") != std::string::npos);

    const auto back = read_predictions(text);
    REQUIRE(back.size() == 2);
    CHECK(back[0].example_id == "0");
    CHECK(back[0].labels == std::vector<std::string>{"DET", "VERB"});
    REQUIRE(back[0].probs.has_value());
    CHECK((*back[0].probs)[1] == 0.25);
    CHECK_FALSE(back[1].probs.has_value());

    // probs omitted => no "probs" key on that line
    CHECK(text.find("probs") != std::string::npos);
    const auto second_line = text.substr(text.find('\n') + 1);
    CHECK(second_line.find("probs") == std::string::npos);
}

TEST_CASE("write_predictions with zero examples yields an empty file") {
    TaskSpec task = test::pos_task();
    Dataset d{task, {}};
    CHECK(write_predictions(d, {}).empty());
}

TEST_CASE("write_predictions names the missing id") {
    TaskSpec task = test::pos_task();
    const Dataset d = parse_conll("a", task);
    try {
        write_predictions(d, {});
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("0") != std::string::npos);
    }
}

TEST_CASE("prediction probs round-trip bit-exactly") {
    TaskSpec task = test::pos_task();
    const Dataset d = parse_conll("a\nb\nc", task);
    const std::vector<double> probs = {0.1, 1.0 / 3.0, 0.9999999999999999};
    std::vector<Prediction> preds{{"0", {"DET", "NOUN", "VERB"}, probs}};
    const auto back = read_predictions(write_predictions(d, preds));
    REQUIRE(back[0].probs.has_value());
    for (std::size_t i = 0; i < probs.size(); ++i) CHECK((*back[0].probs)[i] == probs[i]);
}

TEST_CASE("TaskSpec invariants") {
    TaskSpec task = test::pos_task();
    task.default_label = "ZZZ";
    CHECK_THROWS_AS(task.validate(), ValidationError);
    task = test::pos_task();
    task.labels.push_back("DET");
    CHECK_THROWS_AS(task.validate(), ValidationError);
    task = test::pos_task();
    task.coverage_labels = {"NOPE"};
    CHECK_THROWS_AS(task.validate(), ValidationError);
}

TEST_CASE("duplicate example ids are rejected") {
    CHECK_THROWS_AS(parse_conll("# id = same\na\tDET\n\n# id = same\nb\tDET",
                                test::pos_task()),
                    ValidationError);
}

TEST_CASE("read_predictions rejects out-of-range probabilities") {
    CHECK_THROWS_AS(read_predictions(R"({"id":"0","labels":["A"],"probs":[1.5]})"),
                    ValidationError);
    CHECK_THROWS_AS(read_predictions(R"({"id":"0","labels":["A"],"probs":[-0.1]})"),
                    ValidationError);
    CHECK(read_predictions(R"({"id":"0","labels":["A"],"probs":[0.0]})")[0]
              .probs->front() == 0.0);
}

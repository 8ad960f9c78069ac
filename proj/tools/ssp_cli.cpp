#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ssp/corpus.hpp"
#include "ssp/embedding.hpp"
#include "ssp/evalkit.hpp"
#include "ssp/gateway.hpp"
#include "ssp/pipeline.hpp"
#include "ssp/prompt.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ssp::ConfigError("unknown config key '" + key + "' in " + where);
    }
}

ssp::TaskSpec parse_task(const json& t) {
    reject_unknown_keys(t, {"kind", "labels", "default_label", "coverage_labels",
                            "template_id", "language"}, "task");
    ssp::TaskSpec task;
    task.kind = ssp::task_kind_from_string(t.at("kind").get<std::string>());
    task.labels = t.at("labels").get<std::vector<std::string>>();
    task.default_label = t.at("default_label").get<std::string>();
    task.coverage_labels = t.contains("coverage_labels")
                               ? t.at("coverage_labels").get<std::vector<std::string>>()
                               : task.labels;
    task.template_id = t.at("template_id").get<std::string>();
    task.language = t.value("language", std::string());
    task.validate();
    return task;
}

void apply_override(json& cfg, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
        throw ssp::ConfigError("--set expects key=value, got: " + kv);
    const std::string dotted = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);

    json* node = &cfg;
    std::size_t start = 0;
    for (;;) {
        const auto dot = dotted.find('.', start);
        const std::string key = dotted.substr(start, dot - start);
        if (key.empty()) throw ssp::ConfigError("bad --set key: " + dotted);
        if (dot == std::string::npos) {
            json parsed;
            try {
                parsed = json::parse(value);
            } catch (const json::parse_error&) {
                parsed = value;  // bare strings need no quotes
            }
            (*node)[key] = parsed;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

struct Paths {
    std::string target;
    std::string source;
    std::string target_embeddings;
    std::string source_embeddings;
    std::string stage1_predictions;
};

struct App {
    json cfg;
    ssp::TaskSpec task;
    ssp::RunConfig run;
    Paths paths;
    ssp::LlmParams stage2_llm;
    ssp::LlmParams stage1_llm;
    ssp::EmbeddingClientConfig embed;
    std::string stage1_mode = "import";  // icl | import | gold
    std::vector<double> noise_rates;
    std::string out_dir;
    std::string cache_dir;
    std::string mock;
    std::string mock_fixtures;
    bool verbose = false;
};

std::string env_or_empty(const std::string& name) {
    if (name.empty()) return "";
    const char* v = std::getenv(name.c_str());
    return v ? v : "";
}

ssp::LlmParams parse_llm(const json& node, const ssp::TaskSpec& task,
                         const std::string& where) {
    reject_unknown_keys(node, {"model", "endpoint", "path", "temperature", "max_tokens",
                               "timeout_ms", "max_retries", "backoff_ms", "max_inflight",
                               "api_key_env"}, where);
    ssp::LlmParams p;
    p.model = node.value("model", std::string("gpt-4"));
    p.endpoint = node.value("endpoint", std::string());
    p.path = node.value("path", std::string("/v1/chat/completions"));
    p.temperature = node.value("temperature", 0.0);
    const int default_max_tokens =
        task.kind == ssp::TaskKind::pair_classification ? 15 : 1024;
    p.max_tokens = node.value("max_tokens", default_max_tokens);
    p.timeout_ms = node.value("timeout_ms", 60000);
    p.max_retries = node.value("max_retries", 3);
    p.backoff_ms = node.value("backoff_ms", 250);
    p.max_inflight = node.value("max_inflight", 4);
    p.api_key = env_or_empty(node.value("api_key_env", std::string("OPENAI_API_KEY")));
    p.validate();
    return p;
}

App build_app(const json& cfg) {
    reject_unknown_keys(cfg, {"task", "k", "percentile", "selector_mode", "stage1_mode",
                              "seed", "parallel", "threshold_exclude_labels", "noise_rates",
                              "paths", "llm", "stage1_llm", "embedding"}, "config root");
    App app;
    app.cfg = cfg;
    app.task = parse_task(cfg.at("task"));

    app.run.task = app.task;
    app.run.k = cfg.value("k", 8u);
    app.run.percentile = cfg.value("percentile", 80.0);
    app.run.selector_mode =
        ssp::selection_mode_from_string(cfg.value("selector_mode", std::string("full")));
    app.run.seed = cfg.value("seed", 0ull);
    app.run.parallel = cfg.value("parallel", 1);
    if (cfg.contains("threshold_exclude_labels")) {
        for (const auto& l : cfg.at("threshold_exclude_labels"))
            app.run.threshold_exclude.insert(l.get<std::string>());
    }
    if (app.run.k == 0) throw ssp::ConfigError("k must be >= 1");

    app.stage1_mode = cfg.value("stage1_mode", std::string("import"));
    if (app.stage1_mode != "icl" && app.stage1_mode != "import" && app.stage1_mode != "gold")
        throw ssp::ConfigError("stage1_mode must be icl, import, or gold");

    if (cfg.contains("noise_rates"))
        app.noise_rates = cfg.at("noise_rates").get<std::vector<double>>();

    if (cfg.contains("paths")) {
        const json& p = cfg.at("paths");
        reject_unknown_keys(p, {"target", "source", "target_embeddings", "source_embeddings",
                                "stage1_predictions"}, "paths");
        app.paths.target = p.value("target", std::string());
        app.paths.source = p.value("source", std::string());
        app.paths.target_embeddings = p.value("target_embeddings", std::string());
        app.paths.source_embeddings = p.value("source_embeddings", std::string());
        app.paths.stage1_predictions = p.value("stage1_predictions", std::string());
    }

    const json llm_node = cfg.value("llm", json::object());
    app.stage2_llm = parse_llm(llm_node, app.task, "llm");
    if (cfg.contains("stage1_llm")) {
        json merged = llm_node;
        merged.update(cfg.at("stage1_llm"));
        app.stage1_llm = parse_llm(merged, app.task, "stage1_llm");
    } else {
        app.stage1_llm = app.stage2_llm;
    }

    if (cfg.contains("embedding")) {
        const json& e = cfg.at("embedding");
        reject_unknown_keys(e, {"model", "endpoint", "path", "batch_size", "timeout_ms",
                                "max_retries", "backoff_ms", "max_parallel", "api_key_env"},
                            "embedding");
        app.embed.model = e.value("model", std::string("text-embedding-ada-002"));
        app.embed.base_url = e.value("endpoint", std::string());
        app.embed.path = e.value("path", std::string("/v1/embeddings"));
        app.embed.batch_size = e.value("batch_size", 64u);
        app.embed.timeout_ms = e.value("timeout_ms", 30000);
        app.embed.max_retries = e.value("max_retries", 3);
        app.embed.backoff_ms = e.value("backoff_ms", 250);
        app.embed.max_parallel = e.value("max_parallel", 4);
        app.embed.api_key = env_or_empty(e.value("api_key_env", std::string("OPENAI_API_KEY")));
    }
    return app;
}

ssp::Dataset load_dataset(const App& app, const std::string& path, const std::string& what) {
    if (path.empty()) throw ssp::ConfigError("paths." + what + " is not set in the config");
    if (!fs::exists(path)) throw ssp::ConfigError(what + " dataset not found: " + path);
    const std::string text = ssp::read_text_file(path);
    return app.task.kind == ssp::TaskKind::pair_classification
               ? ssp::parse_nli_jsonl(text, app.task)
               : ssp::parse_conll(text, app.task);
}

ssp::EmbeddingStore load_store(const std::string& path, const std::string& what) {
    if (path.empty())
        throw ssp::ConfigError("paths." + what + " is not set in the config");
    if (!fs::exists(path))
        throw ssp::ConfigError("embeddings file not found: " + path +
                               " (run the embed subcommand first)");
    return ssp::EmbeddingStore::load_file(path);
}

std::shared_ptr<ssp::LlmBackend> make_backend(const App& app, const ssp::Dataset& target) {
    if (app.mock.empty()) return ssp::live_backend();
    ssp::MockContext ctx;
    ctx.dataset = &target;
    if (!app.mock_fixtures.empty()) {
        const json fixtures = json::parse(ssp::read_text_file(app.mock_fixtures));
        for (const auto& [hash, response] : fixtures.items())
            ctx.scripted[hash] = response.get<std::string>();
    }
    return ssp::mock_backend(ssp::mock_kind_from_string(app.mock), std::move(ctx));
}

void ensure_out_dir(App& app) {
    if (app.out_dir.empty()) throw ssp::ConfigError("--out <run-dir> is required");
    fs::create_directories(app.out_dir);
    if (app.cache_dir.empty()) app.cache_dir = (fs::path(app.out_dir) / "cache").string();
}

std::string out_path(const App& app, const std::string& name) {
    return (fs::path(app.out_dir) / name).string();
}

void write_snapshot(const App& app, const std::vector<std::string>& argv_sets) {
    json snap;
    snap["config"] = app.cfg;
    snap["overrides"] = argv_sets;
    snap["mock"] = app.mock;
    snap["dry_run"] = app.run.dry_run;
    snap["cache_dir"] = app.cache_dir;
    ssp::write_text_file(out_path(app, "config.snapshot.json"), snap.dump(2) + "\n");
}

void write_summary(const App& app, const std::string& stage, const ssp::StageResult& result,
                   const ssp::LlmClient* client) {
    json j;
    j["stage"] = stage;
    j["failed_ids"] = result.failed_ids;
    j["repaired_positions"] = result.repaired_positions;
    if (client) {
        j["cache_hits"] = client->cache_hits();
        j["requests_made"] = client->requests_made();
    }
    ssp::write_text_file(out_path(app, "run_summary.json"), j.dump(2) + "\n");
    if (app.verbose) {
        std::cerr << stage << ": " << result.failed_ids.size() << " failed, "
                  << result.repaired_positions << " repaired positions";
        if (client)
            std::cerr << ", " << client->cache_hits() << " cache hits, "
                      << client->requests_made() << " requests";
        std::cerr << "\n";
        std::size_t relaxed = 0;
        for (const auto& entry : result.trace) relaxed += !entry.relaxations.empty();
        if (!result.trace.empty())
            std::cerr << stage << ": " << relaxed << "/" << result.trace.size()
                      << " selections needed relaxations\n";
    }
}

void write_prompts(const App& app, const ssp::StageResult& result) {
    std::string out;
    for (const auto& [id, prompt] : result.prompts) {
        json obj;
        obj["id"] = id;
        obj["prompt"] = prompt;
        out += obj.dump();
        out += "\n";
    }
    ssp::write_text_file(out_path(app, "prompts.jsonl"), out);
}

std::vector<ssp::EmbeddingInput> embedding_inputs(const ssp::Dataset& dataset) {
    std::vector<ssp::EmbeddingInput> inputs;
    for (const auto& ex : dataset.examples)
        inputs.push_back({ex.id, ssp::embedding_text(dataset.task, ex)});
    return inputs;
}

int cmd_embed(App& app, const std::string& split) {
    const bool is_source = split == "source";
    const ssp::Dataset dataset =
        load_dataset(app, is_source ? app.paths.source : app.paths.target, split);
    ssp::EmbeddingClientConfig cfg = app.embed;
    cfg.persist_path = is_source ? app.paths.source_embeddings : app.paths.target_embeddings;
    if (cfg.persist_path.empty())
        throw ssp::ConfigError("paths." + split + "_embeddings is not set in the config");
    const auto store = ssp::fetch_embeddings(cfg, embedding_inputs(dataset));
    std::cout << "embedded " << store.size() << " " << split << " examples (dim "
              << store.dim() << ") -> " << cfg.persist_path << "\n";
    return 0;
}

ssp::ExemplarPool load_pool(const App& app, const ssp::Dataset& target,
                            const ssp::EmbeddingStore* store) {
    if (app.stage1_mode == "gold") return ssp::build_gold_pool(target, store);
    if (app.paths.stage1_predictions.empty())
        throw ssp::ConfigError("paths.stage1_predictions is not set in the config");
    if (!fs::exists(app.paths.stage1_predictions))
        throw ssp::ConfigError("stage1 predictions not found: " + app.paths.stage1_predictions);
    const auto preds = ssp::read_predictions_file(app.paths.stage1_predictions);
    return ssp::import_stage1(preds, target, store);
}

int cmd_stage1(App& app) {
    const ssp::Dataset target = load_dataset(app, app.paths.target, "target");
    const ssp::Dataset source = load_dataset(app, app.paths.source, "source");
    const auto tgt_store = load_store(app.paths.target_embeddings, "target_embeddings");
    const auto src_store = load_store(app.paths.source_embeddings, "source_embeddings");
    ssp::LlmClient client(app.stage1_llm, make_backend(app, target), app.cache_dir);
    const auto result =
        ssp::run_stage1_icl(target, source, tgt_store, src_store, client, app.run);
    if (app.run.dry_run) {
        write_prompts(app, result);
        std::cout << "dry run: " << result.prompts.size() << " prompts rendered\n";
        return 0;
    }
    ssp::write_predictions_file(target, result.predictions, out_path(app, "stage1.preds.jsonl"));
    write_summary(app, "stage1", result, &client);
    std::cout << "stage1: " << result.predictions.size() << " predictions, "
              << result.failed_ids.size() << " failed\n";
    return 0;
}

int cmd_import_stage1(App& app) {
    const ssp::Dataset target = load_dataset(app, app.paths.target, "target");
    if (app.paths.stage1_predictions.empty())
        throw ssp::ConfigError("paths.stage1_predictions is not set in the config");
    const auto preds = ssp::read_predictions_file(app.paths.stage1_predictions);
    const auto pool = ssp::import_stage1(preds, target, nullptr);
    ssp::write_predictions_file(target, preds, out_path(app, "stage1.preds.jsonl"));
    if (pool.confidences) {
        std::vector<ssp::LabelConfidence> confs;
        for (const auto& ex : target.examples) confs.push_back(pool.confidences->at(ex.id));
        ssp::write_text_file(out_path(app, "confidences.jsonl"),
                             ssp::confidences_to_jsonl(confs));
    }
    std::cout << "imported " << preds.size() << " predictions"
              << (pool.confidences ? " with confidences" : " without confidences") << "\n";
    return 0;
}

int cmd_select(App& app) {
    const ssp::Dataset target = load_dataset(app, app.paths.target, "target");
    const auto store = load_store(app.paths.target_embeddings, "target_embeddings");
    const auto pool = load_pool(app, target, &store);
    const auto trace = ssp::select_exemplars(pool, app.run);
    ssp::write_text_file(out_path(app, "selection_trace.jsonl"), ssp::trace_to_jsonl(trace));
    std::cout << "selected exemplars for " << trace.size() << " queries\n";
    return 0;
}

int cmd_stage2(App& app) {
    const ssp::Dataset target = load_dataset(app, app.paths.target, "target");
    const auto tgt_store = load_store(app.paths.target_embeddings, "target_embeddings");

    ssp::ExemplarPool pool;
    std::vector<ssp::Prediction> stage1_preds;
    if (app.stage1_mode == "icl") {
        const ssp::Dataset source = load_dataset(app, app.paths.source, "source");
        const auto src_store = load_store(app.paths.source_embeddings, "source_embeddings");
        ssp::LlmClient stage1_client(app.stage1_llm, make_backend(app, target), app.cache_dir);
        auto stage1 =
            ssp::run_stage1_icl(target, source, tgt_store, src_store, stage1_client, app.run);
        if (app.run.dry_run)
            throw ssp::ConfigError("--dry-run with stage1_mode=icl: run stage1 first, then "
                                   "use stage1_mode=import");
        stage1_preds = std::move(stage1.predictions);
        ssp::write_predictions_file(target, stage1_preds, out_path(app, "stage1.preds.jsonl"));
        pool = ssp::pool_from_stage1(target, stage1_preds, &tgt_store);
    } else {
        pool = load_pool(app, target, &tgt_store);
    }

    ssp::LlmClient client(app.stage2_llm, make_backend(app, target), app.cache_dir);
    const auto result = ssp::run_stage2_ssp(pool, client, app.run);
    ssp::write_text_file(out_path(app, "selection_trace.jsonl"),
                         ssp::trace_to_jsonl(result.trace));
    if (app.run.dry_run) {
        write_prompts(app, result);
        std::cout << "dry run: " << result.prompts.size() << " prompts rendered\n";
        return 0;
    }
    ssp::write_predictions_file(target, result.predictions, out_path(app, "stage2.preds.jsonl"));
    write_summary(app, "stage2", result, &client);
    std::cout << "stage2: " << result.predictions.size() << " predictions, "
              << result.failed_ids.size() << " failed\n";
    return 0;
}

int cmd_eval(App& app, const std::string& preds_path, const std::string& diff_against) {
    const ssp::Dataset target = load_dataset(app, app.paths.target, "target");
    const std::string path =
        preds_path.empty() ? out_path(app, "stage2.preds.jsonl") : preds_path;
    if (!fs::exists(path)) throw ssp::ConfigError("predictions file not found: " + path);
    const auto preds = ssp::read_predictions_file(path);
    const auto report = ssp::score(target, preds, app.task);
    ssp::write_text_file(out_path(app, "metrics.json"), ssp::report_to_json(report));
    ssp::write_text_file(out_path(app, "label_metrics.csv"), ssp::per_label_csv(report));
    ssp::write_text_file(out_path(app, "confusion.csv"), ssp::confusion_csv(report));
    if (!diff_against.empty()) {
        const auto other = ssp::read_predictions_file(diff_against);
        const auto other_report = ssp::score(target, other, app.task);
        const auto diff = ssp::confusion_diff(report, other_report);
        json j;
        for (const auto& [g, row] : diff) j[g] = row;
        ssp::write_text_file(out_path(app, "confusion_diff.json"), j.dump(2) + "\n");
    }
    std::cout << "micro_f1 " << report.micro_f1 << " accuracy " << report.accuracy << "\n";
    return 0;
}

int cmd_noise_exp(App& app) {
    const ssp::Dataset target = load_dataset(app, app.paths.target, "target");
    const ssp::Dataset source = load_dataset(app, app.paths.source, "source");
    const auto tgt_store = load_store(app.paths.target_embeddings, "target_embeddings");
    const auto src_store = load_store(app.paths.source_embeddings, "source_embeddings");
    ssp::LlmClient client(app.stage2_llm, make_backend(app, target), app.cache_dir);
    const auto report = ssp::run_noise_experiment(target, source, tgt_store, src_store, client,
                                                  app.noise_rates, app.run);
    ssp::write_text_file(out_path(app, "noise_report.json"), ssp::noise_report_to_json(report));
    std::cout << "noise experiment: baseline_f1 " << report.baseline_f1 << ", "
              << report.rate_f1.size() << " rates\n";
    return 0;
}

int cmd_ablate(App& app) {
    const ssp::Dataset target = load_dataset(app, app.paths.target, "target");
    const auto tgt_store = load_store(app.paths.target_embeddings, "target_embeddings");
    const auto pool = load_pool(app, target, &tgt_store);
    std::map<std::string, ssp::Prediction> stage1_by_id = pool.predictions;

    ssp::LlmClient client(app.stage2_llm, make_backend(app, target), app.cache_dir);

    auto run_mode = [&](ssp::SelectionMode mode) {
        ssp::RunConfig cfg = app.run;
        cfg.selector_mode = mode;
        const auto result = ssp::run_stage2_ssp(pool, client, cfg);
        const std::string tag = ssp::to_string(mode);
        ssp::write_predictions_file(target, result.predictions,
                                    out_path(app, "stage2." + tag + ".preds.jsonl"));
        ssp::write_text_file(out_path(app, "selection_trace." + tag + ".jsonl"),
                             ssp::trace_to_jsonl(result.trace));
        const auto report = ssp::score(target, result.predictions, app.task);
        std::vector<ssp::SelectionEvent> events;
        for (const auto& entry : result.trace)
            events.push_back({entry.query_id, entry.chosen_ids});
        const auto precision = ssp::exemplar_precision(events, stage1_by_id, target);
        json row;
        row["mode"] = tag;
        row["micro_f1"] = report.micro_f1;
        row["exemplar_precision_macro"] = precision.macro;
        return row;
    };

    json baseline = run_mode(ssp::SelectionMode::full);
    json rows = json::array();
    for (const auto mode :
         {ssp::SelectionMode::no_confidence, ssp::SelectionMode::no_coverage,
          ssp::SelectionMode::similarity_only, ssp::SelectionMode::random}) {
        json row = run_mode(mode);
        row["delta_vs_full"] =
            row["micro_f1"].get<double>() - baseline["micro_f1"].get<double>();
        rows.push_back(row);
    }
    json report;
    report["baseline"] = baseline;
    report["rows"] = rows;
    ssp::write_text_file(out_path(app, "ablation_report.json"), report.dump(2) + "\n");
    std::cout << "ablation: full micro_f1 " << baseline["micro_f1"].get<double>() << ", "
              << rows.size() << " ablation rows\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Two-stage self-supervised prompting pipeline for zero-labelled "
                 "cross-lingual transfer"};
    cli.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::string cache_dir, mock, mock_fixtures, out_dir;
    bool dry_run = false;
    bool verbose = false;

    cli.add_option("--config", config_path, "JSON config file")->required();
    cli.add_option("--set", sets, "dotted-key override, e.g. --set llm.model=gpt-4");
    cli.add_option("--seed", seed, "seed override");
    cli.add_option("--cache-dir", cache_dir, "LLM cache directory (default <out>/cache)");
    cli.add_option("--mock", mock, "offline backend: echo-gold | copy-nearest-exemplar | scripted");
    cli.add_option("--mock-fixtures", mock_fixtures, "scripted mock fixture JSON (hash -> response)");
    cli.add_flag("--dry-run", dry_run, "render prompts and traces without any LLM calls");
    cli.add_flag("-v,--verbose", verbose, "progress and relaxation summaries on stderr");
    cli.add_option("--out", out_dir, "run directory");

    auto* embed_cmd = cli.add_subcommand("embed", "fetch and persist embeddings");
    std::string split = "target";
    embed_cmd->add_option("--split", split, "target | source")
        ->check(CLI::IsMember({"target", "source"}));
    auto* stage1_cmd = cli.add_subcommand("stage1", "run cross-lingual ICL Stage I");
    auto* import_cmd = cli.add_subcommand("import-stage1", "validate and pool external Stage I predictions");
    auto* select_cmd = cli.add_subcommand("select", "emit selection traces without LLM calls");
    auto* stage2_cmd = cli.add_subcommand("stage2", "run Stage II self-supervised prompting");
    auto* eval_cmd = cli.add_subcommand("eval", "score a predictions file");
    std::string preds_path, diff_against;
    eval_cmd->add_option("--preds", preds_path, "predictions JSONL (default <out>/stage2.preds.jsonl)");
    eval_cmd->add_option("--diff-against", diff_against, "second predictions file for a confusion-matrix difference");
    auto* noise_cmd = cli.add_subcommand("noise-exp", "noise-robustness experiment");
    auto* ablate_cmd = cli.add_subcommand("ablate", "run stage2 under every selector mode");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        json cfg = json::parse(ssp::read_text_file(config_path));
        for (const auto& kv : sets) apply_override(cfg, kv);
        App app = build_app(cfg);
        if (seed) app.run.seed = *seed;
        app.run.dry_run = dry_run;
        app.cache_dir = cache_dir;
        app.verbose = verbose;
        app.mock = mock;
        app.mock_fixtures = mock_fixtures;
        app.out_dir = out_dir;
        ensure_out_dir(app);
        write_snapshot(app, sets);

        if (*embed_cmd) return cmd_embed(app, split);
        if (*stage1_cmd) return cmd_stage1(app);
        if (*import_cmd) return cmd_import_stage1(app);
        if (*select_cmd) return cmd_select(app);
        if (*stage2_cmd) return cmd_stage2(app);
        if (*eval_cmd) return cmd_eval(app, preds_path, diff_against);
        if (*noise_cmd) return cmd_noise_exp(app);
        if (*ablate_cmd) return cmd_ablate(app);
        throw ssp::ConfigError("no subcommand selected");
    } catch (const ssp::InfeasibleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ssp::TransportError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ssp::ProtocolError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

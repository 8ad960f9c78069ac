#include "ssp/gateway.hpp"

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <mutex>

#include <openssl/evp.h>

#include "json.hpp"

#include "ssp/http.hpp"
#include "ssp/prompt.hpp"

namespace ssp {

namespace fs = std::filesystem;
using nlohmann::json;

void LlmParams::validate() const {
    if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
    if (max_inflight < 1) throw ConfigError("max_inflight must be >= 1");
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

std::string cache_key(const LlmParams& params, const std::string& prompt) {
    json header;
    header["model"] = params.model;
    header["temperature"] = params.temperature;
    header["max_tokens"] = params.max_tokens;
    return sha256_hex(header.dump() + '\0' + prompt);
}

namespace {

class LiveBackend : public LlmBackend {
public:
    std::string name() const override { return "live"; }

    BackendResult complete(const std::string& prompt, const LlmParams& params) override {
        json body;
        body["model"] = params.model;
        body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
        body["temperature"] = params.temperature;
        body["max_tokens"] = params.max_tokens;

        std::map<std::string, std::string> headers;
        if (!params.api_key.empty()) headers["Authorization"] = "Bearer " + params.api_key;

        HttpRequestPolicy policy{params.timeout_ms, params.max_retries, params.backoff_ms};
        const std::string raw = post_json(params.endpoint, params.path, headers,
                                          body.dump(), policy);
        json parsed;
        try {
            parsed = json::parse(raw);
        } catch (const json::parse_error& e) {
            throw ProtocolError(std::string("completion response is not JSON: ") + e.what());
        }
        if (!parsed.contains("choices") || !parsed.at("choices").is_array() ||
            parsed.at("choices").empty())
            throw ProtocolError("completion response has no choices");
        const auto& choice = parsed.at("choices").at(0);
        if (!choice.contains("message") || !choice.at("message").contains("content"))
            throw ProtocolError("completion choice has no message content");
        BackendResult result;
        result.content = choice.at("message").at("content").get<std::string>();
        if (parsed.contains("usage")) {
            const auto& usage = parsed.at("usage");
            result.prompt_tokens = usage.value("prompt_tokens", 0L);
            result.completion_tokens = usage.value("completion_tokens", 0L);
        }
        return result;
    }
};

// Shared prompt dissection for the structural mocks. Prompts are our own
// renderings, so the line shapes are known exactly.
struct PromptView {
    bool is_nli = false;
    std::string query_line;                       // last Sentence:/Premise: line
    std::vector<std::string> query_tokens;        // sequence tasks
    std::vector<std::pair<std::string, std::string>> first_exemplar_pairs;
    std::string first_exemplar_answer;            // NLI
    std::size_t exemplar_count = 0;
};

PromptView dissect_prompt(const std::string& prompt) {
    PromptView view;
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= prompt.size()) {
        std::size_t end = prompt.find('\n', start);
        if (end == std::string::npos) end = prompt.size();
        lines.push_back(prompt.substr(start, end - start));
        if (end == prompt.size()) break;
        start = end + 1;
    }

    std::size_t last_query = std::string::npos;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].rfind("Sentence: ", 0) == 0) {
            last_query = i;
        } else if (lines[i].rfind("Premise: ", 0) == 0) {
            last_query = i;
            view.is_nli = true;
        } else if (lines[i].rfind("Answer: ", 0) == 0) {
            ++view.exemplar_count;
            if (view.first_exemplar_answer.empty())
                view.first_exemplar_answer = lines[i].substr(std::string("Answer: ").size());
        }
    }
    if (last_query == std::string::npos)
        throw ValidationError("mock backend: prompt has no query line");
    view.query_line = lines[last_query];

    if (!view.is_nli) {
        const std::string sentence = lines[last_query].substr(std::string("Sentence: ").size());
        std::string word;
        for (char c : sentence) {
            if (c == ' ') {
                if (!word.empty()) view.query_tokens.push_back(word);
                word.clear();
            } else {
                word.push_back(c);
            }
        }
        if (!word.empty()) view.query_tokens.push_back(word);

        // first fenced block = first exemplar's tags
        bool in_block = false;
        for (std::size_t i = 0; i < last_query; ++i) {
            if (lines[i] == "```") {
                if (in_block) break;
                in_block = true;
                continue;
            }
            if (!in_block) continue;
            const auto tab = lines[i].find('\t');
            if (tab == std::string::npos) continue;
            view.first_exemplar_pairs.emplace_back(lines[i].substr(0, tab),
                                                   lines[i].substr(tab + 1));
        }
        // count exemplars = number of opening fences before the query
        std::size_t fences = 0;
        for (std::size_t i = 0; i < last_query; ++i) {
            if (lines[i] == "```") ++fences;
        }
        view.exemplar_count = fences / 2;
    }
    return view;
}

class EchoGoldBackend : public LlmBackend {
public:
    explicit EchoGoldBackend(MockContext ctx) : ctx_(std::move(ctx)) {
        if (!ctx_.dataset) throw ConfigError("echo-gold mock needs a labelled dataset");
        for (const auto& ex : ctx_.dataset->examples) {
            if (!ex.gold_labels)
                throw ConfigError("echo-gold mock: example '" + ex.id + "' has no gold labels");
            by_query_line_[query_line(ctx_.dataset->task, ex)] = &ex;
        }
    }

    std::string name() const override { return "mock-echo-gold"; }

    BackendResult complete(const std::string& prompt, const LlmParams&) override {
        const PromptView view = dissect_prompt(prompt);
        auto it = by_query_line_.find(view.query_line);
        if (it == by_query_line_.end())
            throw ValidationError("echo-gold mock: query not found in dataset: " +
                                  view.query_line);
        const Example& ex = *it->second;
        return {render_response(ctx_.dataset->task, ex, *ex.gold_labels)};
    }

private:
    MockContext ctx_;
    std::map<std::string, const Example*> by_query_line_;
};

class CopyNearestBackend : public LlmBackend {
public:
    explicit CopyNearestBackend(MockContext ctx) : ctx_(std::move(ctx)) {
        if (!ctx_.dataset) throw ConfigError("copy-nearest mock needs a task dataset");
    }

    std::string name() const override { return "mock-copy-nearest-exemplar"; }

    BackendResult complete(const std::string& prompt, const LlmParams&) override {
        const PromptView view = dissect_prompt(prompt);
        if (view.exemplar_count == 0)
            throw ValidationError("copy-nearest mock: prompt has no exemplar block");
        const TaskSpec& task = ctx_.dataset->task;
        if (view.is_nli) return {" " + view.first_exemplar_answer};

        Example query;
        query.tokens = view.query_tokens;
        std::vector<std::string> labels;
        labels.reserve(query.tokens.size());
        for (std::size_t i = 0; i < query.tokens.size(); ++i) {
            labels.push_back(i < view.first_exemplar_pairs.size()
                                 ? view.first_exemplar_pairs[i].second
                                 : task.default_label);
        }
        return {render_response(task, query, labels)};
    }

private:
    MockContext ctx_;
};

class ScriptedBackend : public LlmBackend {
public:
    explicit ScriptedBackend(MockContext ctx) : ctx_(std::move(ctx)) {}

    std::string name() const override { return "mock-scripted"; }

    BackendResult complete(const std::string& prompt, const LlmParams&) override {
        const std::string key = sha256_hex(prompt);
        auto it = ctx_.scripted.find(key);
        if (it == ctx_.scripted.end())
            throw ValidationError("scripted mock has no response for prompt hash " + key);
        return {it->second};
    }

private:
    MockContext ctx_;
};

}  // namespace

std::shared_ptr<LlmBackend> live_backend() { return std::make_shared<LiveBackend>(); }

MockKind mock_kind_from_string(const std::string& s) {
    if (s == "echo-gold") return MockKind::echo_gold;
    if (s == "copy-nearest-exemplar" || s == "copy-nearest")
        return MockKind::copy_nearest_exemplar;
    if (s == "scripted") return MockKind::scripted;
    throw ConfigError("unknown mock kind: " + s);
}

std::shared_ptr<LlmBackend> mock_backend(MockKind kind, MockContext context) {
    switch (kind) {
        case MockKind::echo_gold: return std::make_shared<EchoGoldBackend>(std::move(context));
        case MockKind::copy_nearest_exemplar:
            return std::make_shared<CopyNearestBackend>(std::move(context));
        case MockKind::scripted: return std::make_shared<ScriptedBackend>(std::move(context));
    }
    throw ConfigError("unknown mock kind");
}

struct LlmClient::Impl {
    std::shared_ptr<LlmBackend> backend;
    std::string cache_dir;
    std::mutex mutex;
    std::condition_variable cv;
    int inflight = 0;
    int max_inflight = 1;
    std::atomic<long> hits{0};
    std::atomic<long> requests{0};

    fs::path record_path(const std::string& key) const {
        return fs::path(cache_dir) / key.substr(0, 2) / (key + ".json");
    }
};

LlmClient::LlmClient(LlmParams params, std::shared_ptr<LlmBackend> backend,
                     std::string cache_dir)
    : impl_(std::make_shared<Impl>()), params_(std::move(params)) {
    params_.validate();
    if (!backend) throw ConfigError("LlmClient needs a backend");
    impl_->backend = std::move(backend);
    impl_->cache_dir = std::move(cache_dir);
    impl_->max_inflight = params_.max_inflight;
    if (!impl_->cache_dir.empty()) fs::create_directories(impl_->cache_dir);
}

long LlmClient::cache_hits() const { return impl_->hits.load(); }
long LlmClient::requests_made() const { return impl_->requests.load(); }

std::string LlmClient::complete(const std::string& prompt) {
    const std::string key = cache_key(params_, prompt);

    if (!impl_->cache_dir.empty()) {
        const fs::path path = impl_->record_path(key);
        if (fs::exists(path)) {
            const json record = json::parse(read_text_file(path.string()));
            impl_->hits.fetch_add(1);
            return record.at("response").get<std::string>();
        }
    }

    {
        std::unique_lock<std::mutex> lock(impl_->mutex);
        impl_->cv.wait(lock, [&] { return impl_->inflight < impl_->max_inflight; });
        ++impl_->inflight;
    }
    BackendResult result;
    try {
        impl_->requests.fetch_add(1);
        result = impl_->backend->complete(prompt, params_);
    } catch (...) {
        {
            std::lock_guard<std::mutex> lock(impl_->mutex);
            --impl_->inflight;
        }
        impl_->cv.notify_one();
        throw;
    }
    {
        std::lock_guard<std::mutex> lock(impl_->mutex);
        --impl_->inflight;
    }
    impl_->cv.notify_one();

    if (!impl_->cache_dir.empty()) {
        json record;
        record["cache_key"] = key;
        record["model"] = params_.model;
        record["temperature"] = params_.temperature;
        record["max_tokens"] = params_.max_tokens;
        record["prompt"] = prompt;
        record["response"] = result.content;
        record["backend"] = impl_->backend->name();
        record["usage"] = {{"prompt_tokens", result.prompt_tokens},
                           {"completion_tokens", result.completion_tokens}};

        const fs::path path = impl_->record_path(key);
        fs::create_directories(path.parent_path());
        // write-to-temp-then-rename keeps concurrent writers safe
        static std::atomic<unsigned long> tmp_counter{0};
        const fs::path tmp = path.string() + ".tmp" + std::to_string(tmp_counter.fetch_add(1));
        write_text_file(tmp.string(), record.dump(2) + "\n");
        fs::rename(tmp, path);
    }
    return result.content;
}

}  // namespace ssp

#include "ssp/http.hpp"

#include <chrono>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "ssp/errors.hpp"

namespace ssp {

namespace {

bool retryable_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

}  // namespace

std::string post_json(const std::string& base_url, const std::string& path,
                      const std::map<std::string, std::string>& headers,
                      const std::string& body, const HttpRequestPolicy& policy) {
    if (base_url.empty()) throw ConfigError("endpoint base URL is empty");

    httplib::Client client(base_url);
    client.set_connection_timeout(0, policy.timeout_ms * 1000LL);
    client.set_read_timeout(policy.timeout_ms / 1000, (policy.timeout_ms % 1000) * 1000);
    client.set_write_timeout(policy.timeout_ms / 1000, (policy.timeout_ms % 1000) * 1000);

    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) hdrs.emplace(k, v);

    int delay_ms = policy.backoff_ms;
    int last_status = 0;
    std::string last_error;
    for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
            delay_ms *= 2;
        }
        auto res = client.Post(path, hdrs, body, "application/json");
        if (!res) {
            last_status = 0;
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) return res->body;
        last_status = res->status;
        last_error = "HTTP " + std::to_string(res->status);
        if (!retryable_status(res->status)) break;
    }
    throw TransportError("request to " + base_url + path + " failed: " + last_error,
                         last_status);
}

}  // namespace ssp

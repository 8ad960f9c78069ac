#pragma once

#include <map>
#include <string>

namespace ssp {

struct HttpRequestPolicy {
    int timeout_ms = 30000;
    int max_retries = 3;   // retries after the first attempt
    int backoff_ms = 250;  // doubled after each failed attempt
};

/// POSTs a JSON body and returns the response body. Retries 429 and 5xx
/// responses and transport failures with exponential backoff; any other
/// non-2xx status fails immediately. Throws TransportError (with status)
/// when retries are exhausted.
std::string post_json(const std::string& base_url, const std::string& path,
                      const std::map<std::string, std::string>& headers,
                      const std::string& body, const HttpRequestPolicy& policy);

}  // namespace ssp

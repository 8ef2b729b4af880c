#include <cstdlib>

#include <httplib.h>

#include "btpilot/intent/llm.hpp"

namespace btp::intent {

HttpTransport::HttpTransport(std::string base_url, std::string api_key, double timeout_s)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)), timeout_s_(timeout_s) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

std::unique_ptr<HttpTransport> HttpTransport::from_env(double timeout_s) {
    const char* url = std::getenv("BTP_LLM_BASE_URL");
    const char* key = std::getenv("BTP_LLM_API_KEY");
    if (!url || !*url) {
        throw BackendUnavailable("BTP_LLM_BASE_URL is not set");
    }
    return std::make_unique<HttpTransport>(url, key ? key : "", timeout_s);
}

std::string HttpTransport::complete(const LlmRequest& request) {
    // Split "scheme://host[:port]/prefix" into the client origin and the path prefix.
    auto scheme_end = base_url_.find("://");
    auto path_start = base_url_.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    std::string origin = path_start == std::string::npos ? base_url_ : base_url_.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : base_url_.substr(path_start);

    httplib::Client cli(origin);
    const auto secs = static_cast<time_t>(timeout_s_);
    const auto usecs = static_cast<time_t>((timeout_s_ - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    if (!api_key_.empty()) cli.set_bearer_token_auth(api_key_);

    auto res = cli.Post(prefix + "/chat/completions", request.body.dump(), "application/json");
    if (!res) {
        throw BackendUnavailable("request failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw BackendUnavailable("HTTP status " + std::to_string(res->status));
    }
    try {
        auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw BackendUnavailable(std::string("malformed completion: ") + e.what());
    }
}

}  // namespace btp::intent

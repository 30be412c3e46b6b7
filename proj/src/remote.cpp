#include "prefdetect/remote.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <optional>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "prefdetect/errors.hpp"

namespace prefdetect {

using nlohmann::json;

void validate_endpoint(const EndpointConfig& cfg) {
    if (cfg.base_url.empty()) throw config_error("endpoint base_url is required");
    if (cfg.timeout_ms <= 0) throw config_error("timeout_ms must be > 0");
    if (cfg.max_retries < 0) throw config_error("max_retries must be >= 0");
    if (cfg.retry_base_ms < 0) throw config_error("retry_base_ms must be >= 0");
    if (cfg.max_concurrent < 1) throw config_error("max_concurrent must be >= 1");
}

namespace {

struct SlotGuard {
    std::counting_semaphore<>& sem;
    explicit SlotGuard(std::counting_semaphore<>& s) : sem(s) { sem.acquire(); }
    ~SlotGuard() { sem.release(); }
};

} // namespace

RemoteClient::RemoteClient(EndpointConfig cfg)
    : cfg_(std::move(cfg)), slots_(cfg_.max_concurrent >= 1 ? cfg_.max_concurrent : 1) {
    validate_endpoint(cfg_);
    if (!cfg_.auth_env_var.empty()) {
        const char* tok = std::getenv(cfg_.auth_env_var.c_str());
        if (!tok || !*tok)
            throw remote_error("auth environment variable " + cfg_.auth_env_var +
                               " is not set");
        bearer_ = tok;
    }
}

std::string RemoteClient::post_json(const std::string& path, const std::string& body) const {
    SlotGuard guard(slots_);
    httplib::Headers headers;
    if (!bearer_.empty()) headers.emplace("Authorization", "Bearer " + bearer_);

    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(
                std::chrono::milliseconds(static_cast<int64_t>(cfg_.retry_base_ms)
                                          << (attempt - 1)));
        httplib::Client cli(cfg_.base_url);
        cli.set_connection_timeout(std::chrono::milliseconds(cfg_.timeout_ms));
        cli.set_read_timeout(std::chrono::milliseconds(cfg_.timeout_ms));
        cli.set_write_timeout(std::chrono::milliseconds(cfg_.timeout_ms));

        auto res = cli.Post(path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue; // retryable
        }
        if (res->status >= 200 && res->status < 300) return res->body;
        last_error = "HTTP status " + std::to_string(res->status);
        if (res->status >= 500) continue; // retryable
        throw remote_error(path + " failed without retry: " + last_error);
    }
    throw remote_error(path + " failed after " + std::to_string(cfg_.max_retries + 1) +
                       " attempts; last: " + last_error);
}

double RemoteClient::score(const std::string& context, const std::string& response) const {
    const std::string body = json{{"context", context}, {"response", response}}.dump();
    const std::string reply = post_json("/score", body);
    json obj;
    try {
        obj = json::parse(reply);
    } catch (const json::parse_error& e) {
        throw remote_error(std::string("malformed /score reply: ") + e.what());
    }
    if (!obj.is_object() || !obj.contains("reward") || !obj["reward"].is_number())
        throw remote_error("malformed /score reply: missing numeric \"reward\"");
    return obj["reward"].get<double>();
}

std::string RemoteClient::rephrase(const std::string& prompt) const {
    const std::string body = json{{"prompt", prompt}}.dump();
    const std::string reply = post_json("/rephrase", body);
    json obj;
    try {
        obj = json::parse(reply);
    } catch (const json::parse_error& e) {
        throw remote_error(std::string("malformed /rephrase reply: ") + e.what());
    }
    if (!obj.is_object() || !obj.contains("text") || !obj["text"].is_string())
        throw remote_error("malformed /rephrase reply: missing string \"text\"");
    std::string text = obj["text"].get<std::string>();
    if (text.empty()) throw remote_error("/rephrase reply has empty \"text\"");
    return text;
}

double remote_score(const EndpointConfig& cfg, const std::string& context,
                    const std::string& response) {
    return RemoteClient(cfg).score(context, response);
}

std::string remote_rephrase(const EndpointConfig& cfg, const std::string& prompt) {
    return RemoteClient(cfg).rephrase(prompt);
}

BatchScoreResult remote_detect_batch(const EndpointConfig& cfg,
                                     const std::vector<Document>& documents) {
    BatchScoreResult out;
    if (documents.empty()) return out;

    RemoteClient client(cfg);
    const size_t n = documents.size();
    std::vector<std::optional<double>> scores(n);
    std::vector<std::string> errors(n);
    std::atomic<size_t> next{0};

    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                scores[i] = client.score(documents[i].context, documents[i].response);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const size_t n_threads = std::min<size_t>(n, static_cast<size_t>(cfg.max_concurrent));
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    for (size_t i = 0; i < n; ++i) {
        if (scores[i])
            out.scores.emplace_back(documents[i].id, *scores[i]);
        else
            out.failures.emplace_back(documents[i].id, errors[i]);
    }
    if (out.scores.empty())
        throw remote_error("all " + std::to_string(n) +
                           " requests failed; first: " + errors[0]);
    return out;
}

} // namespace prefdetect

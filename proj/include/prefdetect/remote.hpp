#pragma once

#include <cstdint>
#include <memory>
#include <semaphore>
#include <string>
#include <vector>

#include "prefdetect/metrics.hpp"
#include "prefdetect/mixgen.hpp"
#include "prefdetect/types.hpp"

namespace prefdetect {

struct EndpointConfig {
    std::string base_url;
    int timeout_ms = 30000;
    int max_retries = 3;
    int retry_base_ms = 500;
    int max_concurrent = 4;
    std::string auth_env_var; // bearer token env var name, optional
};

void validate_endpoint(const EndpointConfig& cfg);

// HTTP client for the wire protocol:
//   POST /score    {"context": s, "response": s} -> {"reward": number}
//   POST /rephrase {"prompt": s}                 -> {"text": string}
// Timeouts and 5xx are retried with retry_base_ms * 2^attempt backoff; 4xx and
// malformed 2xx bodies are not. At most max_concurrent requests are in flight
// per client, enforced internally; safe for concurrent use.
class RemoteClient {
public:
    explicit RemoteClient(EndpointConfig cfg);
    double score(const std::string& context, const std::string& response) const;
    std::string rephrase(const std::string& prompt) const;
    const EndpointConfig& config() const { return cfg_; }

private:
    std::string post_json(const std::string& path, const std::string& body) const;

    EndpointConfig cfg_;
    std::string bearer_;
    mutable std::counting_semaphore<> slots_;
};

double remote_score(const EndpointConfig& cfg, const std::string& context,
                    const std::string& response);
std::string remote_rephrase(const EndpointConfig& cfg, const std::string& prompt);

struct BatchScoreResult {
    std::vector<std::pair<std::string, double>> scores;     // (id, score), input order
    std::vector<std::pair<std::string, std::string>> failures; // (id, message)
};

// Scores every document with up to max_concurrent requests in flight.
// Per-document failures are collected; throws only if every request fails.
BatchScoreResult remote_detect_batch(const EndpointConfig& cfg,
                                     const std::vector<Document>& documents);

class RemoteDetector : public Detector {
public:
    explicit RemoteDetector(EndpointConfig cfg) : client_(std::move(cfg)) {}
    double detect(const std::string& context, const std::string& response) const override {
        return client_.score(context, response);
    }

private:
    RemoteClient client_;
};

class RemoteRephraser : public Rephraser {
public:
    explicit RemoteRephraser(EndpointConfig cfg) : client_(std::move(cfg)) {}
    // The seed is ignored; determinism is the served model's concern.
    std::string rephrase(const std::string& prompt, uint64_t) const override {
        return client_.rephrase(prompt);
    }
    bool concurrent_safe() const override { return true; }

private:
    RemoteClient client_;
};

} // namespace prefdetect

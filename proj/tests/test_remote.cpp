#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "prefdetect/errors.hpp"
#include "prefdetect/remote.hpp"

using namespace prefdetect;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

// Loopback stub speaking the wire protocol, instrumented for the tests:
// per-path hit counts, request capture, an optional scripted status sequence,
// and a high-water mark of concurrently running handlers.
class StubServer {
public:
    StubServer() {
        server_.Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
            handle(req, res, true);
        });
        server_.Post("/rephrase",
                     [this](const httplib::Request& req, httplib::Response& res) {
                         handle(req, res, false);
                     });
        port_ = server_.bind_to_any_port("127.0.0.1");
        REQUIRE(port_ > 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        while (!server_.is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }

    ~StubServer() {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    EndpointConfig config() const {
        EndpointConfig cfg;
        cfg.base_url = url();
        cfg.timeout_ms = 5000;
        cfg.retry_base_ms = 40;
        return cfg;
    }

    // Statuses served (in order) before falling back to 200 responses.
    void script_statuses(std::vector<int> statuses) {
        std::lock_guard<std::mutex> lock(mu_);
        script_ = std::move(statuses);
        script_pos_ = 0;
    }

    void set_score_body(std::string body) {
        std::lock_guard<std::mutex> lock(mu_);
        score_body_ = std::move(body);
    }

    void set_rephrase_body(std::string body) {
        std::lock_guard<std::mutex> lock(mu_);
        rephrase_body_ = std::move(body);
    }

    void set_handler_delay(std::chrono::milliseconds d) { delay_ = d; }

    int hits() const { return hits_.load(); }
    int max_in_flight() const { return max_in_flight_.load(); }

    std::vector<Clock::time_point> hit_times() const {
        std::lock_guard<std::mutex> lock(mu_);
        return hit_times_;
    }

    struct Captured {
        std::string body;
        std::string authorization;
        std::string path;
    };

    std::vector<Captured> captured() const {
        std::lock_guard<std::mutex> lock(mu_);
        return captured_;
    }

private:
    void handle(const httplib::Request& req, httplib::Response& res, bool is_score) {
        const int now_in_flight = ++in_flight_;
        int seen = max_in_flight_.load();
        while (now_in_flight > seen &&
               !max_in_flight_.compare_exchange_weak(seen, now_in_flight)) {
        }
        ++hits_;

        int status = 0;
        std::string body;
        {
            std::lock_guard<std::mutex> lock(mu_);
            hit_times_.push_back(Clock::now());
            captured_.push_back({req.body, req.get_header_value("Authorization"), req.path});
            if (script_pos_ < script_.size()) status = script_[script_pos_++];
            body = is_score ? score_body_ : rephrase_body_;
        }
        if (delay_.count() > 0) std::this_thread::sleep_for(delay_);

        if (status != 0 && (status < 200 || status >= 300)) {
            res.status = status;
            res.set_content("scripted failure", "text/plain");
        } else {
            if (body.empty()) {
                if (is_score) {
                    // default: reward = response length in bytes
                    const auto obj = json::parse(req.body);
                    body = json{{"reward",
                                 static_cast<double>(obj.at("response")
                                                         .get<std::string>()
                                                         .size())}}
                               .dump();
                } else {
                    body = json{{"text", "rewritten"}}.dump();
                }
            }
            res.status = 200;
            res.set_content(body, "application/json");
        }
        --in_flight_;
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    mutable std::mutex mu_;
    std::vector<int> script_;
    size_t script_pos_ = 0;
    std::string score_body_, rephrase_body_;
    std::vector<Clock::time_point> hit_times_;
    std::vector<Captured> captured_;
    std::atomic<int> hits_{0};
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
    std::chrono::milliseconds delay_{0};
};

Document make_doc(const std::string& id, const std::string& response) {
    Document d;
    d.id = id;
    d.response = response;
    d.label = Label::machine;
    return d;
}

} // namespace

TEST_CASE("validate_endpoint rejects bad configs") {
    EndpointConfig cfg;
    CHECK_THROWS_AS(validate_endpoint(cfg), config_error); // no URL
    cfg.base_url = "http://127.0.0.1:1";
    CHECK_NOTHROW(validate_endpoint(cfg));
    cfg.timeout_ms = 0;
    CHECK_THROWS_AS(validate_endpoint(cfg), config_error);
    cfg.timeout_ms = 1000;
    cfg.max_retries = -1;
    CHECK_THROWS_AS(validate_endpoint(cfg), config_error);
    cfg.max_retries = 0;
    cfg.max_concurrent = 0;
    CHECK_THROWS_AS(validate_endpoint(cfg), config_error);
    cfg.max_concurrent = 1;
    cfg.retry_base_ms = -5;
    CHECK_THROWS_AS(validate_endpoint(cfg), config_error);
}

TEST_CASE("score round trip") {
    StubServer stub;
    RemoteClient client(stub.config());
    CHECK(client.score("some context", "hello") == 5.0);
    CHECK(stub.hits() == 1);

    const auto seen = stub.captured();
    REQUIRE(seen.size() == 1);
    CHECK(seen[0].path == "/score");
    const auto sent = json::parse(seen[0].body);
    CHECK(sent.at("context") == "some context");
    CHECK(sent.at("response") == "hello");

    CHECK(remote_score(stub.config(), "", "four") == 4.0);
}

TEST_CASE("rephrase round trip") {
    StubServer stub;
    RemoteClient client(stub.config());
    CHECK(client.rephrase("Say it differently.") == "rewritten");
    const auto seen = stub.captured();
    REQUIRE(seen.size() == 1);
    CHECK(seen[0].path == "/rephrase");
    CHECK(json::parse(seen[0].body).at("prompt") == "Say it differently.");

    CHECK(remote_rephrase(stub.config(), "x") == "rewritten");

    RemoteRephraser rephraser(stub.config());
    CHECK(rephraser.rephrase("anything", 12345) == "rewritten");
    CHECK(rephraser.concurrent_safe());
}

TEST_CASE("transient 5xx responses are retried with growing backoff") {
    StubServer stub;
    stub.script_statuses({500, 503});
    auto cfg = stub.config();
    cfg.max_retries = 3;
    cfg.retry_base_ms = 50;

    RemoteClient client(cfg);
    const auto t0 = Clock::now();
    CHECK(client.score("", "abc") == 3.0);
    CHECK(stub.hits() == 3);

    const auto times = stub.hit_times();
    REQUIRE(times.size() == 3);
    using std::chrono::duration_cast;
    using std::chrono::milliseconds;
    const auto gap1 = duration_cast<milliseconds>(times[1] - times[0]).count();
    const auto gap2 = duration_cast<milliseconds>(times[2] - times[1]).count();
    CHECK(gap1 >= 40);  // nominal 50ms
    CHECK(gap2 >= 80);  // nominal 100ms: doubled
    CHECK(gap2 < 2000); // sanity, not a hang
    CHECK(duration_cast<milliseconds>(Clock::now() - t0).count() >= 120);
}

TEST_CASE("retries are exhausted after max_retries + 1 attempts") {
    StubServer stub;
    stub.script_statuses({500, 500, 500, 500, 500});
    auto cfg = stub.config();
    cfg.max_retries = 1;
    cfg.retry_base_ms = 10;
    RemoteClient client(cfg);
    CHECK_THROWS_WITH_AS(client.score("", "x"), doctest::Contains("after 2 attempts"),
                         remote_error);
    CHECK(stub.hits() == 2);
}

TEST_CASE("client errors are not retried") {
    StubServer stub;
    stub.script_statuses({404});
    auto cfg = stub.config();
    cfg.max_retries = 3;
    RemoteClient client(cfg);
    CHECK_THROWS_WITH_AS(client.score("", "x"), doctest::Contains("without retry"),
                         remote_error);
    CHECK(stub.hits() == 1);
}

TEST_CASE("malformed replies are rejected without retry") {
    StubServer stub;
    auto cfg = stub.config();
    cfg.max_retries = 3;

    stub.set_score_body(R"({"score": 1.0})"); // wrong key
    RemoteClient client(cfg);
    CHECK_THROWS_WITH_AS(client.score("", "x"), doctest::Contains("reward"), remote_error);
    CHECK(stub.hits() == 1);

    stub.set_score_body("not json at all");
    CHECK_THROWS_WITH_AS(client.score("", "x"), doctest::Contains("malformed"),
                         remote_error);

    stub.set_score_body(R"({"reward": "high"})"); // wrong type
    CHECK_THROWS_AS(client.score("", "x"), remote_error);

    stub.set_rephrase_body(R"({"text": ""})");
    CHECK_THROWS_WITH_AS(client.rephrase("p"), doctest::Contains("empty"), remote_error);

    stub.set_rephrase_body(R"({"output": "y"})");
    CHECK_THROWS_WITH_AS(client.rephrase("p"), doctest::Contains("text"), remote_error);
}

TEST_CASE("a shared client never exceeds its concurrency budget") {
    StubServer stub;
    stub.set_handler_delay(std::chrono::milliseconds(25));
    auto cfg = stub.config();
    cfg.max_concurrent = 2;
    RemoteClient client(cfg);

    std::vector<std::thread> callers;
    std::atomic<int> ok{0};
    for (int i = 0; i < 10; ++i) {
        callers.emplace_back([&client, &ok] {
            if (client.rephrase("again, please") == "rewritten") ++ok;
        });
    }
    for (auto& t : callers) t.join();
    CHECK(ok.load() == 10);
    CHECK(stub.hits() == 10);
    CHECK(stub.max_in_flight() <= 2);
}

TEST_CASE("remote_detect_batch keeps input order and respects the cap") {
    StubServer stub;
    stub.set_handler_delay(std::chrono::milliseconds(10));
    auto cfg = stub.config();
    cfg.max_concurrent = 2;

    std::vector<Document> docs;
    for (int i = 0; i < 10; ++i)
        docs.push_back(make_doc("doc-" + std::to_string(i), std::string(i + 1, 'x')));

    const auto res = remote_detect_batch(cfg, docs);
    CHECK(res.failures.empty());
    REQUIRE(res.scores.size() == 10);
    for (int i = 0; i < 10; ++i) {
        CHECK(res.scores[i].first == "doc-" + std::to_string(i));
        CHECK(res.scores[i].second == static_cast<double>(i + 1));
    }
    CHECK(stub.max_in_flight() <= 2);
}

TEST_CASE("remote_detect_batch collects partial failures") {
    StubServer stub;
    // every third hit fails hard; with no retries each document maps to one hit
    auto cfg = stub.config();
    cfg.max_retries = 0;
    cfg.max_concurrent = 1; // deterministic request order

    stub.script_statuses({200, 404, 200});
    std::vector<Document> docs{make_doc("a", "one"), make_doc("b", "two"),
                               make_doc("c", "three")};
    const auto res = remote_detect_batch(cfg, docs);
    REQUIRE(res.scores.size() == 2);
    CHECK(res.scores[0].first == "a");
    CHECK(res.scores[1].first == "c");
    REQUIRE(res.failures.size() == 1);
    CHECK(res.failures[0].first == "b");
    CHECK(res.failures[0].second.find("404") != std::string::npos);
}

TEST_CASE("remote_detect_batch throws only when everything fails") {
    StubServer stub;
    stub.script_statuses({400, 400, 400});
    auto cfg = stub.config();
    cfg.max_retries = 0;
    cfg.max_concurrent = 1;
    std::vector<Document> docs{make_doc("a", "one"), make_doc("b", "two"),
                               make_doc("c", "three")};
    CHECK_THROWS_WITH_AS(remote_detect_batch(cfg, docs), doctest::Contains("all 3"),
                         remote_error);

    EndpointConfig unreachable;
    unreachable.base_url = "http://127.0.0.1:9";
    CHECK(remote_detect_batch(unreachable, {}).scores.empty());
}

TEST_CASE("bearer auth comes from the environment") {
    StubServer stub;
    auto cfg = stub.config();
    cfg.auth_env_var = "PREFDETECT_TEST_TOKEN";

    unsetenv("PREFDETECT_TEST_TOKEN");
    CHECK_THROWS_WITH_AS(RemoteClient{cfg}, doctest::Contains("PREFDETECT_TEST_TOKEN"),
                         remote_error);

    setenv("PREFDETECT_TEST_TOKEN", "sekrit-123", 1);
    RemoteClient client(cfg);
    CHECK(client.score("ctx", "ab") == 2.0);
    const auto seen = stub.captured();
    REQUIRE(seen.size() == 1);
    CHECK(seen[0].authorization == "Bearer sekrit-123");
    // the token travels in the header, never the payload
    CHECK(seen[0].body.find("sekrit") == std::string::npos);
    unsetenv("PREFDETECT_TEST_TOKEN");

    // without auth_env_var no Authorization header is sent
    StubServer stub2;
    RemoteClient anon(stub2.config());
    CHECK(anon.score("", "x") == 1.0);
    CHECK(stub2.captured()[0].authorization.empty());
}

TEST_CASE("remote detector adapts the scoring endpoint") {
    StubServer stub;
    RemoteDetector det(stub.config());
    CHECK(det.detect("any", "abcdef") == 6.0);
}

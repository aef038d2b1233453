#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "flightrag/category.hpp"
#include "flightrag/engine.hpp"

namespace flightrag::service {

struct ServiceOptions {
    std::chrono::seconds session_ttl{15 * 60};
    std::string cors_origin = "*";
};

struct Session {
    std::string session_id;
    std::string pending_question;  // non-empty while a clarification is outstanding
    std::optional<QuestionCategory> pending_category;
    std::chrono::steady_clock::time_point created_at;
    std::chrono::steady_clock::time_point last_active;
};

struct Response {
    int status = 200;
    std::string body;  // JSON
};

// The /v1/ask reply shape; session fields are omitted when empty.
std::string ask_response_json(const AskResponse& r, std::string_view session_id = {},
                              std::string_view merged_question = {});

using Clock = std::function<std::chrono::steady_clock::time_point()>;

// Transport-independent request handling. Thread-safe; requests for one
// session are serialized, the engine is shared read-only.
class Service {
public:
    explicit Service(std::shared_ptr<const Engine> engine, ServiceOptions options = {},
                     Clock clock = nullptr);

    // Body: {"question": str, "pipeline": "traditional"|"sql"|"graph", "session_id"?: str}
    Response ask(std::string_view body);
    Response flights(std::string_view field, std::string_view value) const;
    Response health() const;

    std::optional<Session> session(const std::string& id);
    std::size_t session_count();
    const ServiceOptions& options() const { return options_; }

private:
    struct Slot {
        std::mutex mu;
        Session s;
    };

    std::shared_ptr<Slot> acquire(const std::optional<std::string>& id);
    std::string new_id();

    std::shared_ptr<const Engine> engine_;
    ServiceOptions options_;
    Clock clock_;
    std::mutex mu_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
    std::uint64_t id_counter_ = 0;
};

// httplib server exposing /v1/ask, /v1/flights and /v1/health.
class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();

    // Returns false when the address cannot be bound. port 0 picks a free port.
    bool bind(const std::string& host, int port);
    int port() const { return port_; }
    // Blocks until stop().
    bool listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
};

}  // namespace flightrag::service

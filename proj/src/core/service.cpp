#include "flightrag/service.hpp"

#include <random>

#include "flightrag/error.hpp"
#include "flightrag/router.hpp"
#include "flightrag/traditional_rag.hpp"
#include "httplib.h"
#include "json.hpp"
#include "text_util.hpp"

namespace flightrag::service {

namespace {

using json = nlohmann::ordered_json;

Response error_response(int status, std::string_view error, std::string_view message) {
    json j;
    j["error"] = error;
    j["message"] = message;
    return {status, j.dump()};
}

Response error_response(int status, const Error& e) { return error_response(status, errc_name(e.code()), e.what()); }

bool valid_session_id(std::string_view id) {
    if (id.empty() || id.size() > 64) return false;
    for (char c : id)
        if (!detail::is_alnum(c) && c != '-' && c != '_') return false;
    return true;
}

json record_view(const FlightRecord& r) {
    json j = json::object();
    const auto fields = flight_fields();
    for (std::size_t i = 0; i < fields.size(); ++i) j[std::string(fields[i].name)] = field_text(r, i);
    return j;
}

}  // namespace

Service::Service(std::shared_ptr<const Engine> engine, ServiceOptions options, Clock clock)
    : engine_(std::move(engine)), options_(std::move(options)), clock_(std::move(clock)) {
    if (!engine_) fail(Errc::invalid_argument, "service needs an engine");
    if (!clock_) clock_ = [] { return std::chrono::steady_clock::now(); };
}

std::string Service::new_id() {
    static thread_local std::mt19937_64 gen{std::random_device{}()};
    return detail::hex64(gen()) + detail::hex64(++id_counter_).substr(8);
}

std::shared_ptr<Service::Slot> Service::acquire(const std::optional<std::string>& id) {
    const auto now = clock_();
    std::lock_guard lock(mu_);
    std::erase_if(sessions_, [&](const auto& kv) {
        std::unique_lock l(kv.second->mu, std::try_to_lock);
        return l.owns_lock() && now - kv.second->s.last_active > options_.session_ttl;
    });
    if (id) {
        if (auto it = sessions_.find(*id); it != sessions_.end()) return it->second;
    }
    auto slot = std::make_shared<Slot>();
    slot->s.session_id = id ? *id : new_id();
    slot->s.created_at = now;
    slot->s.last_active = now;
    sessions_[slot->s.session_id] = slot;
    return slot;
}

Response Service::ask(std::string_view body) {
    json req;
    try {
        req = json::parse(body);
    } catch (const json::exception&) {
        return error_response(400, "BadRequest", "body is not JSON");
    }
    if (!req.is_object()) return error_response(400, "BadRequest", "body must be a JSON object");
    const std::string question = req.contains("question") && req["question"].is_string()
                                     ? std::string(detail::trim(req["question"].get<std::string>()))
                                     : std::string();
    if (question.empty()) return error_response(400, "EmptyQuestion", "question must be a non-empty string");
    const std::string pname = req.value("pipeline", "");
    const auto pipeline = parse_pipeline(pname);
    if (!pipeline) return error_response(400, "UnknownPipeline", "pipeline must be traditional, sql or graph");
    std::optional<std::string> sid;
    if (req.contains("session_id") && req["session_id"].is_string()) {
        sid = req["session_id"].get<std::string>();
        if (!valid_session_id(*sid)) return error_response(400, "BadSessionId", "session_id: 1-64 of [A-Za-z0-9_-]");
    }

    const auto slot = acquire(sid);
    std::lock_guard lock(slot->mu);
    Session& s = slot->s;
    const auto now = clock_();
    if (now - s.last_active > options_.session_ttl) {
        s.pending_question.clear();
        s.pending_category.reset();
        s.created_at = now;
    }
    s.last_active = now;

    const std::string asked = s.pending_question.empty() ? question
                                                         : router::merge_followup(s.pending_question, question);
    AskResponse r;
    try {
        r = engine_->ask(asked, *pipeline);
    } catch (const Error& e) {
        // pending state is left as it was so the user can retry
        return error_response(e.is_llm_failure() ? 503 : 500, e);
    }

    if (r.needs_clarification) {
        s.pending_question = asked;
        s.pending_category = r.category;
    } else {
        s.pending_question.clear();
        s.pending_category.reset();
    }

    return {200, ask_response_json(r, s.session_id, asked != question ? std::string_view(asked) : "")};
}

std::string ask_response_json(const AskResponse& r, std::string_view session_id, std::string_view merged_question) {
    json out;
    out["answer"] = r.answer;
    out["category"] = category_name(r.category);
    json evidence = json::array();
    if (r.pipeline == Pipeline::traditional) {
        for (const auto& id : r.evidence_doc_ids) evidence.push_back({{"type", "article"}, {"doc_id", id}});
    } else if (!r.query.empty() || !r.query_error.empty()) {
        json q = {{"type", "query"}, {"query", r.query}};
        q["row_count"] = r.row_count ? json(*r.row_count) : json(nullptr);
        if (!r.query_error.empty()) q["error"] = r.query_error;
        evidence.push_back(q);
    }
    out["evidence"] = evidence;
    out["needs_clarification"] = r.needs_clarification;
    json flags = json::array();
    for (const auto& f : r.flags) flags.push_back({{"entity", f.entity}, {"kind", entity_kind_name(f.kind)}});
    out["flags"] = flags;
    if (!session_id.empty()) out["session_id"] = session_id;
    out["pipeline"] = pipeline_name(r.pipeline);
    if (!merged_question.empty()) out["merged_question"] = merged_question;
    return out.dump();
}

Response Service::flights(std::string_view field, std::string_view value) const {
    try {
        json out = json::array();
        for (const auto& r : lookup(engine_->store(), field, value)) out.push_back(record_view(r));
        return {200, out.dump()};
    } catch (const Error& e) {
        return error_response(e.code() == Errc::unknown_field ? 400 : 500, e);
    }
}

Response Service::health() const {
    json j;
    j["status"] = "ok";
    j["dataset_rows"] = engine_->store().size();
    j["pipelines"] = {"traditional", "sql", "graph"};
    return {200, j.dump()};
}

std::optional<Session> Service::session(const std::string& id) {
    std::shared_ptr<Slot> slot;
    {
        std::lock_guard lock(mu_);
        const auto it = sessions_.find(id);
        if (it == sessions_.end()) return std::nullopt;
        slot = it->second;
    }
    std::lock_guard lock(slot->mu);
    if (clock_() - slot->s.last_active > options_.session_ttl) return std::nullopt;
    return slot->s;
}

std::size_t Service::session_count() {
    std::lock_guard lock(mu_);
    return sessions_.size();
}

struct HttpServer::Impl {
    httplib::Server server;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>()) {
    auto& srv = impl_->server;
    const std::string origin = service.options().cors_origin;
    // no SO_REUSEPORT: a port already in use must fail to bind
    srv.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    srv.set_default_headers({{"Access-Control-Allow-Origin", origin},
                             {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                             {"Access-Control-Allow-Headers", "Content-Type"}});
    const auto reply = [](httplib::Response& res, const Response& r) {
        res.status = r.status;
        res.set_content(r.body, "application/json; charset=utf-8");
    };
    srv.Post("/v1/ask", [&service, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.ask(req.body));
    });
    srv.Get("/v1/flights", [&service, reply](const httplib::Request& req, httplib::Response& res) {
        if (!req.has_param("field")) {
            reply(res, error_response(400, "UnknownField", "field parameter is required"));
            return;
        }
        reply(res, service.flights(req.get_param_value("field"), req.get_param_value("value")));
    });
    srv.Get("/v1/health", [&service, reply](const httplib::Request&, httplib::Response& res) {
        reply(res, service.health());
    });
    srv.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    srv.set_error_handler([reply](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty() && res.status == 404) reply(res, error_response(404, "NotFound", "no such endpoint"));
    });
}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        port_ = impl_->server.bind_to_any_port(host);
        return port_ > 0;
    }
    if (!impl_->server.bind_to_port(host, port)) return false;
    port_ = port;
    return true;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace flightrag::service

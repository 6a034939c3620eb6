#pragma once

// HTTP/JSON service over in-memory analysis sessions. Routing is done by
// Service::handle on a transport-neutral Request so it can be exercised
// without sockets; mount() binds it to a cpp-httplib server.

#include "tempocause/analysis.hpp"
#include "tempocause/dataset.hpp"
#include "tempocause/estimate.hpp"
#include "tempocause/flowgraph.hpp"
#include "tempocause/formula.hpp"
#include "tempocause/inference.hpp"
#include "tempocause/serialize.hpp"

#include "httplib.h"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

namespace tempocause::server {

struct Request {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
    std::string content_type = "application/json";
};

struct Response {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

struct Options {
    std::filesystem::path data_dir = ".";
    std::string cors_origin = "*";
};

/// Modeled HTTP failure: status + {code, message, detail}.
struct HttpError {
    int status;
    std::string code;
    std::string message;
    json detail = json::object();
};

struct Session {
    std::string id;
    std::shared_ptr<const Dataset> dataset;
    std::optional<EffectSpec> effect;
    std::vector<EventDef> causes;
    Window window{1, 1};
    double epsilon = 0;
    CausalFlowGraph flow;

    mutable std::shared_mutex lock;
    mutable std::mutex cache_lock;
    mutable std::map<std::string, std::string> report_cache;
};

struct RouteDoc {
    const char* method;
    const char* path;
    const char* summary;
};

inline const std::vector<RouteDoc>& routes() {
    static const std::vector<RouteDoc> r{
        {"post", "/sessions", "Create a session from a CSV upload (text/csv body) or {path|csv|snapshot, options}"},
        {"get", "/sessions/{id}", "Session state: effect, causes, window, epsilon, dataset summary"},
        {"delete", "/sessions/{id}", "Drop a session"},
        {"put", "/sessions/{id}/effect", "Set the effect (EffectSpec JSON); returns the refreshed report"},
        {"put", "/sessions/{id}/params", "Set window {r, s} and/or epsilon; returns the refreshed report"},
        {"post", "/sessions/{id}/causes", "Add a cause (EventDef JSON); returns the refreshed report"},
        {"put", "/sessions/{id}/causes", "Replace the whole cause set ({causes:[EventDef]}), e.g. to undo an estimate"},
        {"delete", "/sessions/{id}/causes/{event_id}", "Remove a cause; returns the refreshed report"},
        {"get", "/sessions/{id}/conditional", "Base vs lagged conditional histogram of the effect (?cause=id|event=json&delay=d&bins=B)"},
        {"get", "/sessions/{id}/report", "Significance report (?eps=&r=&s= override session values)"},
        {"get", "/sessions/{id}/sweep", "Delay profile of the significant set (?max=D&eps=&r=&s=)"},
        {"post", "/sessions/{id}/estimate", "Estimate causes ({config, exclude}); replaces the cause set, returns previous set"},
        {"post", "/sessions/{id}/flow/save", "Save significant relations of the current report into the flow graph"},
        {"get", "/sessions/{id}/flow", "Flow graph with time-axis layout"},
        {"post", "/sessions/{id}/flow/load", "Replace the flow graph ({graph} or {path}); fingerprint mismatches warn"},
        {"post", "/sessions/{id}/flow/node/{nid}/reload", "Reload a node as cause or effect (?role=cause|effect)"},
        {"delete", "/sessions/{id}/flow/node/{nid}", "Delete a node and its incident edges"},
        {"post", "/sessions/{id}/snapshot", "Write the session (data, effect, causes, params, flow) to the data dir"},
        {"get", "/openapi.json", "This API description"},
    };
    return r;
}

inline json openapi() {
    json paths = json::object();
    for (const auto& r : routes()) {
        json op = {{"summary", r.summary},
                   {"responses",
                    {{"200", {{"description", "JSON payload"}}},
                     {"default", {{"description", "Error body {code, message, detail}"}}}}}};
        paths[r.path][r.method] = op;
    }
    return {{"openapi", "3.0.3"},
            {"info", {{"title", "tempocause"}, {"version", "1.0.0"},
                      {"description", "Time-lagged logic-based causal analysis service"}}},
            {"paths", paths}};
}

inline int status_for(Errc c) {
    switch (c) {
    case Errc::Io:
    case Errc::RaggedRows:
    case Errc::NonMonotonicTime:
    case Errc::NoUsableColumns:
    case Errc::TooFewRows:
    case Errc::ParseError:
    case Errc::SchemaError: return 400;
    case Errc::UnknownNode: return 404;
    case Errc::CycleRejected: return 409;
    default: return 422;
    }
}

class Service {
public:
    explicit Service(Options opt = {}) : opt_(std::move(opt)) {}

    Response handle(const Request& req) {
        try {
            return dispatch(req);
        } catch (const HttpError& e) {
            return error(e);
        } catch (const Error& e) {
            return error({status_for(e.code()), std::string(e.code_name()), e.what()});
        } catch (const json::exception& e) {
            return error({400, "ParseError", std::string("invalid JSON: ") + e.what()});
        } catch (const std::exception& e) {
            return error({500, "Internal", e.what()});
        }
    }

    /// Binds every route on an httplib server, with CORS headers.
    void mount(httplib::Server& svr) {
        auto bridge = [this](const httplib::Request& hr, httplib::Response& hres) {
            Request req;
            req.method = hr.method;
            req.path = hr.path;
            for (const auto& [k, v] : hr.params) req.query[k] = v;
            req.body = hr.body;
            req.content_type = hr.get_header_value("Content-Type");
            const auto res = handle(req);
            hres.status = res.status;
            hres.set_content(res.body, res.content_type);
        };
        svr.set_default_headers({{"Access-Control-Allow-Origin", opt_.cors_origin},
                                 {"Access-Control-Allow-Methods", "GET, POST, PUT, DELETE, OPTIONS"},
                                 {"Access-Control-Allow-Headers", "Content-Type"}});
        svr.Get(".*", bridge);
        svr.Post(".*", bridge);
        svr.Put(".*", bridge);
        svr.Delete(".*", bridge);
        svr.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    }

    std::size_t session_count() const {
        std::lock_guard g(sessions_lock_);
        return sessions_.size();
    }

private:
    using Parts = std::vector<std::string>;

    static Response json_response(int status, const json& j) { return {status, to_text(j)}; }

    static Response error(const HttpError& e) {
        return json_response(e.status, {{"code", e.code}, {"message", e.message}, {"detail", e.detail}});
    }

    static Parts split(const std::string& path) {
        Parts parts;
        std::stringstream ss(path);
        for (std::string p; std::getline(ss, p, '/');)
            if (!p.empty()) parts.push_back(httplib::detail::decode_url(p, false));
        return parts;
    }

    static json parse_body(const Request& req) {
        if (req.body.empty()) return json::object();
        return json::parse(req.body);
    }

    static std::optional<std::string> query(const Request& req, const std::string& key) {
        auto it = req.query.find(key);
        if (it == req.query.end() || it->second.empty()) return std::nullopt;
        return it->second;
    }

    static double query_number(const Request& req, const std::string& key, double fallback) {
        auto v = query(req, key);
        if (!v) return fallback;
        auto d = detail::parse_double(*v);
        if (!d) throw HttpError{400, "ParseError", "query parameter '" + key + "' must be a number"};
        return *d;
    }

    static std::size_t query_index(const Request& req, const std::string& key, std::size_t fallback) {
        auto v = query(req, key);
        if (!v) return fallback;
        auto d = detail::parse_integer(*v);
        if (!d || *d < 0) throw HttpError{400, "ParseError", "query parameter '" + key + "' must be a non-negative integer"};
        return static_cast<std::size_t>(*d);
    }

    std::shared_ptr<Session> session(const std::string& id) const {
        std::lock_guard g(sessions_lock_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw HttpError{404, "UnknownSession", "no session '" + id + "'"};
        return it->second;
    }

    Response dispatch(const Request& req) {
        const auto p = split(req.path);
        const auto& m = req.method;
        if (p.size() == 1 && p[0] == "openapi.json" && m == "GET") return json_response(200, openapi());
        if (p.empty() || p[0] != "sessions") throw HttpError{404, "NotFound", "no route for " + m + " " + req.path};
        if (p.size() == 1 && m == "POST") return create_session(req);
        if (p.size() < 2) throw HttpError{405, "MethodNotAllowed", m + " " + req.path};
        auto s = session(p[1]);
        if (p.size() == 2) {
            if (m == "GET") return get_session(*s);
            if (m == "DELETE") {
                std::lock_guard g(sessions_lock_);
                sessions_.erase(p[1]);
                return json_response(200, {{"deleted", p[1]}});
            }
        }
        const std::string& r = p.size() > 2 ? p[2] : std::string();
        if (p.size() == 3 && r == "effect" && m == "PUT") return put_effect(*s, req);
        if (p.size() == 3 && r == "params" && m == "PUT") return put_params(*s, req);
        if (p.size() == 3 && r == "causes" && m == "POST") return add_cause(*s, req);
        if (p.size() == 3 && r == "causes" && m == "PUT") return replace_causes(*s, req);
        if (p.size() == 4 && r == "causes" && m == "DELETE") return delete_cause(*s, p[3]);
        if (p.size() == 3 && r == "conditional" && m == "GET") return conditional(*s, req);
        if (p.size() == 3 && r == "report" && m == "GET") return get_report(*s, req);
        if (p.size() == 3 && r == "sweep" && m == "GET") return get_sweep(*s, req);
        if (p.size() == 3 && r == "estimate" && m == "POST") return estimate(*s, req);
        if (p.size() == 3 && r == "snapshot" && m == "POST") return snapshot(*s);
        if (r == "flow") {
            if (p.size() == 3 && m == "GET") return get_flow(*s);
            if (p.size() == 4 && p[3] == "save" && m == "POST") return flow_save(*s, req);
            if (p.size() == 4 && p[3] == "load" && m == "POST") return flow_load(*s, req);
            if (p.size() == 6 && p[3] == "node" && p[5] == "reload" && m == "POST") return flow_reload(*s, p[4], req);
            if (p.size() == 5 && p[3] == "node" && m == "DELETE") return flow_delete(*s, p[4]);
        }
        throw HttpError{404, "NotFound", "no route for " + m + " " + req.path};
    }

    // -- sessions ---------------------------------------------------------

    static IngestOptions ingest_options(const json& j) {
        IngestOptions o;
        if (!j.is_object()) return o;
        if (j.contains("time_col") && j["time_col"].is_string()) o.time_col = j["time_col"].get<std::string>();
        if (j.contains("discrete_cols")) o.discrete_cols = j["discrete_cols"].get<std::vector<std::string>>();
        if (j.contains("discrete_threshold")) o.discrete_threshold = j["discrete_threshold"].get<std::size_t>();
        return o;
    }

    std::filesystem::path resolve(const std::string& path) const {
        std::filesystem::path p(path);
        return p.is_absolute() ? p : opt_.data_dir / p;
    }

    Response create_session(const Request& req) {
        auto s = std::make_shared<Session>();
        const bool raw_csv = req.content_type.find("text/csv") != std::string::npos;
        std::optional<json> snap;
        if (raw_csv) {
            IngestOptions o;
            if (auto t = query(req, "time_col")) o.time_col = *t;
            if (auto d = query(req, "discrete_cols")) {
                std::stringstream ss(*d);
                for (std::string c; std::getline(ss, c, ',');) o.discrete_cols.push_back(c);
            }
            o.discrete_threshold = query_index(req, "discrete_threshold", o.discrete_threshold);
            s->dataset = std::make_shared<Dataset>(parse_csv(req.body, o, query(req, "name").value_or("upload")));
        } else {
            const json body = parse_body(req);
            const auto opts = ingest_options(body.value("options", json::object()));
            if (body.contains("snapshot")) {
                std::ifstream in(resolve(body["snapshot"].get<std::string>()), std::ios::binary);
                if (!in) throw Error(Errc::Io, "cannot read snapshot");
                snap = json::parse(in);
                s->dataset = std::make_shared<Dataset>(
                    parse_csv(snap->at("csv").get<std::string>(), ingest_options(snap->value("options", json::object())),
                              snap->value("name", "snapshot")));
            } else if (body.contains("csv")) {
                s->dataset = std::make_shared<Dataset>(
                    parse_csv(body["csv"].get<std::string>(), opts, body.value("name", "upload")));
            } else if (body.contains("path")) {
                s->dataset = std::make_shared<Dataset>(load_csv(resolve(body["path"].get<std::string>()), opts));
            } else {
                throw HttpError{400, "ParseError", "body needs one of 'path', 'csv' or 'snapshot'"};
            }
        }
        s->window.s = std::min<std::size_t>(1, s->dataset->length() - 1);
        s->window.r = s->window.s;
        s->flow.fingerprint = fingerprint(*s->dataset);
        if (snap) {
            if (snap->contains("effect") && !(*snap)["effect"].is_null()) s->effect = effect_from_json((*snap)["effect"]);
            s->causes = causes_from_json((*snap)["causes"]);
            s->window = window_from_json((*snap)["window"]);
            s->epsilon = (*snap)["epsilon"].get<double>();
            s->flow = graph_from_json((*snap)["flow"]);
        }
        s->id = "s" + std::to_string(++next_session_);
        {
            std::lock_guard g(sessions_lock_);
            sessions_[s->id] = s;
        }
        return json_response(201, {{"session_id", s->id}, {"summary", summary_to_json(*s->dataset)}});
    }

    static json state_json(const Session& s) {
        return {{"session_id", s.id},
                {"effect", s.effect ? effect_to_json(*s.effect) : json(nullptr)},
                {"causes", causes_to_json(s.causes)},
                {"window", window_to_json(s.window)},
                {"epsilon", s.epsilon}};
    }

    Response get_session(const Session& s) const {
        std::shared_lock g(s.lock);
        auto j = state_json(s);
        j["summary"] = summary_to_json(*s.dataset);
        return json_response(200, j);
    }

    /// Report for the current session state, or null with a reason.
    static json refreshed(const Session& s) {
        if (!s.effect) return {{"report", nullptr}, {"reason", "NoEffect"}};
        if (s.causes.empty()) return {{"report", nullptr}, {"reason", "NoCauses"}};
        try {
            return {{"report", json::parse(cached_report(s, s.window, s.epsilon))}, {"reason", nullptr}};
        } catch (const Error& e) {
            return {{"report", nullptr}, {"reason", std::string(e.code_name())}, {"message", e.what()}};
        }
    }

    static Response mutated(const Session& s) {
        auto j = state_json(s);
        j.update(refreshed(s));
        return json_response(200, j);
    }

    static std::string cached_report(const Session& s, const Window& w, double eps) {
        const std::string key = to_text({{"causes", causes_to_json(s.causes)},
                                         {"effect", effect_to_json(*s.effect)},
                                         {"window", window_to_json(w)},
                                         {"epsilon", eps}});
        {
            std::lock_guard g(s.cache_lock);
            if (auto it = s.report_cache.find(key); it != s.report_cache.end()) return it->second;
        }
        auto text = report_text(significance_report(*s.dataset, s.causes, *s.effect, w, eps));
        std::lock_guard g(s.cache_lock);
        if (s.report_cache.size() > 256) s.report_cache.clear();
        s.report_cache.emplace(key, text);
        return text;
    }

    Response put_effect(Session& s, const Request& req) {
        const auto effect = effect_from_json(parse_body(req));
        std::unique_lock g(s.lock);
        effect.validate(*s.dataset);
        for (const auto& c : s.causes)
            if (c.variable == effect.variable)
                throw HttpError{422, "KindMismatch", "cause '" + c.id + "' is defined on the effect variable"};
        s.effect = effect;
        return mutated(s);
    }

    Response put_params(Session& s, const Request& req) {
        const json body = parse_body(req);
        std::unique_lock g(s.lock);
        Window w = s.window;
        if (body.contains("r")) w.r = body["r"].get<std::size_t>();
        if (body.contains("s")) w.s = body["s"].get<std::size_t>();
        if (body.contains("window")) w = window_from_json(body["window"]);
        w.validate(s.dataset->length());
        double eps = body.value("epsilon", s.epsilon);
        if (!(eps >= 0)) throw Error(Errc::InvalidConfig, "epsilon must be non-negative");
        s.window = w;
        s.epsilon = eps;
        return mutated(s);
    }

    static void check_cause(const Session& s, const EventDef& ev) {
        ev.validate(*s.dataset);
        if (s.effect && ev.variable == s.effect->variable)
            throw HttpError{422, "KindMismatch", "a cause cannot be defined on the effect variable"};
    }

    Response add_cause(Session& s, const Request& req) {
        const auto ev = event_from_json(parse_body(req));
        std::unique_lock g(s.lock);
        check_cause(s, ev);
        for (const auto& c : s.causes)
            if (c.id == ev.id) throw HttpError{409, "DuplicateEvent", "event id '" + ev.id + "' already added"};
        s.causes.push_back(ev);
        return mutated(s);
    }

    Response replace_causes(Session& s, const Request& req) {
        const auto causes = causes_from_json(parse_body(req));
        std::unique_lock g(s.lock);
        std::set<std::string> ids;
        for (const auto& c : causes) {
            check_cause(s, c);
            if (!ids.insert(c.id).second) throw HttpError{409, "DuplicateEvent", "event id '" + c.id + "' repeated"};
        }
        s.causes = causes;
        return mutated(s);
    }

    Response delete_cause(Session& s, const std::string& id) {
        std::unique_lock g(s.lock);
        const auto before = s.causes.size();
        std::erase_if(s.causes, [&](const EventDef& e) { return e.id == id; });
        if (before == s.causes.size()) throw HttpError{404, "UnknownEvent", "no cause '" + id + "'"};
        return mutated(s);
    }

    // -- queries ----------------------------------------------------------

    static void require_effect(const Session& s) {
        if (!s.effect) throw HttpError{409, "NoEffect", "set an effect first"};
    }

    Response conditional(const Session& s, const Request& req) const {
        std::shared_lock g(s.lock);
        require_effect(s);
        const auto& ds = *s.dataset;
        std::optional<EventDef> cause;
        if (auto id = query(req, "cause")) {
            for (const auto& c : s.causes)
                if (c.id == *id) cause = c;
            if (!cause) throw HttpError{404, "UnknownEvent", "no cause '" + *id + "'"};
        } else if (auto ev = query(req, "event")) {
            cause = event_from_json(json::parse(*ev));
        } else {
            throw HttpError{400, "ParseError", "pass cause=<event id> or event=<EventDef JSON>"};
        }
        // a query only, so an event on the effect variable itself is allowed here
        cause->validate(*s.dataset);
        const std::size_t d = query_index(req, "delay", s.window.r);
        if (d >= ds.length()) throw Error(Errc::InvalidWindow, "delay must be below the series length");
        const std::size_t bins = std::max<std::size_t>(1, query_index(req, "bins", 20));

        const auto& effect_var = ds.at(s.effect->variable);
        const auto track = label_track(ds, *cause);
        std::vector<double> lagged;
        std::size_t occurrences = 0;
        for (std::size_t t = 0; t < ds.length(); ++t) {
            if (track[t] != Label::True) continue;
            ++occurrences;
            if (t + d < ds.length() && !effect_var.missing(t + d)) lagged.push_back(effect_var[t + d]);
        }
        double lo = effect_var.observed_min(), hi = effect_var.observed_max();
        std::size_t nb = bins;
        if (effect_var.is_discrete()) {
            lo = -0.5;
            hi = static_cast<double>(effect_var.levels().size()) - 0.5;
            nb = effect_var.levels().size();
        }
        auto hist = [&](std::span<const double> v) {
            json h = histogram_to_json(histogram(v, lo, hi, nb));
            std::size_t count = 0;
            double sum = 0;
            for (double x : v)
                if (!is_missing(x)) {
                    ++count;
                    sum += x;
                }
            h["n"] = count;
            h["mean"] = (effect_var.is_continuous() && count) ? json(sum / static_cast<double>(count)) : json(nullptr);
            return h;
        };
        const BoundEffect bound(ds, *s.effect);
        const auto cond = bound.condition(track, Window{d, d});
        json j;
        j["cause"] = event_to_json(*cause);
        j["delay"] = d;
        j["effect"] = effect_to_json(*s.effect);
        j["base"] = hist(effect_var.values());
        j["cond"] = hist(lagged);
        j["occurrences"] = {{"cause", occurrences}, {"effect_observed", effect_var.observed_count()},
                            {"lagged_values", lagged.size()}};
        j["no_occurrences"] = occurrences == 0;
        j["base_value"] = bound.base();
        j["cond_value"] = detail::opt(cond.value);
        j["form"] = bound.probability_form() ? "probability" : "expectation";
        if (effect_var.is_discrete()) j["levels"] = effect_var.levels();
        return json_response(200, j);
    }

    std::pair<Window, double> query_params(const Session& s, const Request& req) const {
        Window w{query_index(req, "r", s.window.r), query_index(req, "s", s.window.s)};
        if (req.query.count("r") && !req.query.count("s")) w.s = std::max(w.s, w.r);
        w.validate(s.dataset->length());
        const double eps = query_number(req, "eps", s.epsilon);
        if (!(eps >= 0)) throw Error(Errc::InvalidConfig, "epsilon must be non-negative");
        return {w, eps};
    }

    Response get_report(const Session& s, const Request& req) const {
        std::shared_lock g(s.lock);
        require_effect(s);
        const auto [w, eps] = query_params(s, req);
        if (s.causes.empty()) throw Error(Errc::EmptyCauseSet, "add at least one cause");
        return {200, cached_report(s, w, eps)};
    }

    Response get_sweep(const Session& s, const Request& req) const {
        std::shared_lock g(s.lock);
        require_effect(s);
        const auto [w, eps] = query_params(s, req);
        const std::size_t max = query_index(req, "max", 10);
        if (s.causes.empty()) throw Error(Errc::EmptyCauseSet, "add at least one cause");
        const auto rep = significance_report(*s.dataset, s.causes, *s.effect, w, eps);
        const auto sig = rep.significant_events();
        auto prof = delay_sweep(*s.dataset, sig, *s.effect, max);
        auto j = profile_to_json(prof);
        j["significant"] = causes_to_json(sig);
        return json_response(200, j);
    }

    Response estimate(Session& s, const Request& req) {
        const json body = parse_body(req);
        std::unique_lock g(s.lock);
        require_effect(s);
        EstimatorConfig cfg;
        cfg.window = s.window;
        cfg = config_from_json(body.value("config", json(nullptr)), cfg);
        std::set<std::string> exclude;
        if (body.contains("exclude")) exclude = body["exclude"].get<std::set<std::string>>();
        const auto est = estimate_all(*s.dataset, *s.effect, cfg, exclude);
        const auto previous = s.causes;
        s.causes = est.events();
        auto j = state_json(s);
        j.update(refreshed(s));
        j["previous_causes"] = causes_to_json(previous);
        j["estimate"] = estimate_to_json(est);
        j["config"] = config_to_json(cfg);
        return json_response(200, j);
    }

    Response snapshot(const Session& s) const {
        std::shared_lock g(s.lock);
        json j = state_json(s);
        j["name"] = s.dataset->name();
        j["csv"] = export_csv(*s.dataset);
        j["options"] = json::object();
        j["flow"] = graph_to_json(s.flow);
        const auto path = opt_.data_dir / (s.id + ".session.json");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error(Errc::Io, "cannot write '" + path.string() + "'");
        out << to_text(j);
        return json_response(200, {{"path", path.string()}});
    }

    // -- flow graph -------------------------------------------------------

    static json flow_json(const Session& s) {
        return {{"graph", graph_to_json(s.flow)}, {"layout", layout_to_json(layout(s.flow))}};
    }

    Response get_flow(const Session& s) const {
        std::shared_lock g(s.lock);
        return json_response(200, flow_json(s));
    }

    Response flow_save(Session& s, const Request& req) {
        const json body = parse_body(req);
        std::unique_lock g(s.lock);
        require_effect(s);
        if (s.causes.empty()) throw Error(Errc::EmptyCauseSet, "add at least one cause");
        const auto rep = significance_report(*s.dataset, s.causes, *s.effect, s.window, s.epsilon);
        const auto diff = save_relations(s.flow, rep, body.value("saved_at", utc_timestamp()));
        auto j = flow_json(s);
        j["diff"] = diff_to_json(diff);
        return json_response(200, j);
    }

    Response flow_load(Session& s, const Request& req) {
        const json body = parse_body(req);
        std::unique_lock g(s.lock);
        RestoredGraph r;
        if (body.contains("graph")) {
            r.graph = graph_from_json(body["graph"]);
            r.warnings = check_fingerprint(r.graph, *s.dataset);
        } else if (body.contains("path")) {
            r = restore(resolve(body["path"].get<std::string>()), s.dataset.get());
        } else {
            throw HttpError{400, "ParseError", "body needs 'graph' or 'path'"};
        }
        s.flow = std::move(r.graph);
        auto j = flow_json(s);
        j["warnings"] = r.warnings;
        return json_response(200, j);
    }

    Response flow_reload(Session& s, const std::string& nid, const Request& req) {
        const auto role = parse_role(query(req, "role").value_or(""));
        std::unique_lock g(s.lock);
        const auto payload = node_to_query(s.flow, nid, role);
        json j;
        if (role == QueryRole::Cause) {
            const auto& ev = std::get<EventDef>(payload);
            check_cause(s, ev);
            bool present = false;
            for (const auto& c : s.causes) present = present || c.id == ev.id;
            if (!present) s.causes.push_back(ev);
            j["payload"] = event_to_json(ev);
        } else {
            const auto& spec = std::get<EffectSpec>(payload);
            spec.validate(*s.dataset);
            std::vector<std::string> dropped;
            std::erase_if(s.causes, [&](const EventDef& c) {
                if (c.variable != spec.variable) return false;
                dropped.push_back(c.id);
                return true;
            });
            s.effect = spec;
            j["payload"] = effect_to_json(spec);
            j["dropped_causes"] = dropped;
        }
        j["role"] = role == QueryRole::Cause ? "cause" : "effect";
        j.update(state_json(s));
        j.update(refreshed(s));
        return json_response(200, j);
    }

    Response flow_delete(Session& s, const std::string& nid) {
        std::unique_lock g(s.lock);
        const auto removed = remove_node(s.flow, nid);
        auto j = flow_json(s);
        j["removed_edges"] = removed.size();
        return json_response(200, j);
    }

    Options opt_;
    mutable std::mutex sessions_lock_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::atomic<std::size_t> next_session_{0};
};

} // namespace tempocause::server

#pragma once

// JSON wire formats: EventDef, EffectSpec, Window, summaries, significance
// reports, delay profiles and estimation results. Object keys are emitted
// in sorted order so identical inputs always serialize to identical bytes.

#include "tempocause/dataset.hpp"
#include "tempocause/error.hpp"
#include "tempocause/estimate.hpp"
#include "tempocause/formula.hpp"
#include "tempocause/inference.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tempocause {

using json = nlohmann::json;

namespace detail {

template <class T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

inline const json& require(const json& j, const char* key, const char* what) {
    if (!j.is_object() || !j.contains(key))
        throw Error(Errc::ParseError, std::string(what) + " is missing field '" + key + "'");
    return j.at(key);
}

inline double require_number(const json& j, const char* key, const char* what) {
    const auto& v = require(j, key, what);
    if (!v.is_number()) throw Error(Errc::ParseError, std::string(what) + " field '" + key + "' must be a number");
    return v.get<double>();
}

inline std::string require_string(const json& j, const char* key, const char* what) {
    const auto& v = require(j, key, what);
    if (!v.is_string()) throw Error(Errc::ParseError, std::string(what) + " field '" + key + "' must be a string");
    return v.get<std::string>();
}

inline std::size_t require_index(const json& j, const char* key, const char* what) {
    const auto& v = require(j, key, what);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw Error(Errc::ParseError, std::string(what) + " field '" + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
}

} // namespace detail

inline json event_to_json(const EventDef& e) {
    json j;
    j["id"] = e.id;
    j["variable"] = e.variable;
    j["label"] = e.label;
    if (e.is_range()) {
        j["kind"] = "range";
        j["lo"] = e.as_range().lo;
        j["hi"] = e.as_range().hi;
    } else {
        j["kind"] = "levels";
        j["levels"] = e.as_levels().levels;
    }
    return j;
}

inline EventDef event_from_json(const json& j) {
    const char* what = "event";
    const auto id = detail::require_string(j, "id", what);
    const auto var = detail::require_string(j, "variable", what);
    const auto kind = detail::require_string(j, "kind", what);
    std::string label = j.contains("label") && j["label"].is_string() ? j["label"].get<std::string>() : "";
    if (kind == "range") {
        return EventDef::range(id, var, detail::require_number(j, "lo", what), detail::require_number(j, "hi", what),
                               label);
    }
    if (kind == "levels") {
        const auto& arr = detail::require(j, "levels", what);
        if (!arr.is_array()) throw Error(Errc::ParseError, "event field 'levels' must be an array");
        std::vector<std::string> levels;
        for (const auto& l : arr) {
            if (l.is_string()) levels.push_back(l.get<std::string>());
            else if (l.is_number_integer()) levels.push_back(std::to_string(l.get<long long>()));
            else throw Error(Errc::ParseError, "event levels must be strings or integers");
        }
        return EventDef::levels(id, var, std::move(levels), label);
    }
    throw Error(Errc::ParseError, "event kind must be 'range' or 'levels'");
}

inline json window_to_json(const Window& w) { return {{"r", w.r}, {"s", w.s}}; }

inline Window window_from_json(const json& j) {
    return {detail::require_index(j, "r", "window"), detail::require_index(j, "s", "window")};
}

inline json effect_to_json(const EffectSpec& e) {
    json j;
    j["variable"] = e.variable;
    j["type"] = std::string(effect_type_name(e.type));
    j["event"] = e.event ? event_to_json(*e.event) : json(nullptr);
    j["p"] = detail::opt(e.p_threshold);
    return j;
}

inline EffectSpec effect_from_json(const json& j) {
    const auto type = parse_effect_type(detail::require_string(j, "type", "effect"));
    EffectSpec e;
    e.type = type;
    if (j.contains("event") && !j["event"].is_null()) e.event = event_from_json(j["event"]);
    if (j.contains("variable") && j["variable"].is_string()) e.variable = j["variable"].get<std::string>();
    else if (e.event) e.variable = e.event->variable;
    else throw Error(Errc::ParseError, "effect is missing field 'variable'");
    if (j.contains("p") && !j["p"].is_null()) {
        if (!j["p"].is_number()) throw Error(Errc::ParseError, "effect field 'p' must be a number");
        e.p_threshold = j["p"].get<double>();
    }
    if (type == EffectType::ValueIn && !e.event) throw Error(Errc::ParseError, "valuein effect needs an event");
    if (type != EffectType::ValueIn) e.event.reset();
    return e;
}

inline json histogram_to_json(const Histogram& h) { return {{"edges", h.edges}, {"counts", h.counts}}; }

inline json summary_to_json(const Dataset& ds, std::size_t bins = 20) {
    json vars = json::array();
    for (const auto& s : summary(ds, bins)) {
        json v;
        v["name"] = s.name;
        v["kind"] = std::string(kind_name(s.kind));
        v["count"] = s.count;
        v["missing"] = s.missing;
        if (s.kind == VarKind::Continuous) {
            v["min"] = s.min;
            v["max"] = s.max;
            v["mean"] = s.mean;
            v["histogram"] = histogram_to_json(s.histogram);
        } else {
            json freq = json::array();
            for (const auto& [label, count] : s.level_frequencies) freq.push_back({{"level", label}, {"count", count}});
            v["levels"] = freq;
        }
        vars.push_back(std::move(v));
    }
    return {{"name", ds.name()}, {"length", ds.length()}, {"variables", vars}, {"warnings", ds.warnings()}};
}

inline json report_to_json(const SignificanceReport& rep) {
    json causes = json::array();
    json order = json::array();
    json significant = json::array();
    for (const auto& c : rep.causes) {
        json m;
        m["event_id"] = c.event.id;
        m["event"] = event_to_json(c.event);
        m["elevation"] = c.elevation;
        m["conditional"] = c.conditional;
        m["eps_avg"] = detail::opt(c.eps_avg);
        m["eps_avg_reason"] = c.eps_avg ? json(nullptr) : json(c.eps_reason);
        m["occurrence_count"] = c.occurrence_count;
        m["is_potential"] = c.is_potential;
        m["is_significant"] = c.is_significant;
        m["terms_used"] = c.terms_used;
        m["terms_skipped"] = c.terms_skipped;
        causes.push_back(std::move(m));
        order.push_back(c.event.id);
        if (c.is_significant) significant.push_back(c.event.id);
    }
    json values = json::array();
    for (const auto& row : rep.matrix) {
        json r = json::array();
        for (const auto& v : row) r.push_back(detail::opt(v));
        values.push_back(std::move(r));
    }
    json combined;
    combined["base"] = rep.combined_base;
    combined["conditional"] = detail::opt(rep.combined_cond);
    combined["influence"] = rep.combined_cond ? json(*rep.combined_cond - rep.combined_base) : json(nullptr);
    combined["reason"] = rep.combined_cond ? json(nullptr) : json(rep.combined_reason);
    combined["occurrences"] = rep.combined_occurrences;
    combined["form"] = rep.effect.probability_form() ? "probability" : "expectation";

    json j;
    j["effect"] = effect_to_json(rep.effect);
    j["window"] = window_to_json(rep.window);
    j["epsilon"] = rep.epsilon;
    j["causes"] = causes;
    j["matrix"] = {{"order", order}, {"values", values}};
    j["combined"] = combined;
    j["significant"] = significant;
    j["warnings"] = rep.warnings;
    return j;
}

inline json profile_to_json(const DelayProfile& p) {
    json pts = json::array();
    for (const auto& pt : p.points) {
        pts.push_back({{"delay", pt.delay},
                       {"influence", detail::opt(pt.influence)},
                       {"conditional", detail::opt(pt.conditional)},
                       {"occurrences", pt.occurrences}});
    }
    return {{"max_delay", p.max_delay},
            {"effect_type", std::string(effect_type_name(p.effect_type))},
            {"base", p.base},
            {"peak_delay", detail::opt(p.peak_delay())},
            {"points", pts}};
}

inline json estimate_to_json(const EstimateResult& r) {
    json causes = json::array();
    for (const auto& c : r.causes)
        causes.push_back({{"event", event_to_json(c.event)}, {"cluster_support", c.cluster_support},
                          {"elevation", c.elevation}});
    json failures = json::array();
    for (const auto& f : r.failures)
        failures.push_back({{"variable", f.variable}, {"code", f.code}, {"message", f.message}});
    return {{"estimated", causes}, {"failures", failures}, {"without_candidate", r.without_candidate}};
}

inline json config_to_json(const EstimatorConfig& c) {
    return {{"theta_fraction", c.theta_fraction},
            {"max_iterations", c.max_iterations},
            {"min_cluster_mass", detail::opt(c.min_cluster_mass)},
            {"window", window_to_json(c.window)}};
}

inline EstimatorConfig config_from_json(const json& j, EstimatorConfig c = {}) {
    if (j.is_null()) return c;
    if (!j.is_object()) throw Error(Errc::ParseError, "estimator config must be an object");
    if (j.contains("theta_fraction")) c.theta_fraction = detail::require_number(j, "theta_fraction", "config");
    if (j.contains("max_iterations")) c.max_iterations = detail::require_index(j, "max_iterations", "config");
    if (j.contains("min_cluster_mass") && !j["min_cluster_mass"].is_null())
        c.min_cluster_mass = detail::require_index(j, "min_cluster_mass", "config");
    if (j.contains("window")) c.window = window_from_json(j["window"]);
    c.validate();
    return c;
}

inline json fingerprint_to_json(const Fingerprint& f) {
    return {{"name", f.name}, {"length", f.length}, {"variables", f.variables}, {"hash", f.hash}};
}

inline Fingerprint fingerprint_from_json(const json& j) {
    Fingerprint f;
    f.name = detail::require_string(j, "name", "fingerprint");
    f.length = detail::require_index(j, "length", "fingerprint");
    f.hash = detail::require_string(j, "hash", "fingerprint");
    const auto& vars = detail::require(j, "variables", "fingerprint");
    if (!vars.is_array()) throw Error(Errc::ParseError, "fingerprint variables must be an array");
    for (const auto& v : vars) {
        if (!v.is_string()) throw Error(Errc::ParseError, "fingerprint variables must be strings");
        f.variables.push_back(v.get<std::string>());
    }
    return f;
}

/// Canonical text form shared by the CLI and the server.
inline std::string to_text(const json& j) { return j.dump(2) + "\n"; }

} // namespace tempocause

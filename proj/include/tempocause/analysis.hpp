#pragma once

// Shared analysis pipeline used by both the CLI and the HTTP service, so the
// two front-ends produce byte-identical reports for identical inputs.

#include "tempocause/dataset.hpp"
#include "tempocause/estimate.hpp"
#include "tempocause/formula.hpp"
#include "tempocause/inference.hpp"
#include "tempocause/serialize.hpp"

#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace tempocause {

/// Parses "<var>:<increase|decrease|valuein>[:lo,hi]". For a discrete
/// variable the ValueIn constraint is a '|'-separated level list, e.g.
/// "weather:valuein:rain|snow".
inline EffectSpec parse_effect_arg(const Dataset& ds, const std::string& arg, std::optional<double> p = std::nullopt) {
    const auto first = arg.find(':');
    if (first == std::string::npos || first == 0)
        throw Error(Errc::ParseError, "effect must look like <var>:<increase|decrease|valuein>[:lo,hi]");
    const std::string var = arg.substr(0, first);
    const auto second = arg.find(':', first + 1);
    const std::string type_s = arg.substr(first + 1, second == std::string::npos ? std::string::npos : second - first - 1);
    const auto type = parse_effect_type(type_s);
    if (type != EffectType::ValueIn) {
        if (second != std::string::npos) throw Error(Errc::ParseError, "only valuein effects take a constraint");
        auto e = type == EffectType::Increase ? EffectSpec::increase(var) : EffectSpec::decrease(var);
        e.validate(ds);
        return e;
    }
    if (second == std::string::npos) throw Error(Errc::ParseError, "valuein effect needs a constraint after ':'");
    const std::string constraint = arg.substr(second + 1);
    const auto& v = ds.at(var);
    EventDef ev;
    if (v.is_continuous()) {
        const auto comma = constraint.find(',');
        if (comma == std::string::npos) throw Error(Errc::ParseError, "valuein range must be lo,hi");
        const auto lo = detail::parse_double(constraint.substr(0, comma));
        const auto hi = detail::parse_double(constraint.substr(comma + 1));
        if (!lo || !hi) throw Error(Errc::ParseError, "valuein range bounds must be numbers");
        ev = EventDef::range("effect", var, *lo, *hi);
    } else {
        std::vector<std::string> levels;
        std::stringstream ss(constraint);
        for (std::string l; std::getline(ss, l, '|');)
            if (!l.empty()) levels.push_back(l);
        ev = EventDef::levels("effect", var, levels);
    }
    auto e = EffectSpec::value_in(std::move(ev), p);
    e.validate(ds);
    return e;
}

inline std::vector<EventDef> causes_from_json(const json& j) {
    const json& arr = j.is_object() && j.contains("causes") ? j["causes"] : j;
    if (!arr.is_array()) throw Error(Errc::ParseError, "cause list must be a JSON array of events");
    std::vector<EventDef> out;
    for (const auto& e : arr) out.push_back(event_from_json(e));
    return out;
}

inline json causes_to_json(const std::vector<EventDef>& causes) {
    json arr = json::array();
    for (const auto& c : causes) arr.push_back(event_to_json(c));
    return arr;
}

/// Canonical report bytes for a query.
inline std::string report_text(const SignificanceReport& rep) { return to_text(report_to_json(rep)); }

inline std::string sweep_csv(const std::optional<DelayProfile>& prof) {
    std::string out = "delay,influence,conditional,base,occurrences\n";
    if (!prof) return out;
    for (const auto& p : prof->points) {
        out += std::to_string(p.delay) + ",";
        out += (p.influence ? detail::format_double(*p.influence) : "") + ",";
        out += (p.conditional ? detail::format_double(*p.conditional) : "") + ",";
        out += detail::format_double(prof->base) + "," + std::to_string(p.occurrences) + "\n";
    }
    return out;
}

namespace detail {

inline std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

} // namespace detail

inline std::string summary_markdown(const Dataset& ds, const SignificanceReport& rep,
                                    const std::optional<DelayProfile>& prof, const std::optional<EstimateResult>& est) {
    std::ostringstream md;
    md << "# Causal analysis: " << ds.name() << "\n\n";
    md << "- Time points: " << ds.length() << "\n";
    md << "- Effect: " << rep.effect.describe() << "\n";
    md << "- Window: [" << rep.window.r << ", " << rep.window.s << "]\n";
    md << "- Epsilon: " << detail::fixed(rep.epsilon) << "\n";
    md << "- Base " << (rep.effect.probability_form() ? "P(e)" : "E[v_e]") << ": " << detail::fixed(rep.combined_base)
       << "\n\n";
    if (est) {
        md << "## Estimated causes\n\n";
        for (const auto& c : est->causes)
            md << "- " << c.event.label << " (support " << c.cluster_support << ", elevation "
               << detail::fixed(c.elevation) << ")\n";
        for (const auto& v : est->without_candidate) md << "- " << v << ": no elevating event\n";
        for (const auto& f : est->failures) md << "- " << f.variable << ": " << f.code << "\n";
        md << "\n";
    }
    md << "## Causes (ordered by |eps_avg|)\n\n";
    md << "| event | occurrences | elevation | eps_avg | significant |\n";
    md << "|---|---|---|---|---|\n";
    for (const auto& c : rep.causes) {
        md << "| " << c.event.label << " | " << c.occurrence_count << " | " << detail::fixed(c.elevation) << " | "
           << (c.eps_avg ? detail::fixed(*c.eps_avg) : "undefined (" + c.eps_reason + ")") << " | "
           << (c.is_significant ? "yes" : "no") << " |\n";
    }
    md << "\n## Combined effect of significant causes\n\n";
    if (rep.combined_cond)
        md << "Conditional " << detail::fixed(*rep.combined_cond) << " vs base " << detail::fixed(rep.combined_base)
           << " (influence " << detail::fixed(*rep.combined_cond - rep.combined_base) << ", "
           << rep.combined_occurrences << " joint occurrences)\n";
    else
        md << "Not available: " << rep.combined_reason << "\n";
    if (prof) {
        md << "\n## Delay sweep\n\n";
        if (auto peak = prof->peak_delay()) md << "Peak combined influence at delay " << *peak << ".\n";
        else md << "No delay had joint occurrences.\n";
    }
    if (!rep.warnings.empty()) {
        md << "\n## Warnings\n\n";
        for (const auto& w : rep.warnings) md << "- " << w << "\n";
    }
    return md.str();
}

} // namespace tempocause

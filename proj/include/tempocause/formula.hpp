#pragma once

// State formulas (events over one variable), delay windows, effect specs,
// and leads-to satisfaction over label tracks.

#include "tempocause/dataset.hpp"
#include "tempocause/error.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace tempocause {

enum class Label : std::uint8_t { False = 0, True = 1, Missing = 2 };

using LabelTrack = std::vector<Label>;

struct Range {
    double lo = 0;
    double hi = 0;
    friend bool operator==(const Range&, const Range&) = default;
};

struct LevelSet {
    std::vector<std::string> levels;
    friend bool operator==(const LevelSet&, const LevelSet&) = default;
};

using Constraint = std::variant<Range, LevelSet>;

struct EventDef {
    std::string id;
    std::string variable;
    Constraint constraint;
    std::string label;

    static EventDef range(std::string id, std::string variable, double lo, double hi, std::string label = {}) {
        EventDef e{std::move(id), std::move(variable), Range{lo, hi}, std::move(label)};
        e.canonicalize();
        return e;
    }

    static EventDef levels(std::string id, std::string variable, std::vector<std::string> set,
                           std::string label = {}) {
        EventDef e{std::move(id), std::move(variable), LevelSet{std::move(set)}, std::move(label)};
        e.canonicalize();
        return e;
    }

    bool is_range() const noexcept { return std::holds_alternative<Range>(constraint); }
    const Range& as_range() const { return std::get<Range>(constraint); }
    const LevelSet& as_levels() const { return std::get<LevelSet>(constraint); }

    /// Sorted unique level labels, -0.0 folded to 0.0, default label filled.
    void canonicalize() {
        if (auto* r = std::get_if<Range>(&constraint)) {
            if (r->lo == 0.0) r->lo = 0.0;
            if (r->hi == 0.0) r->hi = 0.0;
        } else {
            auto& l = std::get<LevelSet>(constraint).levels;
            std::sort(l.begin(), l.end());
            l.erase(std::unique(l.begin(), l.end()), l.end());
        }
        if (label.empty()) label = describe();
    }

    std::string describe() const {
        if (const auto* r = std::get_if<Range>(&constraint))
            return variable + " in [" + detail::format_double(r->lo) + ", " + detail::format_double(r->hi) + "]";
        std::string s = variable + " in {";
        const auto& l = std::get<LevelSet>(constraint).levels;
        for (std::size_t i = 0; i < l.size(); ++i) s += (i ? ", " : "") + l[i];
        return s + "}";
    }

    /// Identity of the proposition itself (variable + canonical constraint),
    /// independent of id and display label.
    std::string key() const {
        if (const auto* r = std::get_if<Range>(&constraint))
            return variable + "|range|" + detail::format_double(r->lo) + "|" + detail::format_double(r->hi);
        std::string s = variable + "|levels";
        for (const auto& l : std::get<LevelSet>(constraint).levels) s += "|" + l;
        return s;
    }

    void validate(const Dataset& ds) const {
        if (id.empty()) throw Error(Errc::InvalidConstraint, "event id must be non-empty");
        const auto& v = ds.at(variable);
        if (const auto* r = std::get_if<Range>(&constraint)) {
            if (!v.is_continuous())
                throw Error(Errc::KindMismatch, "range constraint on discrete variable '" + variable + "'");
            if (!(r->lo <= r->hi))
                throw Error(Errc::InvalidConstraint, "range lower bound exceeds upper bound in '" + id + "'");
        } else {
            if (!v.is_discrete())
                throw Error(Errc::KindMismatch, "level constraint on continuous variable '" + variable + "'");
            const auto& l = std::get<LevelSet>(constraint).levels;
            if (l.empty()) throw Error(Errc::InvalidConstraint, "empty level set in '" + id + "'");
            for (const auto& lvl : l)
                if (!v.level_index(lvl))
                    throw Error(Errc::InvalidConstraint, "unknown level '" + lvl + "' for '" + variable + "'");
        }
    }

    friend bool operator==(const EventDef&, const EventDef&) = default;
};

/// Delay window [r, s] in index units.
struct Window {
    std::size_t r = 1;
    std::size_t s = 1;

    void validate(std::size_t length) const {
        if (r > s) throw Error(Errc::InvalidWindow, "window lower bound exceeds upper bound");
        if (s >= length) throw Error(Errc::InvalidWindow, "window upper bound must be below the series length");
    }

    friend bool operator==(const Window&, const Window&) = default;
};

enum class EffectType { Increase, Decrease, ValueIn };

inline std::string_view effect_type_name(EffectType t) {
    switch (t) {
    case EffectType::Increase: return "increase";
    case EffectType::Decrease: return "decrease";
    case EffectType::ValueIn: return "valuein";
    }
    return "valuein";
}

inline EffectType parse_effect_type(std::string_view s) {
    if (s == "increase") return EffectType::Increase;
    if (s == "decrease") return EffectType::Decrease;
    if (s == "valuein") return EffectType::ValueIn;
    throw Error(Errc::ParseError, "unknown effect type '" + std::string(s) + "'");
}

struct EffectSpec {
    EffectType type = EffectType::Increase;
    std::string variable;
    std::optional<EventDef> event;       // ValueIn only
    std::optional<double> p_threshold;   // ValueIn only; unset = strict elevation over P(e)

    static EffectSpec increase(std::string variable) { return {EffectType::Increase, std::move(variable), {}, {}}; }
    static EffectSpec decrease(std::string variable) { return {EffectType::Decrease, std::move(variable), {}, {}}; }
    static EffectSpec value_in(EventDef ev, std::optional<double> p = std::nullopt) {
        auto var = ev.variable;
        return {EffectType::ValueIn, std::move(var), std::move(ev), p};
    }

    bool probability_form() const noexcept { return type == EffectType::ValueIn; }

    /// Flow-graph identity: a ValueIn effect is the same node as the cause
    /// event with the same constraint; Increase/Decrease are keyed by variable.
    std::string key() const {
        if (type == EffectType::ValueIn && event) return event->key();
        return variable + "|" + std::string(effect_type_name(type));
    }

    std::string describe() const {
        if (type == EffectType::ValueIn && event) return event->label.empty() ? event->describe() : event->label;
        return variable + " " + std::string(effect_type_name(type));
    }

    void validate(const Dataset& ds) const {
        const auto& v = ds.at(variable);
        if (type == EffectType::ValueIn) {
            if (!event) throw Error(Errc::InvalidConstraint, "ValueIn effect requires an event");
            if (event->variable != variable)
                throw Error(Errc::InvalidConstraint, "effect event must be defined on the effect variable");
            event->validate(ds);
            if (p_threshold && !(*p_threshold > 0.0 && *p_threshold <= 1.0))
                throw Error(Errc::InvalidConstraint, "probability threshold must lie in (0, 1]");
        } else if (!v.is_continuous()) {
            throw Error(Errc::KindMismatch, "increase/decrease effects need a continuous variable");
        }
    }

    friend bool operator==(const EffectSpec&, const EffectSpec&) = default;
};

inline LabelTrack label_track(const Dataset& ds, const EventDef& ev) {
    ev.validate(ds);
    const auto& var = ds.at(ev.variable);
    LabelTrack out(ds.length(), Label::Missing);
    if (const auto* r = std::get_if<Range>(&ev.constraint)) {
        for (std::size_t t = 0; t < out.size(); ++t) {
            if (var.missing(t)) continue;
            out[t] = (var[t] >= r->lo && var[t] <= r->hi) ? Label::True : Label::False;
        }
    } else {
        std::vector<bool> member(var.levels().size(), false);
        for (const auto& l : std::get<LevelSet>(ev.constraint).levels) member[*var.level_index(l)] = true;
        for (std::size_t t = 0; t < out.size(); ++t) {
            if (var.missing(t)) continue;
            out[t] = member[static_cast<std::size_t>(var[t])] ? Label::True : Label::False;
        }
    }
    return out;
}

/// Same-time-point logical AND; Missing is absorbing.
inline LabelTrack conjoin(std::span<const LabelTrack> tracks) {
    if (tracks.empty()) throw Error(Errc::EmptyInput, "conjoin needs at least one track");
    LabelTrack out = tracks.front();
    for (std::size_t k = 1; k < tracks.size(); ++k) {
        if (tracks[k].size() != out.size()) throw Error(Errc::LengthMismatch, "label tracks differ in length");
        for (std::size_t t = 0; t < out.size(); ++t) {
            const Label a = out[t], b = tracks[k][t];
            if (a == Label::Missing || b == Label::Missing) out[t] = Label::Missing;
            else out[t] = (a == Label::True && b == Label::True) ? Label::True : Label::False;
        }
    }
    return out;
}

inline LabelTrack conjoin(const LabelTrack& a, const LabelTrack& b) {
    const LabelTrack pair[2] = {a, b};
    return conjoin(std::span<const LabelTrack>(pair, 2));
}

inline LabelTrack negate(const LabelTrack& track) {
    LabelTrack out(track.size());
    for (std::size_t t = 0; t < track.size(); ++t) {
        out[t] = track[t] == Label::Missing ? Label::Missing
               : track[t] == Label::True    ? Label::False
                                            : Label::True;
    }
    return out;
}

inline std::size_t count_true(const LabelTrack& track) {
    return static_cast<std::size_t>(std::count(track.begin(), track.end(), Label::True));
}

/// Whether the leads-to path starting at cause occurrence t holds: some
/// t' in [t+r, t+s] (clipped to the series) carries a true effect label.
inline bool satisfies_path(const LabelTrack& cause, const LabelTrack& effect, const Window& w, std::size_t t) {
    if (cause.size() != effect.size()) throw Error(Errc::LengthMismatch, "cause and effect tracks differ in length");
    if (t >= cause.size() || cause[t] != Label::True)
        throw Error(Errc::PreconditionViolation, "cause does not hold at t=" + std::to_string(t));
    if (w.r > w.s) throw Error(Errc::InvalidWindow, "window lower bound exceeds upper bound");
    const std::size_t n = effect.size();
    if (t + w.r >= n) return false;
    const std::size_t last = std::min(n - 1, t + w.s);
    for (std::size_t u = t + w.r; u <= last; ++u)
        if (effect[u] == Label::True) return true;
    return false;
}

} // namespace tempocause

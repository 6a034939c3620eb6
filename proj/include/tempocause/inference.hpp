#pragma once

// Lagged conditional probabilities/expectations, potential-cause tests,
// epsilon-average significance with pairwise screening, combined effects
// and delay sweeps.

#include "tempocause/dataset.hpp"
#include "tempocause/error.hpp"
#include "tempocause/formula.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace tempocause {

/// Result of one lagged conditioning. `value` is empty when the conditioning
/// event never occurs (NoOccurrences) or every in-window effect value is
/// missing (AllMissingInWindow); `failure` then names the reason.
struct Conditional {
    std::optional<double> value;
    std::size_t occurrences = 0;
    std::size_t pairs = 0;               // (t, t') pairs averaged, expectation form only
    std::size_t windows_with_missing = 0;
    std::optional<Errc> failure;
};

namespace detail {

inline std::size_t window_last(std::size_t t, const Window& w, std::size_t n) {
    return std::min(n - 1, t + w.s);
}

} // namespace detail

inline Conditional try_cond_probability(const LabelTrack& cause, const LabelTrack& effect, const Window& w) {
    if (cause.size() != effect.size()) throw Error(Errc::LengthMismatch, "cause and effect tracks differ in length");
    if (w.r > w.s) throw Error(Errc::InvalidWindow, "window lower bound exceeds upper bound");
    Conditional out;
    const std::size_t n = cause.size();
    std::size_t held = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (cause[t] != Label::True) continue;
        ++out.occurrences;
        if (t + w.r >= n) continue;
        bool hit = false, saw_missing = false;
        for (std::size_t u = t + w.r; u <= detail::window_last(t, w, n); ++u) {
            if (effect[u] == Label::True) hit = true;
            else if (effect[u] == Label::Missing) saw_missing = true;
        }
        if (saw_missing) ++out.windows_with_missing;
        if (hit) ++held;
    }
    if (out.occurrences == 0) {
        out.failure = Errc::NoOccurrences;
        return out;
    }
    out.value = static_cast<double>(held) / static_cast<double>(out.occurrences);
    return out;
}

inline Conditional try_cond_expectation(const LabelTrack& cause, std::span<const double> effect, const Window& w) {
    if (cause.size() != effect.size()) throw Error(Errc::LengthMismatch, "cause track and effect differ in length");
    if (w.r > w.s) throw Error(Errc::InvalidWindow, "window lower bound exceeds upper bound");
    Conditional out;
    const std::size_t n = cause.size();
    double sum = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (cause[t] != Label::True) continue;
        ++out.occurrences;
        if (t + w.r >= n) continue;
        bool saw_missing = false;
        for (std::size_t u = t + w.r; u <= detail::window_last(t, w, n); ++u) {
            if (is_missing(effect[u])) {
                saw_missing = true;
                continue;
            }
            sum += effect[u];
            ++out.pairs;
        }
        if (saw_missing) ++out.windows_with_missing;
    }
    if (out.occurrences == 0) out.failure = Errc::NoOccurrences;
    else if (out.pairs == 0) out.failure = Errc::AllMissingInWindow;
    else out.value = sum / static_cast<double>(out.pairs);
    return out;
}

inline double cond_probability(const LabelTrack& cause, const LabelTrack& effect, const Window& w) {
    auto c = try_cond_probability(cause, effect, w);
    if (!c.value) throw Error(Errc::NoOccurrences, "cause event never occurs");
    return *c.value;
}

inline double cond_expectation(const LabelTrack& cause, std::span<const double> effect, const Window& w) {
    auto c = try_cond_expectation(cause, effect, w);
    if (!c.value) {
        if (*c.failure == Errc::NoOccurrences) throw Error(Errc::NoOccurrences, "cause event never occurs");
        throw Error(Errc::AllMissingInWindow, "every effect value inside the window is missing");
    }
    return *c.value;
}

/// Effect bound to a dataset: its label track (ValueIn) or raw values
/// (Increase/Decrease), the unconditional base P(e) / E[v_e], and the
/// dead-band used for directional verdicts.
class BoundEffect {
public:
    BoundEffect(const Dataset& ds, EffectSpec spec) : spec_(std::move(spec)) {
        spec_.validate(ds);
        const auto& var = ds.at(spec_.variable);
        if (spec_.probability_form()) {
            track_ = label_track(ds, *spec_.event);
            std::size_t yes = 0, seen = 0;
            for (Label l : track_) {
                if (l == Label::Missing) continue;
                ++seen;
                if (l == Label::True) ++yes;
            }
            if (seen == 0) throw Error(Errc::NoOccurrences, "effect variable has no observed values");
            base_ = static_cast<double>(yes) / static_cast<double>(seen);
            dead_band_ = 1e-12;
        } else {
            values_ = var.values();
            double sum = 0;
            std::size_t seen = 0;
            for (double v : values_) {
                if (is_missing(v)) continue;
                sum += v;
                ++seen;
            }
            base_ = sum / static_cast<double>(seen);
            dead_band_ = 1e-9 * std::abs(var.range());
        }
    }

    const EffectSpec& spec() const noexcept { return spec_; }
    EffectType type() const noexcept { return spec_.type; }
    bool probability_form() const noexcept { return spec_.probability_form(); }
    double base() const noexcept { return base_; }
    double dead_band() const noexcept { return dead_band_; }
    const LabelTrack& track() const noexcept { return track_; }
    std::span<const double> values() const noexcept { return values_; }
    std::size_t length() const noexcept { return probability_form() ? track_.size() : values_.size(); }

    Conditional condition(const LabelTrack& cause, const Window& w) const {
        return probability_form() ? try_cond_probability(cause, track_, w) : try_cond_expectation(cause, values_, w);
    }

    /// Whether a raw effect slot "holds" the effect: the label for ValueIn,
    /// above/below the unconditional mean for Increase/Decrease.
    Label holds_at(std::size_t t) const {
        if (probability_form()) return track_[t];
        const double v = values_[t];
        if (is_missing(v)) return Label::Missing;
        if (spec_.type == EffectType::Increase) return v > base_ ? Label::True : Label::False;
        return v < base_ ? Label::True : Label::False;
    }

    LabelTrack holds_track() const {
        LabelTrack out(length());
        for (std::size_t t = 0; t < out.size(); ++t) out[t] = holds_at(t);
        return out;
    }

private:
    EffectSpec spec_;
    LabelTrack track_;
    std::span<const double> values_;
    double base_ = 0;
    double dead_band_ = 0;
};

struct PotentialCause {
    bool yes = false;
    double elevation = 0;   // conditional - base
    double conditional = 0;
    double base = 0;
    std::size_t occurrences = 0;
};

inline PotentialCause potential_cause_verdict(const BoundEffect& effect, const LabelTrack& cause, const Window& w) {
    auto c = effect.condition(cause, w);
    if (!c.value) {
        if (*c.failure == Errc::NoOccurrences) throw Error(Errc::NoOccurrences, "cause event never occurs");
        throw Error(Errc::AllMissingInWindow, "every effect value inside the window is missing");
    }
    PotentialCause out;
    out.conditional = *c.value;
    out.base = effect.base();
    out.elevation = out.conditional - out.base;
    out.occurrences = c.occurrences;
    switch (effect.type()) {
    case EffectType::ValueIn:
        if (const auto& p = effect.spec().p_threshold)
            out.yes = out.base < *p && out.conditional >= *p;
        else
            out.yes = out.conditional > out.base + effect.dead_band();
        break;
    case EffectType::Increase: out.yes = out.conditional > out.base + effect.dead_band(); break;
    case EffectType::Decrease: out.yes = out.conditional < out.base - effect.dead_band(); break;
    }
    return out;
}

inline PotentialCause is_potential_cause(const Dataset& ds, const EventDef& cause, const EffectSpec& effect,
                                         const Window& w) {
    w.validate(ds.length());
    const BoundEffect bound(ds, effect);
    return potential_cause_verdict(bound, label_track(ds, cause), w);
}

/// Average screened significance of one cause against the others.
struct EpsAverage {
    std::optional<double> value;
    std::vector<std::optional<double>> terms;  // aligned with X; empty at c itself and skipped terms
    std::size_t used = 0;
    std::size_t skipped = 0;
    std::string reason;                        // set when value is empty
};

/// Screening term for cause c held against x: effect under (c and x) minus
/// effect under (not c and x), same-time-point conjunctions.
inline std::optional<double> screening_term(const BoundEffect& effect, const LabelTrack& c, const LabelTrack& x,
                                            const Window& w) {
    const auto with = effect.condition(conjoin(c, x), w);
    if (!with.value) return std::nullopt;
    const auto without = effect.condition(conjoin(negate(c), x), w);
    if (!without.value) return std::nullopt;
    return *with.value - *without.value;
}

inline EpsAverage eps_average_tracks(const BoundEffect& effect, std::span<const LabelTrack> tracks, std::size_t c,
                                     const Window& w) {
    if (tracks.size() < 2)
        throw Error(Errc::InsufficientCauses, "average significance needs at least two potential causes");
    EpsAverage out;
    out.terms.assign(tracks.size(), std::nullopt);
    double sum = 0;
    for (std::size_t x = 0; x < tracks.size(); ++x) {
        if (x == c) continue;
        auto term = screening_term(effect, tracks[c], tracks[x], w);
        out.terms[x] = term;
        if (!term) {
            ++out.skipped;
            continue;
        }
        sum += *term;
        ++out.used;
    }
    if (out.used == 0) out.reason = "AllTermsSkipped";
    else out.value = sum / static_cast<double>(out.used);
    return out;
}

inline EpsAverage eps_average(const Dataset& ds, const EventDef& cause, std::span<const EventDef> causes,
                              const EffectSpec& effect, const Window& w) {
    if (causes.size() < 2)
        throw Error(Errc::InsufficientCauses, "average significance needs at least two potential causes");
    w.validate(ds.length());
    const BoundEffect bound(ds, effect);
    std::vector<LabelTrack> tracks;
    std::optional<std::size_t> index;
    for (std::size_t i = 0; i < causes.size(); ++i) {
        tracks.push_back(label_track(ds, causes[i]));
        if (causes[i].id == cause.id) index = i;
    }
    if (!index) throw Error(Errc::PreconditionViolation, "cause '" + cause.id + "' is not in the cause set");
    return eps_average_tracks(bound, tracks, *index, w);
}

struct CauseMeasure {
    EventDef event;
    double elevation = 0;
    double conditional = 0;
    std::optional<double> eps_avg;
    std::string eps_reason;              // "SingleCause" or "AllTermsSkipped" when eps_avg is empty
    std::size_t occurrence_count = 0;
    bool is_potential = false;
    bool is_significant = false;
    std::size_t terms_used = 0;
    std::size_t terms_skipped = 0;
};

struct SignificanceReport {
    EffectSpec effect;
    Window window;
    double epsilon = 0;
    std::vector<CauseMeasure> causes;                     // sorted by |eps_avg| desc
    std::vector<std::vector<std::optional<double>>> matrix;  // rows/cols in `causes` order
    double combined_base = 0;
    std::optional<double> combined_cond;
    std::string combined_reason;
    std::size_t combined_occurrences = 0;
    std::vector<std::string> warnings;

    std::vector<EventDef> significant_events() const {
        std::vector<EventDef> out;
        for (const auto& c : causes)
            if (c.is_significant) out.push_back(c.event);
        return out;
    }
};

namespace detail {

inline double sort_key(const CauseMeasure& c) { return c.eps_avg ? std::abs(*c.eps_avg) : -1.0; }

inline void combine(const Dataset& ds, const BoundEffect& effect, SignificanceReport& rep) {
    rep.combined_base = effect.base();
    rep.combined_cond.reset();
    rep.combined_occurrences = 0;
    rep.combined_reason.clear();
    std::vector<LabelTrack> tracks;
    for (const auto& c : rep.causes)
        if (c.is_significant) tracks.push_back(label_track(ds, c.event));
    if (tracks.empty()) {
        rep.combined_reason = "NoSignificantCauses";
        return;
    }
    const auto cond = effect.condition(conjoin(tracks), rep.window);
    rep.combined_occurrences = cond.occurrences;
    if (cond.value) rep.combined_cond = cond.value;
    else rep.combined_reason = std::string(errc_name(*cond.failure));
}

} // namespace detail

/// Re-applies a threshold: flags and the combined measure change, the
/// screened averages (computed against the full cause set) do not.
inline void apply_threshold(const Dataset& ds, const BoundEffect& effect, SignificanceReport& rep, double epsilon) {
    rep.epsilon = epsilon;
    const bool single = rep.causes.size() < 2;
    for (auto& c : rep.causes) {
        if (single) c.is_significant = std::abs(c.elevation) >= epsilon;
        else c.is_significant = c.eps_avg && std::abs(*c.eps_avg) >= epsilon;
    }
    detail::combine(ds, effect, rep);
}

inline SignificanceReport significance_report(const Dataset& ds, std::span<const EventDef> causes,
                                              const EffectSpec& effect, const Window& w, double epsilon) {
    if (causes.empty()) throw Error(Errc::EmptyCauseSet, "significance report needs at least one cause");
    w.validate(ds.length());
    if (!(epsilon >= 0)) throw Error(Errc::InvalidConfig, "epsilon must be non-negative");
    std::unordered_set<std::string> ids;
    for (const auto& c : causes) {
        if (!ids.insert(c.id).second) throw Error(Errc::PreconditionViolation, "duplicate cause id '" + c.id + "'");
        if (c.variable == effect.variable)
            throw Error(Errc::KindMismatch, "cause '" + c.id + "' is defined on the effect variable");
    }
    const BoundEffect bound(ds, effect);

    SignificanceReport rep;
    rep.effect = effect;
    rep.window = w;
    const std::size_t n = causes.size();
    std::vector<LabelTrack> tracks;
    tracks.reserve(n);
    for (const auto& c : causes) tracks.push_back(label_track(ds, c));

    std::vector<CauseMeasure> measures(n);
    std::vector<std::vector<std::optional<double>>> raw(n, std::vector<std::optional<double>>(n));
    std::size_t windows = 0, windows_missing = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto& m = measures[i];
        m.event = causes[i];
        const auto cond = bound.condition(tracks[i], w);
        if (!cond.value)
            throw Error(*cond.failure, "cause '" + causes[i].id + "': " +
                                           (*cond.failure == Errc::NoOccurrences
                                                ? "event never occurs"
                                                : "every effect value inside the window is missing"));
        windows += cond.occurrences;
        windows_missing += cond.windows_with_missing;
        const auto verdict = potential_cause_verdict(bound, tracks[i], w);
        m.conditional = verdict.conditional;
        m.elevation = verdict.elevation;
        m.is_potential = verdict.yes;
        m.occurrence_count = cond.occurrences;
        raw[i][i] = m.elevation;
        if (n < 2) {
            m.eps_reason = "SingleCause";
            continue;
        }
        auto eps = eps_average_tracks(bound, tracks, i, w);
        m.eps_avg = eps.value;
        m.eps_reason = eps.reason;
        m.terms_used = eps.used;
        m.terms_skipped = eps.skipped;
        for (std::size_t x = 0; x < n; ++x)
            if (x != i) raw[i][x] = eps.terms[x];
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ka = detail::sort_key(measures[a]), kb = detail::sort_key(measures[b]);
        if (ka != kb) return ka > kb;
        const double ea = std::abs(measures[a].elevation), eb = std::abs(measures[b].elevation);
        if (ea != eb) return ea > eb;
        return measures[a].event.id < measures[b].event.id;
    });
    rep.causes.reserve(n);
    rep.matrix.assign(n, std::vector<std::optional<double>>(n));
    for (std::size_t i = 0; i < n; ++i) {
        rep.causes.push_back(measures[order[i]]);
        for (std::size_t j = 0; j < n; ++j) rep.matrix[i][j] = raw[order[i]][order[j]];
    }

    if (w.r == 0 && w.s == 0)
        rep.warnings.push_back("window [0,0]: screening compares same-time events only; widen the window so "
                               "competing causes can act");
    if (windows > 0 && static_cast<double>(windows_missing) > 0.05 * static_cast<double>(windows))
        rep.warnings.push_back("more than 5% of cause windows contain missing effect values (treated as not-true)");
    for (const auto& m : rep.causes)
        if (m.terms_skipped > 0)
            rep.warnings.push_back("cause '" + m.event.id + "': " + std::to_string(m.terms_skipped) +
                                   " screening term(s) skipped because a conditioning event never occurs");

    apply_threshold(ds, bound, rep, epsilon);
    return rep;
}

struct DelayPoint {
    std::size_t delay = 0;
    std::optional<double> influence;    // conditional - base; empty renders as a gap
    std::optional<double> conditional;
    std::size_t occurrences = 0;
};

struct DelayProfile {
    std::size_t max_delay = 0;
    EffectType effect_type = EffectType::Increase;
    double base = 0;
    std::vector<DelayPoint> points;

    /// Delay of the strongest influence in the effect's direction
    /// (most negative for Decrease); earliest delay wins ties.
    std::optional<std::size_t> peak_delay() const {
        std::optional<std::size_t> best;
        double best_value = 0;
        for (const auto& p : points) {
            if (!p.influence) continue;
            const double v = effect_type == EffectType::Decrease ? -*p.influence : *p.influence;
            if (!best || v > best_value) {
                best = p.delay;
                best_value = v;
            }
        }
        return best;
    }
};

inline DelayProfile delay_sweep(const Dataset& ds, std::span<const EventDef> significant, const EffectSpec& effect,
                                std::size_t max_delay) {
    if (significant.empty()) throw Error(Errc::EmptyCauseSet, "delay sweep needs a non-empty cause set");
    if (max_delay < 1) throw Error(Errc::InvalidWindow, "maximum delay must be at least 1");
    const BoundEffect bound(ds, effect);
    std::vector<LabelTrack> tracks;
    for (const auto& c : significant) tracks.push_back(label_track(ds, c));
    const LabelTrack combined = conjoin(tracks);

    DelayProfile prof;
    prof.max_delay = max_delay;
    prof.effect_type = effect.type;
    prof.base = bound.base();
    prof.points.resize(max_delay + 1);
    for (std::size_t d = 0; d <= max_delay; ++d) {
        auto& p = prof.points[d];
        p.delay = d;
        if (d >= ds.length()) continue;
        const auto cond = bound.condition(combined, Window{d, d});
        p.occurrences = cond.occurrences;
        if (!cond.value) continue;
        p.conditional = cond.value;
        p.influence = *cond.value - prof.base;
    }
    return prof;
}

} // namespace tempocause

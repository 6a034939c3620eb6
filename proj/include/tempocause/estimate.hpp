#pragma once

// Automated estimation of potential causes: incremental 1-D clustering of
// the cause values that precede the effect, then range/level candidates
// screened by the potential-cause test.

#include "tempocause/dataset.hpp"
#include "tempocause/error.hpp"
#include "tempocause/formula.hpp"
#include "tempocause/inference.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tempocause {

struct EstimatorConfig {
    double theta_fraction = 0.15;
    std::size_t max_iterations = 5;
    std::optional<std::size_t> min_cluster_mass;  // default max(2, ceil(1% of |T_c|))
    Window window;

    void validate() const {
        if (!(theta_fraction > 0.0 && theta_fraction <= 1.0))
            throw Error(Errc::InvalidConfig, "theta fraction must lie in (0, 1]");
        if (max_iterations < 1) throw Error(Errc::InvalidConfig, "max iterations must be at least 1");
        if (min_cluster_mass && *min_cluster_mass < 1)
            throw Error(Errc::InvalidConfig, "min cluster mass must be at least 1");
    }

    std::size_t mass_floor(std::size_t evidence) const {
        if (min_cluster_mass) return *min_cluster_mass;
        const auto pct = static_cast<std::size_t>(std::ceil(0.01 * static_cast<double>(evidence)));
        return std::max<std::size_t>(2, pct);
    }
};

struct ClusterParams {
    double theta = 0;           // absolute distance threshold
    std::size_t max_iterations = 5;
    std::size_t min_mass = 2;
};

struct Cluster {
    double center = 0;
    std::vector<double> members;
    double lo = 0;
    double hi = 0;
};

struct ClusterResult {
    std::vector<Cluster> clusters;
    std::size_t iterations = 0;
    bool converged = false;
};

/// v_c(t) for every t whose window [t+r, t+s] contains a time where the
/// effect holds, in time order.
inline std::vector<double> collect_preceding_values(const Dataset& ds, const std::string& cause_var,
                                                    const BoundEffect& effect, const Window& w) {
    w.validate(ds.length());
    const auto& var = ds.at(cause_var);
    const LabelTrack holds = effect.holds_track();
    std::vector<double> out;
    const std::size_t n = ds.length();
    for (std::size_t t = 0; t < n; ++t) {
        if (var.missing(t) || t + w.r >= n) continue;
        const std::size_t last = std::min(n - 1, t + w.s);
        for (std::size_t u = t + w.r; u <= last; ++u) {
            if (holds[u] == Label::True) {
                out.push_back(var[t]);
                break;
            }
        }
    }
    if (out.empty())
        throw Error(Errc::NoEvidence, "no value of '" + cause_var + "' is followed by the effect in the window");
    return out;
}

inline std::vector<double> collect_preceding_values(const Dataset& ds, const std::string& cause_var,
                                                    const EffectSpec& effect, const Window& w) {
    return collect_preceding_values(ds, cause_var, BoundEffect(ds, effect), w);
}

/// Incremental 1-D clustering. Each pass assigns every value, in input
/// order, to the nearest center closer than theta, or opens a new center at
/// the value. Centers then move to their member means and clusters lighter
/// than min_mass are dropped. Stops when a pass leaves the surviving centers
/// exactly where they started, or after max_iterations passes. The outcome
/// depends on input order.
inline ClusterResult incremental_cluster(std::span<const double> values, const ClusterParams& params) {
    ClusterResult res;
    if (values.empty()) return res;
    std::vector<double> centers{values.front()};
    std::vector<std::vector<double>> members;
    for (std::size_t iter = 1; iter <= params.max_iterations; ++iter) {
        res.iterations = iter;
        const std::vector<double> start = centers;
        members.assign(centers.size(), {});
        for (double v : values) {
            std::optional<std::size_t> best;
            double best_dist = 0;
            for (std::size_t k = 0; k < centers.size(); ++k) {
                const double d = std::abs(centers[k] - v);
                if ((d < params.theta || d == 0.0) && (!best || d < best_dist)) {
                    best = k;
                    best_dist = d;
                }
            }
            if (best) {
                members[*best].push_back(v);
            } else {
                centers.push_back(v);
                members.push_back({v});
            }
        }
        std::vector<double> next;
        std::vector<std::vector<double>> kept;
        for (std::size_t k = 0; k < centers.size(); ++k) {
            if (members[k].size() < params.min_mass) continue;
            double sum = 0;
            for (double m : members[k]) sum += m;
            next.push_back(sum / static_cast<double>(members[k].size()));
            kept.push_back(std::move(members[k]));
        }
        centers = std::move(next);
        members = std::move(kept);
        if (centers == start) {
            res.converged = true;
            break;
        }
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
        Cluster c;
        c.center = centers[k];
        c.members = std::move(members[k]);
        const auto [lo, hi] = std::minmax_element(c.members.begin(), c.members.end());
        c.lo = *lo;
        c.hi = *hi;
        res.clusters.push_back(std::move(c));
    }
    return res;
}

struct EstimatedCause {
    EventDef event;
    std::size_t cluster_support = 0;
    double elevation = 0;
};

namespace detail {

inline std::string estimated_id(const std::string& var) { return "est:" + var; }

/// Elevation oriented so that larger is better for the effect's direction.
inline double oriented(EffectType t, double elevation) { return t == EffectType::Decrease ? -elevation : elevation; }

struct RangeCandidate {
    double lo, hi, elevation;
};

} // namespace detail

inline std::optional<EstimatedCause> estimate_cause(const Dataset& ds, const std::string& cause_var,
                                                    const BoundEffect& effect, const EstimatorConfig& cfg) {
    cfg.validate();
    const auto& var = ds.at(cause_var);
    if (!var.is_continuous())
        throw Error(Errc::KindMismatch, "range estimation needs a continuous variable, '" + cause_var + "' is discrete");
    const auto evidence = collect_preceding_values(ds, cause_var, effect, cfg.window);
    const ClusterParams params{cfg.theta_fraction * var.range(), cfg.max_iterations, cfg.mass_floor(evidence.size())};
    const auto clusters = incremental_cluster(evidence, params);

    const std::string id = detail::estimated_id(cause_var);
    auto test = [&](double lo, double hi) -> std::optional<detail::RangeCandidate> {
        const auto ev = EventDef::range(id, cause_var, lo, hi);
        const auto verdict = potential_cause_verdict(effect, label_track(ds, ev), cfg.window);
        if (!verdict.yes) return std::nullopt;
        return detail::RangeCandidate{lo, hi, verdict.elevation};
    };

    std::vector<detail::RangeCandidate> passing;
    for (const auto& k : clusters.clusters)
        if (auto c = test(k.lo, k.hi)) passing.push_back(*c);
    if (passing.empty()) return std::nullopt;

    // Overlapping or touching ranges are unioned; a union that no longer
    // passes is discarded in favour of its parts. Two ranges touch when no
    // evidence value lies strictly between them, i.e. they are neighbouring
    // clusters with nothing (not even a dropped outlier) in the gap.
    std::sort(passing.begin(), passing.end(), [](const auto& a, const auto& b) {
        return a.lo != b.lo ? a.lo < b.lo : a.hi < b.hi;
    });
    std::vector<double> sorted_evidence = evidence;
    std::sort(sorted_evidence.begin(), sorted_evidence.end());
    auto touches = [&](double hi, double lo) {
        if (lo <= hi) return true;
        const auto it = std::upper_bound(sorted_evidence.begin(), sorted_evidence.end(), hi);
        return it == sorted_evidence.end() || *it >= lo;
    };
    std::vector<detail::RangeCandidate> merged;
    for (std::size_t i = 0; i < passing.size();) {
        std::size_t j = i + 1;
        double hi = passing[i].hi;
        while (j < passing.size() && touches(hi, passing[j].lo)) {
            hi = std::max(hi, passing[j].hi);
            ++j;
        }
        if (j - i == 1) {
            merged.push_back(passing[i]);
        } else if (auto u = test(passing[i].lo, hi)) {
            merged.push_back(*u);
        } else {
            merged.insert(merged.end(), passing.begin() + static_cast<std::ptrdiff_t>(i),
                          passing.begin() + static_cast<std::ptrdiff_t>(j));
        }
        i = j;
    }

    const auto best = std::max_element(merged.begin(), merged.end(), [&](const auto& a, const auto& b) {
        const double oa = detail::oriented(effect.type(), a.elevation);
        const double ob = detail::oriented(effect.type(), b.elevation);
        if (oa != ob) return oa < ob;
        return a.lo > b.lo;
    });
    EstimatedCause out;
    out.event = EventDef::range(id, cause_var, best->lo, best->hi);
    out.elevation = best->elevation;
    for (double v : evidence)
        if (v >= best->lo && v <= best->hi) ++out.cluster_support;
    return out;
}

inline std::optional<EstimatedCause> estimate_cause(const Dataset& ds, const std::string& cause_var,
                                                    const EffectSpec& effect, const EstimatorConfig& cfg) {
    return estimate_cause(ds, cause_var, BoundEffect(ds, effect), cfg);
}

/// Level scan for a discrete variable: every level that passes the
/// potential-cause test joins one LevelSet event.
inline std::optional<EstimatedCause> estimate_levels(const Dataset& ds, const std::string& cause_var,
                                                     const BoundEffect& effect, const EstimatorConfig& cfg) {
    cfg.validate();
    const auto& var = ds.at(cause_var);
    if (!var.is_discrete()) throw Error(Errc::KindMismatch, "level scan needs a discrete variable");
    const std::string id = detail::estimated_id(cause_var);
    std::vector<std::string> selected;
    std::optional<EstimatedCause> best_single;
    for (const auto& level : var.levels()) {
        auto ev = EventDef::levels(id, cause_var, {level});
        const auto track = label_track(ds, ev);
        if (count_true(track) == 0) continue;
        const auto cond = effect.condition(track, cfg.window);
        if (!cond.value) continue;
        const auto verdict = potential_cause_verdict(effect, track, cfg.window);
        if (!verdict.yes) continue;
        selected.push_back(level);
        if (!best_single || detail::oriented(effect.type(), verdict.elevation) >
                                detail::oriented(effect.type(), best_single->elevation))
            best_single = EstimatedCause{ev, 0, verdict.elevation};
    }
    if (selected.empty()) return std::nullopt;

    EstimatedCause out;
    out.event = EventDef::levels(id, cause_var, selected);
    const auto verdict = potential_cause_verdict(effect, label_track(ds, out.event), cfg.window);
    if (verdict.yes) out.elevation = verdict.elevation;
    else out = *best_single;

    const LabelTrack holds = effect.holds_track();
    const auto track = label_track(ds, out.event);
    const std::size_t n = ds.length();
    for (std::size_t t = 0; t < n; ++t) {
        if (track[t] != Label::True || t + cfg.window.r >= n) continue;
        for (std::size_t u = t + cfg.window.r; u <= std::min(n - 1, t + cfg.window.s); ++u) {
            if (holds[u] == Label::True) {
                ++out.cluster_support;
                break;
            }
        }
    }
    return out;
}

struct EstimateFailure {
    std::string variable;
    std::string code;
    std::string message;
};

struct EstimateResult {
    std::vector<EstimatedCause> causes;   // dataset variable order
    std::vector<EstimateFailure> failures;
    std::vector<std::string> without_candidate;  // variables scanned with no passing event

    std::vector<EventDef> events() const {
        std::vector<EventDef> out;
        for (const auto& c : causes) out.push_back(c.event);
        return out;
    }
};

inline EstimateResult estimate_all(const Dataset& ds, const EffectSpec& effect, const EstimatorConfig& cfg,
                                   const std::set<std::string>& exclude = {}) {
    cfg.validate();
    cfg.window.validate(ds.length());
    const BoundEffect bound(ds, effect);
    EstimateResult res;
    for (const auto& var : ds.variables()) {
        if (var.name() == effect.variable || exclude.count(var.name())) continue;
        try {
            auto est = var.is_continuous() ? estimate_cause(ds, var.name(), bound, cfg)
                                           : estimate_levels(ds, var.name(), bound, cfg);
            if (est) res.causes.push_back(std::move(*est));
            else res.without_candidate.push_back(var.name());
        } catch (const Error& e) {
            res.failures.push_back({var.name(), std::string(e.code_name()), e.what()});
        }
    }
    return res;
}

} // namespace tempocause

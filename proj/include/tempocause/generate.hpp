#pragma once

// Synthetic scenario generators with planted ground truth. Output is a CSV
// text plus a JSON sidecar; both are a pure function of (scenario, seed).

#include "tempocause/dataset.hpp"
#include "tempocause/error.hpp"
#include "tempocause/serialize.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace tempocause::gen {

/// Portable variates on top of mt19937_64 (the standard distributions are
/// implementation-defined, these are not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    bool bernoulli(double p) { return uniform() < p; }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

    double normal(double mean = 0, double sd = 1) {
        if (spare_) {
            const double z = *spare_;
            spare_.reset();
            return mean + sd * z;
        }
        double u1 = uniform();
        while (u1 <= 0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        return mean + sd * r * std::cos(2.0 * M_PI * u2);
    }

private:
    std::mt19937_64 eng_;
    std::optional<double> spare_;
};

struct Column {
    std::string name;
    std::vector<std::string> cells;
};

struct Generated {
    std::string csv;
    json truth;
};

struct ScenarioOptions {
    std::uint64_t seed = 0;
    std::optional<std::size_t> length;
    std::optional<std::size_t> lag;
};

namespace detail {

inline std::string num(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline std::string to_csv(const std::vector<Column>& cols) {
    std::string out;
    for (std::size_t j = 0; j < cols.size(); ++j) out += (j ? "," : "") + cols[j].name;
    out += "\n";
    const std::size_t n = cols.front().cells.size();
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t j = 0; j < cols.size(); ++j) out += (j ? "," : "") + cols[j].cells[t];
        out += "\n";
    }
    return out;
}

inline std::vector<int> bernoulli_series(Rng& rng, std::size_t n, double p) {
    std::vector<int> out(n);
    for (auto& v : out) v = rng.bernoulli(p) ? 1 : 0;
    return out;
}

inline std::vector<std::string> ints(const std::vector<int>& v) {
    std::vector<std::string> out;
    out.reserve(v.size());
    for (int x : v) out.push_back(std::to_string(x));
    return out;
}

inline json relation(const std::string& cause, json constraint, const std::string& effect, json effect_constraint,
                     std::size_t delay) {
    return {{"cause", cause}, {"cause_constraint", std::move(constraint)}, {"effect", effect},
            {"effect_constraint", std::move(effect_constraint)}, {"delay", delay}};
}

inline json levels(std::vector<std::string> l) { return {{"kind", "levels"}, {"levels", std::move(l)}}; }
inline json range(double lo, double hi) { return {{"kind", "range"}, {"lo", lo}, {"hi", hi}}; }

} // namespace detail

/// Binary cause; the effect copies it k steps later with 5% label flips.
inline Generated shift(const ScenarioOptions& o) {
    Rng rng(o.seed);
    const std::size_t n = o.length.value_or(1000);
    const std::size_t k = o.lag.value_or(1 + o.seed % 6);
    const auto cause = detail::bernoulli_series(rng, n, 0.3);
    std::vector<int> effect(n);
    for (std::size_t t = 0; t < n; ++t) {
        int v = t >= k ? cause[t - k] : (rng.bernoulli(0.3) ? 1 : 0);
        if (rng.bernoulli(0.05)) v = 1 - v;
        effect[t] = v;
    }
    std::vector<std::string> noise;
    for (std::size_t t = 0; t < n; ++t) noise.push_back(detail::num(rng.normal()));
    Generated g;
    g.csv = detail::to_csv({{"cause", detail::ints(cause)}, {"effect", detail::ints(effect)}, {"noise", noise}});
    g.truth = {{"scenario", "shift"},
               {"seed", o.seed},
               {"length", n},
               {"relations", json::array({detail::relation("cause", detail::levels({"1"}), "effect",
                                                           detail::levels({"1"}), k)})}};
    return g;
}

/// A continuous driver raises the effect d steps after it falls in [a, b];
/// a binary confounder raises the effect d steps later and drives a
/// same-time decoy, which therefore looks like a cause at lag d.
inline Generated planted_range(const ScenarioOptions& o) {
    Rng rng(o.seed);
    const std::size_t n = o.length.value_or(1000);
    const std::size_t d = o.lag.value_or(1 + o.seed % 3);
    const double a = std::round(rng.uniform(1.0, 6.0) * 100.0) / 100.0;
    const double b = a + 3.0;
    std::vector<double> driver(n), decoy(n), effect(n), noise(n);
    std::vector<int> conf = detail::bernoulli_series(rng, n, 0.3);
    std::vector<std::string> color(n);
    static const std::array<const char*, 3> colors{"red", "green", "blue"};
    for (std::size_t t = 0; t < n; ++t) {
        driver[t] = rng.uniform(0.0, 10.0);
        decoy[t] = 2.0 + 4.0 * conf[t] + rng.normal(0, 1.0);
        noise[t] = rng.normal();
        color[t] = colors[rng.index(3)];
    }
    for (std::size_t t = 0; t < n; ++t) {
        double v = rng.normal(0, 0.5);
        if (t >= d) {
            if (driver[t - d] >= a && driver[t - d] <= b) v += 3.0;
            if (conf[t - d]) v += 3.0;
        }
        effect[t] = v;
    }
    auto fmt = [](const std::vector<double>& v) {
        std::vector<std::string> out;
        for (double x : v) out.push_back(detail::num(x));
        return out;
    };
    Generated g;
    g.csv = detail::to_csv({{"driver", fmt(driver)},
                            {"confounder", detail::ints(conf)},
                            {"decoy", fmt(decoy)},
                            {"noise", fmt(noise)},
                            {"color", color},
                            {"effect", fmt(effect)}});
    g.truth = {{"scenario", "planted-range"},
               {"seed", o.seed},
               {"length", n},
               {"effect_type", "increase"},
               {"relations", json::array({detail::relation("driver", detail::range(a, b), "effect", nullptr, d),
                                          detail::relation("confounder", detail::levels({"1"}), "effect", nullptr, d)})},
               {"decoys", json::array({{{"variable", "decoy"}, {"driven_by", "confounder"}, {"lag", 0}}})}};
    return g;
}

/// Mediated chain x -> c -> e, one step per link; x is persistent so it
/// also correlates with e at lag 1 without acting on it directly.
inline Generated chain(const ScenarioOptions& o) {
    Rng rng(o.seed);
    const std::size_t n = o.length.value_or(1000);
    std::vector<int> x(n), c(n), e(n);
    x[0] = rng.bernoulli(0.5) ? 1 : 0;
    for (std::size_t t = 1; t < n; ++t) x[t] = rng.bernoulli(0.9) ? x[t - 1] : 1 - x[t - 1];
    for (std::size_t t = 0; t < n; ++t) {
        c[t] = (t >= 1 && rng.bernoulli(0.9)) ? x[t - 1] : (rng.bernoulli(0.3) ? 1 : 0);
        e[t] = (t >= 1 && rng.bernoulli(0.9)) ? c[t - 1] : (rng.bernoulli(0.3) ? 1 : 0);
    }
    Generated g;
    g.csv = detail::to_csv({{"x", detail::ints(x)}, {"c", detail::ints(c)}, {"e", detail::ints(e)}});
    g.truth = {{"scenario", "chain"},
               {"seed", o.seed},
               {"length", n},
               {"relations", json::array({detail::relation("x", detail::levels({"1"}), "c", detail::levels({"1"}), 1),
                                          detail::relation("c", detail::levels({"1"}), "e", detail::levels({"1"}), 1)})}};
    return g;
}

/// Mutually independent series, no relations.
inline Generated null_scenario(const ScenarioOptions& o) {
    Rng rng(o.seed);
    const std::size_t n = o.length.value_or(500);
    std::vector<Column> cols;
    for (const char* name : {"a", "b", "c"}) cols.push_back({name, detail::ints(detail::bernoulli_series(rng, n, 0.3))});
    for (const char* name : {"u", "v"}) {
        Column col{name, {}};
        for (std::size_t t = 0; t < n; ++t) col.cells.push_back(detail::num(rng.normal()));
        cols.push_back(std::move(col));
    }
    cols.push_back({"effect", detail::ints(detail::bernoulli_series(rng, n, 0.3))});
    Column y{"y", {}};
    for (std::size_t t = 0; t < n; ++t) y.cells.push_back(detail::num(rng.normal(10, 2)));
    cols.push_back(std::move(y));
    Generated g;
    g.csv = detail::to_csv(cols);
    g.truth = {{"scenario", "null"}, {"seed", o.seed}, {"length", n}, {"relations", json::array()}};
    return g;
}

/// Hourly glucose with a fast insulin acting at lag 1 (weaker at 2) and a
/// slow insulin acting at lags 3-5, strongest at 4. Insulin columns have
/// missing slots (no dose recorded).
inline Generated glucose(const ScenarioOptions& o) {
    Rng rng(o.seed);
    const std::size_t n = o.length.value_or(2000);
    static const std::array<const char*, 3> levels{"low", "normal", "high"};
    auto dose = [&](double missing) -> int {
        if (rng.bernoulli(missing)) return -1;
        const double u = rng.uniform();
        return u < 0.35 ? 0 : (u < 0.7 ? 1 : 2);
    };
    std::vector<int> fast(n), slow(n), exercise(n);
    for (std::size_t t = 0; t < n; ++t) {
        fast[t] = dose(0.4);
        slow[t] = dose(0.3);
        exercise[t] = rng.bernoulli(0.2) ? 1 : 0;
    }
    auto is = [](const std::vector<int>& v, std::size_t t, std::size_t lag, int level) {
        return t >= lag && v[t - lag] == level;
    };
    std::vector<std::string> hour, g_cells, f_cells, s_cells, e_cells;
    for (std::size_t t = 0; t < n; ++t) {
        double g = 150.0 + rng.normal(0, 6.0);
        if (is(fast, t, 1, 2)) g -= 25.0;
        if (is(fast, t, 1, 1)) g -= 8.0;
        if (is(fast, t, 2, 2)) g -= 8.0;
        if (is(slow, t, 3, 2)) g -= 10.0;
        if (is(slow, t, 4, 2)) g -= 35.0;
        if (is(slow, t, 4, 1)) g -= 10.0;
        if (is(slow, t, 5, 2)) g -= 10.0;
        hour.push_back(std::to_string(t));
        g_cells.push_back(detail::num(g, 1));
        f_cells.push_back(fast[t] < 0 ? "" : levels[static_cast<std::size_t>(fast[t])]);
        s_cells.push_back(slow[t] < 0 ? "" : levels[static_cast<std::size_t>(slow[t])]);
        e_cells.push_back(std::to_string(exercise[t]));
    }
    Generated out;
    out.csv = detail::to_csv({{"hour", hour},
                              {"Glucose", g_cells},
                              {"RegularIns", f_cells},
                              {"UltralenteIns", s_cells},
                              {"Exercise", e_cells}});
    out.truth = {{"scenario", "glucose"},
                 {"seed", o.seed},
                 {"length", n},
                 {"time_col", "hour"},
                 {"effect_type", "decrease"},
                 {"relations", json::array({detail::relation("RegularIns", detail::levels({"high"}), "Glucose", nullptr, 1),
                                            detail::relation("UltralenteIns", detail::levels({"high"}), "Glucose", nullptr, 4)})}};
    return out;
}

inline const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"shift", "planted-range", "chain", "null", "glucose"};
    return names;
}

inline Generated generate(const std::string& scenario, const ScenarioOptions& o) {
    if (scenario == "shift") return shift(o);
    if (scenario == "planted-range") return planted_range(o);
    if (scenario == "chain") return chain(o);
    if (scenario == "null") return null_scenario(o);
    if (scenario == "glucose") return glucose(o);
    throw Error(Errc::UnknownScenario, "unknown scenario '" + scenario + "'");
}

} // namespace tempocause::gen

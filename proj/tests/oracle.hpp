#pragma once

// Brute-force reference for lagged conditioning and screening. Works on raw
// per-time values and explicit enumeration of (t, t') pairs; shares no code
// with the library kernels beyond plain data structs.

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace oracle {

/// Truth of a proposition at each time: nullopt = unobserved.
using Truth = std::vector<std::optional<bool>>;
using Values = std::vector<std::optional<double>>;

inline Truth range_truth(const Values& v, double lo, double hi) {
    Truth out;
    for (const auto& x : v) out.push_back(x ? std::optional<bool>(*x >= lo && *x <= hi) : std::nullopt);
    return out;
}

inline Truth both(const Truth& a, const Truth& b) {
    Truth out(a.size());
    for (std::size_t t = 0; t < a.size(); ++t)
        if (a[t] && b[t]) out[t] = *a[t] && *b[t];
    return out;
}

inline Truth neg(const Truth& a) {
    Truth out(a.size());
    for (std::size_t t = 0; t < a.size(); ++t)
        if (a[t]) out[t] = !*a[t];
    return out;
}

/// |{t : c(t) and exists t' in [t+r, t+s], t' < T, e(t')}| / |{t : c(t)}|.
inline std::optional<double> probability(const Truth& c, const Truth& e, std::size_t r, std::size_t s) {
    const std::size_t T = c.size();
    std::size_t occurs = 0, holds = 0;
    for (std::size_t t = 0; t < T; ++t) {
        if (!(c[t] && *c[t])) continue;
        ++occurs;
        bool hit = false;
        for (std::size_t u = 0; u < T; ++u)
            if (u >= t + r && u <= t + s && e[u] && *e[u]) hit = true;
        if (hit) ++holds;
    }
    if (occurs == 0) return std::nullopt;
    return static_cast<double>(holds) / static_cast<double>(occurs);
}

/// Frequency-weighted form: sum_y y * Theta([v_e = y] paired with c) / Theta(pairs).
inline std::optional<double> expectation(const Truth& c, const Values& v, std::size_t r, std::size_t s) {
    const std::size_t T = c.size();
    std::map<double, std::size_t> freq;
    std::size_t pairs = 0;
    for (std::size_t t = 0; t < T; ++t) {
        if (!(c[t] && *c[t])) continue;
        for (std::size_t u = 0; u < T; ++u) {
            if (u < t + r || u > t + s || !v[u]) continue;
            ++freq[*v[u]];
            ++pairs;
        }
    }
    if (pairs == 0) return std::nullopt;
    double out = 0;
    for (const auto& [y, n] : freq) out += y * static_cast<double>(n) / static_cast<double>(pairs);
    return out;
}

struct Effect {
    bool probability_form = true;
    Truth truth;   // probability form
    Values values; // expectation form
};

inline std::optional<double> conditional(const Effect& e, const Truth& c, std::size_t r, std::size_t s) {
    return e.probability_form ? probability(c, e.truth, r, s) : expectation(c, e.values, r, s);
}

/// Average over x != c of [effect | c and x] - [effect | not c and x]; terms
/// whose conditioning is empty are skipped.
inline std::optional<double> eps_average(const Effect& e, const std::vector<Truth>& X, std::size_t c, std::size_t r,
                                         std::size_t s) {
    double acc = 0;
    std::size_t used = 0;
    for (std::size_t x = 0; x < X.size(); ++x) {
        if (x == c) continue;
        const auto with = conditional(e, both(X[c], X[x]), r, s);
        const auto without = conditional(e, both(neg(X[c]), X[x]), r, s);
        if (!with || !without) continue;
        acc += *with - *without;
        ++used;
    }
    if (used == 0) return std::nullopt;
    return acc / static_cast<double>(used);
}

inline bool close(double a, double b, double rel = 1e-12) {
    return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

} // namespace oracle

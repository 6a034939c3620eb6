#pragma once

// Multivariate time-series snapshot: CSV ingestion, kind inference, export
// and per-variable summaries. A Dataset is immutable once constructed.

#include "tempocause/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace tempocause {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) noexcept { return std::isnan(v); }

enum class VarKind { Continuous, Discrete };

inline std::string_view kind_name(VarKind k) {
    return k == VarKind::Continuous ? "continuous" : "discrete";
}

/// One column of a Dataset. Discrete variables store level indices as
/// doubles; missing slots are NaN for both kinds.
class Variable {
public:
    static Variable continuous(std::string name, std::vector<double> values) {
        Variable v;
        v.name_ = std::move(name);
        v.kind_ = VarKind::Continuous;
        v.values_ = std::move(values);
        v.finish();
        return v;
    }

    static Variable discrete(std::string name, std::vector<std::string> levels,
                             std::vector<double> level_ids) {
        Variable v;
        v.name_ = std::move(name);
        v.kind_ = VarKind::Discrete;
        v.levels_ = std::move(levels);
        v.values_ = std::move(level_ids);
        v.finish();
        return v;
    }

    const std::string& name() const noexcept { return name_; }
    VarKind kind() const noexcept { return kind_; }
    bool is_continuous() const noexcept { return kind_ == VarKind::Continuous; }
    bool is_discrete() const noexcept { return kind_ == VarKind::Discrete; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t t) const noexcept { return values_[t]; }
    bool missing(std::size_t t) const noexcept { return is_missing(values_[t]); }
    const std::vector<std::string>& levels() const noexcept { return levels_; }
    double observed_min() const noexcept { return min_; }
    double observed_max() const noexcept { return max_; }
    double range() const noexcept { return max_ - min_; }
    std::size_t missing_count() const noexcept { return missing_; }
    std::size_t observed_count() const noexcept { return values_.size() - missing_; }

    std::optional<std::size_t> level_index(std::string_view label) const {
        for (std::size_t i = 0; i < levels_.size(); ++i)
            if (levels_[i] == label) return i;
        return std::nullopt;
    }

    const std::string& level_label(std::size_t t) const {
        return levels_.at(static_cast<std::size_t>(values_[t]));
    }

    friend bool operator==(const Variable& a, const Variable& b) {
        if (a.name_ != b.name_ || a.kind_ != b.kind_ || a.levels_ != b.levels_ ||
            a.values_.size() != b.values_.size())
            return false;
        for (std::size_t t = 0; t < a.values_.size(); ++t) {
            const bool ma = a.missing(t), mb = b.missing(t);
            if (ma != mb || (!ma && a.values_[t] != b.values_[t])) return false;
        }
        return true;
    }

private:
    Variable() = default;

    void finish() {
        if (name_.empty()) throw Error(Errc::ParseError, "variable name must be non-empty");
        missing_ = 0;
        min_ = std::numeric_limits<double>::infinity();
        max_ = -std::numeric_limits<double>::infinity();
        for (double v : values_) {
            if (is_missing(v)) {
                ++missing_;
                continue;
            }
            min_ = std::min(min_, v);
            max_ = std::max(max_, v);
        }
        if (kind_ == VarKind::Continuous) {
            if (missing_ == values_.size())
                throw Error(Errc::ParseError,
                            "continuous variable '" + name_ + "' has no observed values");
            return;
        }
        std::unordered_set<std::string> seen;
        for (const auto& l : levels_)
            if (!seen.insert(l).second)
                throw Error(Errc::ParseError, "duplicate level '" + l + "' in '" + name_ + "'");
        for (double v : values_) {
            if (is_missing(v)) continue;
            if (v < 0 || v != std::floor(v) || v >= static_cast<double>(levels_.size()))
                throw Error(Errc::ParseError,
                            "variable '" + name_ + "' references an undeclared level");
        }
        if (missing_ == values_.size()) {
            min_ = max_ = kMissing;
        }
    }

    std::string name_;
    VarKind kind_ = VarKind::Continuous;
    std::vector<double> values_;
    std::vector<std::string> levels_;
    double min_ = 0, max_ = 0;
    std::size_t missing_ = 0;
};

struct IngestOptions {
    std::optional<std::string> time_col;
    std::vector<std::string> discrete_cols;
    std::size_t discrete_threshold = 12;
};

class Dataset {
public:
    Dataset(std::string name, std::vector<Variable> variables,
            std::string time_unit_label = "step", std::vector<std::string> warnings = {})
        : name_(std::move(name)), time_unit_label_(std::move(time_unit_label)),
          variables_(std::move(variables)), warnings_(std::move(warnings)) {
        if (variables_.empty()) throw Error(Errc::NoUsableColumns, "dataset has no variables");
        length_ = variables_.front().size();
        if (length_ < 2) throw Error(Errc::TooFewRows, "dataset needs at least 2 time points");
        std::unordered_set<std::string> names;
        for (const auto& v : variables_) {
            if (v.size() != length_)
                throw Error(Errc::LengthMismatch, "variable '" + v.name() + "' has wrong length");
            if (!names.insert(v.name()).second)
                throw Error(Errc::ParseError, "duplicate variable name '" + v.name() + "'");
        }
    }

    const std::string& name() const noexcept { return name_; }
    const std::string& time_unit_label() const noexcept { return time_unit_label_; }
    std::size_t length() const noexcept { return length_; }
    const std::vector<Variable>& variables() const noexcept { return variables_; }
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    const Variable* find(std::string_view name) const noexcept {
        for (const auto& v : variables_)
            if (v.name() == name) return &v;
        return nullptr;
    }

    const Variable& at(std::string_view name) const {
        if (const auto* v = find(name)) return *v;
        throw Error(Errc::UnknownVariable, "unknown variable '" + std::string(name) + "'");
    }

    /// Content equality: same length and identical variables, ignoring the
    /// display name and ingestion warnings.
    friend bool operator==(const Dataset& a, const Dataset& b) {
        return a.length_ == b.length_ && a.variables_ == b.variables_;
    }

private:
    std::string name_;
    std::string time_unit_label_;
    std::vector<Variable> variables_;
    std::vector<std::string> warnings_;
    std::size_t length_ = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::optional<long long> parse_integer(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return v;
}

/// Shortest round-trip decimal form.
inline std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

/// Quote-aware CSV splitter (RFC 4180 style). Returns rows of raw cells.
inline std::vector<std::vector<std::string>> split_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false, row_has_content = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell.push_back(ch);
            }
            continue;
        }
        if (ch == '"') {
            quoted = true;
            row_has_content = true;
        } else if (ch == ',') {
            row.push_back(std::move(cell));
            cell.clear();
            row_has_content = true;
        } else if (ch == '\n' || ch == '\r') {
            if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (row_has_content || !cell.empty()) {
                row.push_back(std::move(cell));
                rows.push_back(std::move(row));
            }
            row.clear();
            cell.clear();
            row_has_content = false;
        } else {
            cell.push_back(ch);
            row_has_content = true;
        }
    }
    if (quoted) throw Error(Errc::ParseError, "unterminated quoted field");
    if (row_has_content || !cell.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string csv_escape(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

inline void check_time_column(const std::vector<std::string>& cells, std::vector<std::string>& warnings) {
    std::vector<double> numeric;
    numeric.reserve(cells.size());
    bool all_numeric = true;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (trim(cells[i]).empty())
            throw Error(Errc::NonMonotonicTime, "time column has an empty cell at row " + std::to_string(i + 2));
        auto d = parse_double(cells[i]);
        if (!d) all_numeric = false;
        else numeric.push_back(*d);
    }
    for (std::size_t i = 1; i < cells.size(); ++i) {
        const bool increasing = all_numeric ? numeric[i] > numeric[i - 1]
                                            : trim(cells[i]) > trim(cells[i - 1]);
        if (!increasing)
            throw Error(Errc::NonMonotonicTime,
                        "time column is not strictly increasing at row " + std::to_string(i + 2));
    }
    if (all_numeric && numeric.size() >= 3) {
        const double step = numeric[1] - numeric[0];
        for (std::size_t i = 2; i < numeric.size(); ++i) {
            if (std::abs((numeric[i] - numeric[i - 1]) - step) > 1e-9 * std::max(1.0, std::abs(step))) {
                warnings.push_back("time column is not uniformly spaced; delays are in index units");
                break;
            }
        }
    }
}

inline std::optional<Variable> build_column(const std::string& name, const std::vector<std::string>& cells,
                                            const IngestOptions& opt, std::vector<std::string>& warnings) {
    const std::size_t n = cells.size();
    bool all_numeric = true, any_fractional = false, all_integer = true;
    std::vector<std::string> distinct;
    std::unordered_set<std::string> seen;
    std::size_t observed = 0;
    for (const auto& raw : cells) {
        const auto cell = trim(raw);
        if (cell.empty()) continue;
        ++observed;
        const auto as_int = parse_integer(cell);
        const auto as_num = parse_double(cell);
        if (!as_num) all_numeric = false;
        if (!as_int) all_integer = false;
        if (as_num && !as_int) any_fractional = true;
        if (seen.insert(std::string(cell)).second) distinct.emplace_back(cell);
    }
    if (observed == 0) {
        warnings.push_back("column '" + name + "' dropped: no observed values");
        return std::nullopt;
    }
    const bool declared = std::find(opt.discrete_cols.begin(), opt.discrete_cols.end(), name) !=
                          opt.discrete_cols.end();
    const bool inferred = distinct.size() <= opt.discrete_threshold && !any_fractional;
    if (declared || inferred) {
        if (all_integer) {
            std::stable_sort(distinct.begin(), distinct.end(), [](const auto& a, const auto& b) {
                return *parse_integer(a) < *parse_integer(b);
            });
        }
        std::unordered_map<std::string, double> index;
        for (std::size_t i = 0; i < distinct.size(); ++i) index.emplace(distinct[i], static_cast<double>(i));
        std::vector<double> ids(n, kMissing);
        for (std::size_t t = 0; t < n; ++t) {
            const auto cell = trim(cells[t]);
            if (!cell.empty()) ids[t] = index.at(std::string(cell));
        }
        return Variable::discrete(name, std::move(distinct), std::move(ids));
    }
    if (!all_numeric) {
        warnings.push_back("column '" + name + "' dropped: non-numeric with more than " +
                           std::to_string(opt.discrete_threshold) + " distinct values");
        return std::nullopt;
    }
    std::vector<double> values(n, kMissing);
    for (std::size_t t = 0; t < n; ++t)
        if (auto d = parse_double(cells[t])) values[t] = *d;
    return Variable::continuous(name, std::move(values));
}

} // namespace detail

/// Parses CSV text into a Dataset.
inline Dataset parse_csv(std::string_view text, const IngestOptions& opt = {}, std::string name = "dataset") {
    auto rows = detail::split_csv(text);
    if (rows.empty()) throw Error(Errc::ParseError, "missing header row");
    const auto& header = rows.front();
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != header.size())
            throw Error(Errc::RaggedRows, "row " + std::to_string(r + 1) + " has " +
                                              std::to_string(rows[r].size()) + " fields, expected " +
                                              std::to_string(header.size()));
    }
    const std::size_t n = rows.size() - 1;
    if (n < 2) throw Error(Errc::TooFewRows, "need at least 2 data rows, got " + std::to_string(n));

    std::vector<std::string> warnings;
    std::vector<Variable> vars;
    bool time_seen = false;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string col_name(detail::trim(header[c]));
        std::vector<std::string> cells;
        cells.reserve(n);
        for (std::size_t r = 1; r <= n; ++r) cells.push_back(rows[r][c]);
        if (opt.time_col && col_name == *opt.time_col) {
            detail::check_time_column(cells, warnings);
            time_seen = true;
            continue;
        }
        if (col_name.empty()) throw Error(Errc::ParseError, "column " + std::to_string(c + 1) + " has no name");
        if (auto v = detail::build_column(col_name, cells, opt, warnings)) vars.push_back(std::move(*v));
    }
    if (opt.time_col && !time_seen)
        throw Error(Errc::ParseError, "time column '" + *opt.time_col + "' not found in header");
    if (vars.empty()) throw Error(Errc::NoUsableColumns, "no usable columns");
    return Dataset(std::move(name), std::move(vars), "step", std::move(warnings));
}

inline Dataset load_csv(const std::filesystem::path& path, const IngestOptions& opt = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str(), opt, path.stem().string());
}

/// Writes the dataset back to CSV so that parse_csv with the same options
/// reproduces an equal Dataset. Continuous values always carry a decimal
/// point so low-cardinality numeric columns are not re-read as discrete.
inline std::string export_csv(const Dataset& ds) {
    std::string out;
    const auto& vars = ds.variables();
    for (std::size_t j = 0; j < vars.size(); ++j) {
        if (j) out.push_back(',');
        out += detail::csv_escape(vars[j].name());
    }
    out.push_back('\n');
    for (std::size_t t = 0; t < ds.length(); ++t) {
        for (std::size_t j = 0; j < vars.size(); ++j) {
            if (j) out.push_back(',');
            const auto& v = vars[j];
            if (v.missing(t)) continue;
            if (v.is_discrete()) {
                out += detail::csv_escape(v.level_label(t));
            } else {
                auto s = detail::format_double(v[t]);
                if (s.find_first_of(".e") == std::string::npos) s += ".0";
                out += s;
            }
        }
        out.push_back('\n');
    }
    return out;
}

struct Histogram {
    std::vector<double> edges;        // bins + 1 entries
    std::vector<std::size_t> counts;  // bins entries
};

/// Fixed-edge histogram of the non-missing values. A degenerate span
/// (lo == hi) collapses to a single bin.
inline Histogram histogram(std::span<const double> values, double lo, double hi, std::size_t bins) {
    Histogram h;
    if (bins == 0) bins = 1;
    if (!(hi > lo)) bins = 1;
    h.edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
        h.edges[i] = (bins == 1 && !(hi > lo)) ? (i == 0 ? lo : hi)
                                               : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    h.edges.back() = hi;
    h.counts.assign(bins, 0);
    for (double v : values) {
        if (is_missing(v) || v < lo || v > hi) continue;
        std::size_t b = 0;
        if (hi > lo) {
            b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
            b = std::min(b, bins - 1);
        }
        ++h.counts[b];
    }
    return h;
}

struct VariableSummary {
    std::string name;
    VarKind kind = VarKind::Continuous;
    std::size_t count = 0;
    std::size_t missing = 0;
    double min = 0, max = 0, mean = 0;
    Histogram histogram;
    std::vector<std::pair<std::string, std::size_t>> level_frequencies;
};

inline VariableSummary summarize(const Variable& v, std::size_t bins = 20) {
    VariableSummary s;
    s.name = v.name();
    s.kind = v.kind();
    s.count = v.observed_count();
    s.missing = v.missing_count();
    if (v.is_continuous()) {
        s.min = v.observed_min();
        s.max = v.observed_max();
        double sum = 0;
        for (double x : v.values())
            if (!is_missing(x)) sum += x;
        s.mean = sum / static_cast<double>(s.count);
        s.histogram = histogram(v.values(), s.min, s.max, bins);
    } else {
        std::vector<std::size_t> freq(v.levels().size(), 0);
        for (double x : v.values())
            if (!is_missing(x)) ++freq[static_cast<std::size_t>(x)];
        for (std::size_t i = 0; i < freq.size(); ++i) s.level_frequencies.emplace_back(v.levels()[i], freq[i]);
    }
    return s;
}

inline std::vector<VariableSummary> summary(const Dataset& ds, std::size_t bins = 20) {
    std::vector<VariableSummary> out;
    out.reserve(ds.variables().size());
    for (const auto& v : ds.variables()) out.push_back(summarize(v, bins));
    return out;
}

/// Name + length + variable-name hash used to bind persisted graphs to data.
struct Fingerprint {
    std::string name;
    std::size_t length = 0;
    std::vector<std::string> variables;
    std::string hash;

    friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

inline std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline Fingerprint fingerprint(const Dataset& ds) {
    Fingerprint f;
    f.name = ds.name();
    f.length = ds.length();
    std::string joined = ds.name() + '\x1f' + std::to_string(ds.length());
    for (const auto& v : ds.variables()) {
        f.variables.push_back(v.name());
        joined += '\x1f';
        joined += v.name();
    }
    f.hash = fnv1a_hex(joined);
    return f;
}

} // namespace tempocause

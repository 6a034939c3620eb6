#pragma once

// Causal flow graph: a DAG of saved significant relations. Nodes are keyed
// by the proposition they represent so repeated saves merge; edges carry the
// delay window used for time-axis layout (x advances by the window's upper
// bound along every edge).

#include "tempocause/dataset.hpp"
#include "tempocause/error.hpp"
#include "tempocause/formula.hpp"
#include "tempocause/inference.hpp"
#include "tempocause/serialize.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

namespace tempocause {

using NodeDescriptor = std::variant<EventDef, EffectSpec>;

struct FlowNode {
    std::string node_id;
    std::string key;
    NodeDescriptor descriptor;
    std::string display_label;

    const std::string& variable() const {
        return std::holds_alternative<EventDef>(descriptor) ? std::get<EventDef>(descriptor).variable
                                                            : std::get<EffectSpec>(descriptor).variable;
    }

    friend bool operator==(const FlowNode&, const FlowNode&) = default;
};

struct FlowEdge {
    std::string from;
    std::string to;
    Window window;
    EffectType effect_type = EffectType::Increase;
    double strength = 0;
    std::string saved_at;

    friend bool operator==(const FlowEdge&, const FlowEdge&) = default;
};

struct CausalFlowGraph {
    Fingerprint fingerprint;
    std::vector<FlowNode> nodes;   // sorted by node_id
    std::vector<FlowEdge> edges;   // sorted by (from, to, effect_type)

    const FlowNode* find(const std::string& node_id) const {
        auto it = std::lower_bound(nodes.begin(), nodes.end(), node_id,
                                   [](const FlowNode& n, const std::string& id) { return n.node_id < id; });
        return it != nodes.end() && it->node_id == node_id ? &*it : nullptr;
    }

    const FlowNode* find_key(const std::string& key) const {
        for (const auto& n : nodes)
            if (n.key == key) return &n;
        return nullptr;
    }

    friend bool operator==(const CausalFlowGraph&, const CausalFlowGraph&) = default;
};

struct EdgeChange {
    std::string from;
    std::string to;
    EffectType effect_type;
};

struct EdgeRejection {
    std::string from_label;
    std::string to_label;
    std::string reason;
    std::vector<std::string> cycle_path;  // node ids: to -> ... -> from (closing edge from -> to)
};

struct SaveDiff {
    std::vector<std::string> nodes_added;
    std::vector<EdgeChange> added;
    std::vector<EdgeChange> updated;
    std::vector<EdgeChange> unchanged;
    std::vector<EdgeRejection> rejected;
    std::vector<std::string> warnings;
};

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

namespace detail {

inline std::string node_id_for(const CausalFlowGraph& g, const std::string& key) {
    const std::string base = "n" + fnv1a_hex(key).substr(0, 12);
    std::string id = base;
    for (int k = 2; g.find(id) && g.find(id)->key != key; ++k) id = base + "_" + std::to_string(k);
    return id;
}

inline std::string descriptor_label(const NodeDescriptor& d) {
    if (const auto* e = std::get_if<EventDef>(&d)) return e->label.empty() ? e->describe() : e->label;
    return std::get<EffectSpec>(d).describe();
}

inline std::string descriptor_key(const NodeDescriptor& d) {
    if (const auto* e = std::get_if<EventDef>(&d)) return e->key();
    return std::get<EffectSpec>(d).key();
}

inline void sort_graph(CausalFlowGraph& g) {
    std::sort(g.nodes.begin(), g.nodes.end(), [](const auto& a, const auto& b) { return a.node_id < b.node_id; });
    std::sort(g.edges.begin(), g.edges.end(), [](const auto& a, const auto& b) {
        if (a.from != b.from) return a.from < b.from;
        if (a.to != b.to) return a.to < b.to;
        return a.effect_type < b.effect_type;
    });
}

/// Existing directed path start -> ... -> goal, if any.
inline std::optional<std::vector<std::string>> find_path(const CausalFlowGraph& g, const std::string& start,
                                                         const std::string& goal) {
    std::map<std::string, std::string> parent;
    std::vector<std::string> stack{start};
    std::set<std::string> seen{start};
    while (!stack.empty()) {
        const auto cur = stack.back();
        stack.pop_back();
        if (cur == goal) {
            std::vector<std::string> path{goal};
            for (auto p = goal; p != start;) {
                p = parent.at(p);
                path.push_back(p);
            }
            std::reverse(path.begin(), path.end());
            return path;
        }
        for (const auto& e : g.edges) {
            if (e.from != cur || seen.count(e.to)) continue;
            seen.insert(e.to);
            parent[e.to] = cur;
            stack.push_back(e.to);
        }
    }
    return std::nullopt;
}

} // namespace detail

/// Adds (or finds) the node for a descriptor. Returns its id.
inline std::string ensure_node(CausalFlowGraph& g, const NodeDescriptor& d, SaveDiff* diff = nullptr) {
    const auto key = detail::descriptor_key(d);
    if (const auto* n = g.find_key(key)) return n->node_id;
    FlowNode node{detail::node_id_for(g, key), key, d, detail::descriptor_label(d)};
    if (auto* e = std::get_if<EventDef>(&node.descriptor)) e->id = node.node_id;
    const auto id = node.node_id;
    g.nodes.push_back(std::move(node));
    detail::sort_graph(g);
    if (diff) diff->nodes_added.push_back(id);
    return id;
}

/// Inserts or updates one relation. Rejections (self-loops, cycles) are
/// recorded in the diff and leave the graph unchanged.
inline void add_relation(CausalFlowGraph& g, const NodeDescriptor& cause, const NodeDescriptor& effect,
                         const Window& w, EffectType type, double strength, const std::string& saved_at,
                         SaveDiff& diff) {
    const auto from_key = detail::descriptor_key(cause), to_key = detail::descriptor_key(effect);
    const auto from_label = detail::descriptor_label(cause), to_label = detail::descriptor_label(effect);
    if (from_key == to_key) {
        diff.rejected.push_back({from_label, to_label, "SelfLoop", {}});
        return;
    }
    const auto* from_node = g.find_key(from_key);
    const auto* to_node = g.find_key(to_key);
    if (from_node && to_node) {
        for (auto& e : g.edges) {
            if (e.from != from_node->node_id || e.to != to_node->node_id || e.effect_type != type) continue;
            if (e.window == w && e.strength == strength) {
                diff.unchanged.push_back({e.from, e.to, type});
            } else {
                e.window = w;
                e.strength = strength;
                e.saved_at = saved_at;
                diff.updated.push_back({e.from, e.to, type});
            }
            return;
        }
        if (auto path = detail::find_path(g, to_node->node_id, from_node->node_id)) {
            diff.rejected.push_back({from_label, to_label, std::string(errc_name(Errc::CycleRejected)), *path});
            return;
        }
    }
    const auto from = ensure_node(g, cause, &diff);
    const auto to = ensure_node(g, effect, &diff);
    g.edges.push_back({from, to, w, type, strength, saved_at});
    detail::sort_graph(g);
    diff.added.push_back({from, to, type});
}

/// One edge per significant cause -> effect of the report.
inline SaveDiff save_relations(CausalFlowGraph& g, const SignificanceReport& rep,
                               const std::string& saved_at = utc_timestamp()) {
    const auto sig = rep.significant_events();
    if (sig.empty()) throw Error(Errc::PreconditionViolation, "report has no significant cause to save");
    SaveDiff diff;
    for (const auto& c : rep.causes) {
        if (!c.is_significant) continue;
        const double strength = c.eps_avg ? *c.eps_avg : c.elevation;
        add_relation(g, c.event, rep.effect, rep.window, rep.effect.type, strength, saved_at, diff);
    }
    return diff;
}

/// Deletes a node and, by cascade, every incident edge.
inline std::vector<FlowEdge> remove_node(CausalFlowGraph& g, const std::string& node_id) {
    if (!g.find(node_id)) throw Error(Errc::UnknownNode, "unknown node '" + node_id + "'");
    std::vector<FlowEdge> removed;
    std::erase_if(g.edges, [&](const FlowEdge& e) {
        if (e.from != node_id && e.to != node_id) return false;
        removed.push_back(e);
        return true;
    });
    std::erase_if(g.nodes, [&](const FlowNode& n) { return n.node_id == node_id; });
    return removed;
}

struct NodeLayout {
    std::string node_id;
    double x = 0;       // lag units
    std::size_t layer = 0;
};

/// Longest-path placement: roots at x = 0, every other node at the maximum
/// over incoming edges of x(from) + window.s. Output in node_id order.
inline std::vector<NodeLayout> layout(const CausalFlowGraph& g) {
    std::map<std::string, std::size_t> indegree;
    std::map<std::string, NodeLayout> placed;
    for (const auto& n : g.nodes) {
        indegree[n.node_id] = 0;
        placed[n.node_id] = {n.node_id, 0, 0};
    }
    for (const auto& e : g.edges) ++indegree.at(e.to);
    std::set<std::string> ready;
    for (const auto& [id, deg] : indegree)
        if (deg == 0) ready.insert(id);
    std::size_t visited = 0;
    while (!ready.empty()) {
        const auto cur = *ready.begin();
        ready.erase(ready.begin());
        ++visited;
        for (const auto& e : g.edges) {
            if (e.from != cur) continue;
            auto& dst = placed.at(e.to);
            dst.x = std::max(dst.x, placed.at(cur).x + static_cast<double>(e.window.s));
            dst.layer = std::max(dst.layer, placed.at(cur).layer + 1);
            if (--indegree.at(e.to) == 0) ready.insert(e.to);
        }
    }
    if (visited != g.nodes.size()) throw Error(Errc::CycleRejected, "flow graph contains a cycle");
    std::vector<NodeLayout> out;
    for (auto& [id, l] : placed) out.push_back(l);
    return out;
}

enum class QueryRole { Cause, Effect };

inline QueryRole parse_role(std::string_view s) {
    if (s == "cause") return QueryRole::Cause;
    if (s == "effect") return QueryRole::Effect;
    throw Error(Errc::InvalidRole, "role must be 'cause' or 'effect'");
}

/// Payload to re-query a node in the given role: an EventDef for causes, an
/// EffectSpec for effects. Cause events reload as ValueIn effects.
inline NodeDescriptor node_to_query(const CausalFlowGraph& g, const std::string& node_id, QueryRole role) {
    const auto* n = g.find(node_id);
    if (!n) throw Error(Errc::UnknownNode, "unknown node '" + node_id + "'");
    if (role == QueryRole::Cause) {
        if (const auto* e = std::get_if<EventDef>(&n->descriptor)) return *e;
        const auto& spec = std::get<EffectSpec>(n->descriptor);
        if (spec.event) {
            auto ev = *spec.event;
            ev.id = n->node_id;
            return ev;
        }
        throw Error(Errc::InvalidRole,
                    "node '" + node_id + "' is an " + std::string(effect_type_name(spec.type)) +
                        " effect without a value constraint and cannot be reloaded as a cause");
    }
    if (const auto* e = std::get_if<EventDef>(&n->descriptor)) return EffectSpec::value_in(*e);
    return std::get<EffectSpec>(n->descriptor);
}

/// Applies every edge of `other` onto `g` with save semantics.
inline SaveDiff merge_graphs(CausalFlowGraph& g, const CausalFlowGraph& other) {
    SaveDiff diff;
    if (!g.fingerprint.hash.empty() && !other.fingerprint.hash.empty() && g.fingerprint.hash != other.fingerprint.hash)
        diff.warnings.push_back("graphs were saved against different datasets ('" + g.fingerprint.name + "' vs '" +
                                other.fingerprint.name + "')");
    if (g.fingerprint.hash.empty()) g.fingerprint = other.fingerprint;
    for (const auto& n : other.nodes) {
        bool used = false;
        for (const auto& e : other.edges) used = used || e.from == n.node_id || e.to == n.node_id;
        if (!used) ensure_node(g, n.descriptor, &diff);
    }
    for (const auto& e : other.edges) {
        const auto& from = *other.find(e.from);
        const auto& to = *other.find(e.to);
        add_relation(g, from.descriptor, to.descriptor, e.window, e.effect_type, e.strength, e.saved_at, diff);
    }
    return diff;
}

// Persistence (flowgraph JSON v1).

inline constexpr int kFlowGraphVersion = 1;

inline json graph_to_json(const CausalFlowGraph& g) {
    json nodes = json::array();
    for (const auto& n : g.nodes) {
        json j;
        j["node_id"] = n.node_id;
        j["key"] = n.key;
        j["label"] = n.display_label;
        if (const auto* e = std::get_if<EventDef>(&n.descriptor)) {
            j["kind"] = "event";
            j["event"] = event_to_json(*e);
        } else {
            j["kind"] = "effect";
            j["effect"] = effect_to_json(std::get<EffectSpec>(n.descriptor));
        }
        nodes.push_back(std::move(j));
    }
    json edges = json::array();
    for (const auto& e : g.edges) {
        edges.push_back({{"from", e.from},
                         {"to", e.to},
                         {"window", window_to_json(e.window)},
                         {"effect_type", std::string(effect_type_name(e.effect_type))},
                         {"strength", e.strength},
                         {"saved_at", e.saved_at}});
    }
    return {{"version", kFlowGraphVersion},
            {"fingerprint", fingerprint_to_json(g.fingerprint)},
            {"nodes", nodes},
            {"edges", edges}};
}

inline json layout_to_json(const std::vector<NodeLayout>& l) {
    json out = json::array();
    for (const auto& n : l) out.push_back({{"node_id", n.node_id}, {"x", n.x}, {"layer", n.layer}});
    return out;
}

inline json diff_to_json(const SaveDiff& d) {
    auto changes = [](const std::vector<EdgeChange>& v) {
        json a = json::array();
        for (const auto& c : v)
            a.push_back({{"from", c.from}, {"to", c.to}, {"effect_type", std::string(effect_type_name(c.effect_type))}});
        return a;
    };
    json rejected = json::array();
    for (const auto& r : d.rejected)
        rejected.push_back(
            {{"from", r.from_label}, {"to", r.to_label}, {"reason", r.reason}, {"cycle_path", r.cycle_path}});
    return {{"nodes_added", d.nodes_added}, {"added", changes(d.added)},       {"updated", changes(d.updated)},
            {"unchanged", changes(d.unchanged)}, {"rejected", rejected}, {"warnings", d.warnings}};
}

struct RestoredGraph {
    CausalFlowGraph graph;
    std::vector<std::string> warnings;
};

inline CausalFlowGraph graph_from_json(const json& j) {
    auto schema = [](const std::string& msg) { return Error(Errc::SchemaError, "flow graph: " + msg); };
    try {
        if (!j.is_object()) throw schema("root must be an object");
        if (!j.contains("version") || j["version"] != kFlowGraphVersion) throw schema("unsupported version");
        CausalFlowGraph g;
        if (j.contains("fingerprint") && !j["fingerprint"].is_null())
            g.fingerprint = fingerprint_from_json(j["fingerprint"]);
        if (!j.contains("nodes") || !j["nodes"].is_array()) throw schema("'nodes' must be an array");
        if (!j.contains("edges") || !j["edges"].is_array()) throw schema("'edges' must be an array");
        std::set<std::string> ids, keys;
        for (const auto& nj : j["nodes"]) {
            FlowNode n;
            n.node_id = detail::require_string(nj, "node_id", "node");
            const auto kind = detail::require_string(nj, "kind", "node");
            if (kind == "event") n.descriptor = event_from_json(detail::require(nj, "event", "node"));
            else if (kind == "effect") n.descriptor = effect_from_json(detail::require(nj, "effect", "node"));
            else throw schema("node kind must be 'event' or 'effect'");
            n.key = detail::descriptor_key(n.descriptor);
            n.display_label = nj.contains("label") && nj["label"].is_string() ? nj["label"].get<std::string>()
                                                                           : detail::descriptor_label(n.descriptor);
            if (!ids.insert(n.node_id).second) throw schema("duplicate node id '" + n.node_id + "'");
            if (!keys.insert(n.key).second) throw schema("two nodes describe the same event '" + n.key + "'");
            g.nodes.push_back(std::move(n));
        }
        std::set<std::tuple<std::string, std::string, EffectType>> seen;
        for (const auto& ej : j["edges"]) {
            FlowEdge e;
            e.from = detail::require_string(ej, "from", "edge");
            e.to = detail::require_string(ej, "to", "edge");
            e.window = window_from_json(detail::require(ej, "window", "edge"));
            e.effect_type = parse_effect_type(detail::require_string(ej, "effect_type", "edge"));
            e.strength = detail::require_number(ej, "strength", "edge");
            e.saved_at = ej.contains("saved_at") && ej["saved_at"].is_string() ? ej["saved_at"].get<std::string>() : "";
            if (!ids.count(e.from)) throw schema("edge references unknown node '" + e.from + "'");
            if (!ids.count(e.to)) throw schema("edge references unknown node '" + e.to + "'");
            if (e.from == e.to) throw schema("self-loop on '" + e.from + "'");
            if (e.window.r > e.window.s) throw schema("edge window lower bound exceeds upper bound");
            if (!seen.insert({e.from, e.to, e.effect_type}).second) throw schema("duplicate edge");
            g.edges.push_back(std::move(e));
        }
        detail::sort_graph(g);
        try {
            (void)layout(g);
        } catch (const Error&) {
            throw schema("graph contains a cycle");
        }
        return g;
    } catch (const Error& e) {
        if (e.code() == Errc::SchemaError) throw;
        throw Error(Errc::SchemaError, std::string("flow graph: ") + e.what());
    } catch (const json::exception& e) {
        throw Error(Errc::SchemaError, std::string("flow graph: ") + e.what());
    }
}

/// Fingerprint comparison against a dataset: mismatches only warn.
inline std::vector<std::string> check_fingerprint(const CausalFlowGraph& g, const Dataset& ds) {
    std::vector<std::string> warnings;
    const auto fp = fingerprint(ds);
    if (g.fingerprint.hash == fp.hash) return warnings;
    if (g.fingerprint.name != fp.name)
        warnings.push_back("graph was saved against dataset '" + g.fingerprint.name + "', not '" + fp.name + "'");
    if (g.fingerprint.length != fp.length)
        warnings.push_back("dataset length differs: saved " + std::to_string(g.fingerprint.length) + ", current " +
                           std::to_string(fp.length));
    std::set<std::string> unknown;
    for (const auto& n : g.nodes)
        if (!ds.find(n.variable())) unknown.insert(n.variable());
    for (const auto& v : unknown) warnings.push_back("unknown variable '" + v + "'");
    if (warnings.empty()) warnings.push_back("dataset fingerprint differs from the saved one");
    return warnings;
}

inline void persist(const CausalFlowGraph& g, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot write '" + path.string() + "'");
    out << to_text(graph_to_json(g));
}

inline RestoredGraph restore(const std::filesystem::path& path, const Dataset* ds = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot read '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    json j;
    try {
        j = json::parse(ss.str());
    } catch (const json::exception& e) {
        throw Error(Errc::SchemaError, std::string("flow graph is not valid JSON: ") + e.what());
    }
    RestoredGraph r{graph_from_json(j), {}};
    if (ds) r.warnings = check_fingerprint(r.graph, *ds);
    return r;
}

} // namespace tempocause

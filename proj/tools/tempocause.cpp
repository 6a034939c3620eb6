// tempocause: batch analysis, flow-graph merging, scenario generation and
// the HTTP service.

#include "tempocause/analysis.hpp"
#include "tempocause/dataset.hpp"
#include "tempocause/estimate.hpp"
#include "tempocause/flowgraph.hpp"
#include "tempocause/generate.hpp"
#include "tempocause/inference.hpp"
#include "tempocause/serialize.hpp"
#include "tempocause/server.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace tempocause;

namespace {

constexpr int kExitIo = 1;
constexpr int kExitAnalysis = 2;

struct AnalyzeArgs {
    std::string data;
    std::string effect;
    std::string window = "1,1";
    std::string causes;
    bool estimate = false;
    double eps = 0;
    std::size_t sweep = 10;
    std::string out = ".";
    std::optional<std::string> time_col;
    std::vector<std::string> discrete_cols;
    std::size_t discrete_threshold = 12;
    std::optional<double> p;
    double theta = 0.15;
    std::size_t max_iter = 5;
    std::optional<std::size_t> min_mass;
    std::vector<std::string> exclude;
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot read '" + p.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot write '" + p.string() + "'");
    out << text;
}

Window parse_window(const std::string& s) {
    const auto comma = s.find(',');
    const auto r = detail::parse_integer(s.substr(0, comma));
    const auto e = comma == std::string::npos ? r : detail::parse_integer(s.substr(comma + 1));
    if (!r || !e || *r < 0 || *e < 0) throw Error(Errc::ParseError, "window must be r,s with non-negative integers");
    return {static_cast<std::size_t>(*r), static_cast<std::size_t>(*e)};
}

int run_analyze(const AnalyzeArgs& a) {
    IngestOptions opt;
    opt.time_col = a.time_col;
    opt.discrete_cols = a.discrete_cols;
    opt.discrete_threshold = a.discrete_threshold;
    const Dataset ds = load_csv(a.data, opt);
    const auto effect = parse_effect_arg(ds, a.effect, a.p);
    const Window w = parse_window(a.window);
    w.validate(ds.length());

    std::vector<EventDef> causes;
    if (!a.causes.empty()) {
        json j;
        try {
            j = json::parse(read_file(a.causes));
        } catch (const json::exception& e) {
            throw Error(Errc::ParseError, std::string("causes file: ") + e.what());
        }
        causes = causes_from_json(j);
    }
    std::optional<EstimateResult> est;
    if (a.estimate) {
        EstimatorConfig cfg;
        cfg.theta_fraction = a.theta;
        cfg.max_iterations = a.max_iter;
        cfg.min_cluster_mass = a.min_mass;
        cfg.window = w;
        const std::set<std::string> exclude(a.exclude.begin(), a.exclude.end());
        est = estimate_all(ds, effect, cfg, exclude);
        for (const auto& e : est->events()) causes.push_back(e);
    }
    if (causes.empty()) throw Error(Errc::EmptyCauseSet, "no causes: pass --causes or --estimate (none were estimated)");

    const auto rep = significance_report(ds, causes, effect, w, a.eps);
    std::optional<DelayProfile> prof;
    const auto sig = rep.significant_events();
    if (!sig.empty()) prof = delay_sweep(ds, sig, effect, std::min(a.sweep, ds.length() - 1));

    const fs::path out(a.out);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw Error(Errc::Io, "cannot create '" + out.string() + "'");
    write_file(out / "report.json", report_text(rep));
    write_file(out / "sweep.csv", sweep_csv(prof));
    write_file(out / "summary.md", summary_markdown(ds, rep, prof, est));
    if (est) write_file(out / "estimate.json", to_text(estimate_to_json(*est)));
    std::cout << "wrote " << (out / "report.json").string() << "\n";
    return 0;
}

int run_merge(const std::vector<std::string>& inputs, const std::string& out) {
    CausalFlowGraph merged = restore(inputs.at(0)).graph;
    for (std::size_t i = 1; i < inputs.size(); ++i) {
        const auto other = restore(inputs[i]).graph;
        const auto diff = merge_graphs(merged, other);
        for (const auto& w : diff.warnings) std::cerr << "warning: " << w << "\n";
        for (const auto& r : diff.rejected) {
            std::cerr << "warning: rejected " << r.from_label << " -> " << r.to_label << " (" << r.reason << ")";
            if (!r.cycle_path.empty()) {
                std::cerr << " existing path:";
                for (const auto& n : r.cycle_path) std::cerr << " " << n;
            }
            std::cerr << "\n";
        }
    }
    const auto text = to_text(graph_to_json(merged));
    if (out.empty()) std::cout << text;
    else write_file(out, text);
    return 0;
}

int run_gen(const std::string& scenario, std::uint64_t seed, std::optional<std::size_t> length,
            std::optional<std::size_t> lag, const std::string& out) {
    const auto g = gen::generate(scenario, {seed, length, lag});
    fs::path csv(out);
    write_file(csv, g.csv);
    fs::path sidecar = csv;
    sidecar.replace_extension(".truth.json");
    write_file(sidecar, to_text(g.truth));
    std::cout << "wrote " << csv.string() << " and " << sidecar.string() << "\n";
    return 0;
}

int run_serve(const std::string& bind, int port, const std::string& data_dir, const std::string& cors) {
    server::Service service({data_dir, cors});
    httplib::Server svr;
    service.mount(svr);
    std::cout << "listening on http://" << bind << ":" << port << "\n" << std::flush;
    if (!svr.listen(bind, port)) throw Error(Errc::Io, "cannot bind " + bind + ":" + std::to_string(port));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tempocause: logic-based time-lagged causal analysis"};
    app.require_subcommand(1);

    AnalyzeArgs a;
    auto* analyze = app.add_subcommand("analyze", "Estimate / test causes and write report.json, sweep.csv, summary.md");
    analyze->add_option("--data", a.data, "Input CSV")->required();
    analyze->add_option("--effect", a.effect,
                        "Effect spec <var>:<increase|decrease|valuein>[:lo,hi]; discrete valuein takes "
                        "levels joined by '|', e.g. weather:valuein:rain|snow")
        ->required();
    analyze->add_option("--window", a.window, "Delay window r,s in index units")->capture_default_str();
    analyze->add_option("--causes", a.causes, "JSON file with an array of events (or {causes:[...]})");
    analyze->add_flag("--estimate", a.estimate, "Estimate causes automatically (appended to --causes)");
    analyze->add_option("--eps", a.eps, "Significance threshold on |eps_avg|")->capture_default_str();
    analyze->add_option("--sweep", a.sweep, "Maximum delay of the sweep")->capture_default_str();
    analyze->add_option("--out", a.out, "Output directory")->capture_default_str();
    analyze->add_option("--time-col", a.time_col, "Time column to validate and drop");
    analyze->add_option("--discrete-cols", a.discrete_cols, "Columns forced discrete")->delimiter(',');
    analyze->add_option("--discrete-threshold", a.discrete_threshold, "Max distinct values for inferred discrete")
        ->capture_default_str();
    analyze->add_option("--p", a.p, "Probability threshold for valuein effects (default: strict elevation)");
    analyze->add_option("--theta", a.theta, "Cluster distance as a fraction of the variable range")->capture_default_str();
    analyze->add_option("--max-iter", a.max_iter, "Clustering iterations")->capture_default_str();
    analyze->add_option("--min-mass", a.min_mass, "Minimum cluster size (default max(2, 1% of evidence))");
    analyze->add_option("--exclude", a.exclude, "Variables excluded from estimation")->delimiter(',');

    auto* flow = app.add_subcommand("flow", "Flow-graph tools");
    flow->require_subcommand(1);
    std::vector<std::string> merge_inputs;
    std::string merge_out;
    auto* merge = flow->add_subcommand("merge", "Merge flow graphs with save semantics");
    merge->add_option("inputs", merge_inputs, "Flow graph JSON files")->required()->expected(1, -1);
    merge->add_option("-o,--out", merge_out, "Output file (default stdout)");

    std::string scenario, gen_out;
    std::uint64_t seed = 0;
    std::optional<std::size_t> gen_length, gen_lag;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic scenario CSV plus ground-truth sidecar");
    gen_cmd->add_option("--scenario", scenario, "shift | planted-range | chain | null | glucose")->required();
    gen_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    gen_cmd->add_option("--length", gen_length, "Number of time points");
    gen_cmd->add_option("--lag", gen_lag, "Planted lag (shift, planted-range)");
    gen_cmd->add_option("--out", gen_out, "Output CSV (sidecar next to it as .truth.json)")->required();

    std::string bind = "127.0.0.1", data_dir = ".", cors = "*";
    int port = 8787;
    auto* serve = app.add_subcommand("serve", "Run the HTTP/JSON service");
    serve->add_option("--port", port)->capture_default_str();
    serve->add_option("--bind", bind)->capture_default_str();
    serve->add_option("--data-dir", data_dir)->capture_default_str();
    serve->add_option("--cors-origin", cors)->capture_default_str();

    app.add_subcommand("openapi", "Print the service's OpenAPI description");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*analyze) return run_analyze(a);
        if (*merge) return run_merge(merge_inputs, merge_out);
        if (*gen_cmd) return run_gen(scenario, seed, gen_length, gen_lag, gen_out);
        if (*serve) return run_serve(bind, port, data_dir, cors);
        if (app.got_subcommand("openapi")) {
            std::cout << to_text(server::openapi());
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error [" << e.code_name() << "]: " << e.what() << "\n";
        return e.code() == Errc::Io ? kExitIo : kExitAnalysis;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return 0;
}

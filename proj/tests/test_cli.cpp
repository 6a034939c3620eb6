#include "tempocause/analysis.hpp"
#include "tempocause/flowgraph.hpp"
#include "tempocause/server.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

using namespace tempocause;
namespace fs = std::filesystem;

namespace {

const std::string kData = TEMPOCAUSE_DATA_DIR;

struct RunResult {
    int code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir = fs::temp_directory_path() /
              ("tempocause_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    RunResult run(const std::string& args) const {
        const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
        const std::string cmd = std::string("'") + TEMPOCAUSE_CLI + "' " + args + " >'" + out.string() + "' 2>'" +
                                err.string() + "'";
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
    }

    json read_json(const fs::path& p) const { return json::parse(slurp(p)); }
};

CausalFlowGraph chain_graph(const std::vector<std::string>& vars) {
    CausalFlowGraph g;
    for (std::size_t i = 0; i + 1 < vars.size(); ++i) {
        const auto a = EventDef::levels(vars[i], vars[i], {"1"});
        const auto b = EventDef::levels(vars[i + 1], vars[i + 1], {"1"});
        SaveDiff diff;
        add_relation(g, a, EffectSpec::value_in(b), Window{1, 1}, EffectType::ValueIn, 0.5, "t0", diff);
    }
    return g;
}

} // namespace

TEST_F(Cli, AnalyzeFigureOneGivesElevation0375) {
    const auto r = run("analyze --data '" + kData + "/fig1.csv' --effect v_e:increase --window 1,1 --causes '" +
                       kData + "/fig1_causes.json' --out '" + dir.string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rep = read_json(dir / "report.json");
    EXPECT_NEAR(rep["causes"][0]["elevation"].get<double>(), 0.375, 1e-12);
    EXPECT_TRUE(fs::exists(dir / "sweep.csv"));
    EXPECT_TRUE(fs::exists(dir / "summary.md"));
    EXPECT_FALSE(fs::exists(dir / "estimate.json"));

    // same bytes as the library kernel
    const auto ds = load_csv(kData + "/fig1.csv");
    const auto causes = causes_from_json(json::parse(slurp(kData + "/fig1_causes.json")));
    EXPECT_EQ(slurp(dir / "report.json"),
              report_text(significance_report(ds, causes, EffectSpec::increase("v_e"), {1, 1}, 0)));
}

TEST_F(Cli, AnalyzeEstimateRanksPlantedCauseFirst) {
    const auto truth = read_json(kData + "/planted_range.truth.json");
    const auto d = std::to_string(truth["relations"][0]["delay"].get<int>());
    const auto r = run("analyze --data '" + kData + "/planted_range.csv' --effect effect:increase --window " + d +
                       "," + d + " --estimate --out '" + dir.string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    std::set<std::string> planted;
    for (const auto& rel : truth["relations"]) planted.insert(rel["cause"].get<std::string>());
    const auto rep = read_json(dir / "report.json");
    ASSERT_FALSE(rep["causes"].empty());
    EXPECT_TRUE(planted.count(rep["causes"][0]["event"]["variable"].get<std::string>()));
    const auto est = read_json(dir / "estimate.json");
    EXPECT_FALSE(est["estimated"].empty());
    const auto sweep = slurp(dir / "sweep.csv");
    EXPECT_EQ(sweep.substr(0, sweep.find('\n')).find("delay"), 0u);
}

TEST_F(Cli, ValueInEffectGrammar) {
    std::ofstream(dir / "c.json") << R"([{"id":"ex","variable":"Exercise","kind":"levels","levels":["1"]}])";
    auto r = run("analyze --data '" + kData + "/glucose_sample.csv' --time-col hour "
                 "--effect 'RegularIns:valuein:high|normal' --window 0,0 --causes '" +
                 (dir / "c.json").string() + "' --out '" + dir.string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_json(dir / "report.json")["effect"]["event"]["levels"], (json{"high", "normal"}));

    r = run("analyze --data '" + kData + "/glucose_sample.csv' --time-col hour --effect Glucose:valuein:0,110 "
            "--estimate --out '" + dir.string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rep = read_json(dir / "report.json");
    EXPECT_EQ(rep["effect"]["event"]["lo"], 0.0);
    EXPECT_EQ(rep["effect"]["event"]["hi"], 110.0);
    EXPECT_EQ(rep["causes"][0]["event"]["id"], "est:RegularIns");

    r = run("analyze --data '" + kData + "/planted_range.csv' --effect effect:valuein:1,2 --causes '" + kData +
            "/fig1_causes.json' --out '" + dir.string() + "'");
    EXPECT_EQ(r.code, 2) << "fig1 causes reference a variable absent from this file";
}

TEST_F(Cli, ExitCodes) {
    const std::string causes = "--causes '" + kData + "/fig1_causes.json' --out '" + dir.string() + "'";
    EXPECT_EQ(run("analyze --data /nonexistent.csv --effect v_e:increase " + causes).code, 1);
    EXPECT_EQ(run("analyze --data '" + kData + "/fig1.csv' --effect v_e:increase --causes /nope.json").code, 1);
    EXPECT_EQ(run("analyze --data '" + kData + "/fig1.csv' --effect zz:increase " + causes).code, 2);
    EXPECT_EQ(run("analyze --data '" + kData + "/fig1.csv' --effect v_e:sideways " + causes).code, 2);
    EXPECT_EQ(run("analyze --data '" + kData + "/fig1.csv' --effect v_e:increase --window 3,1 " + causes).code, 2);
    EXPECT_EQ(run("analyze --data '" + kData + "/fig1.csv' --effect v_e:increase --out '" + dir.string() + "'").code,
              2);
    const auto r = run("gen --scenario bogus --out '" + (dir / "x.csv").string() + "'");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("error"), std::string::npos);
    std::ofstream(dir / "bad.json") << "[{\"id\": 1}]";
    EXPECT_EQ(run("flow merge '" + (dir / "bad.json").string() + "'").code, 2);
}

TEST_F(Cli, GenIsDeterministicAndWritesSidecar) {
    ASSERT_EQ(run("gen --scenario planted-range --seed 9 --out '" + (dir / "a.csv").string() + "'").code, 0);
    ASSERT_EQ(run("gen --scenario planted-range --seed 9 --out '" + (dir / "b.csv").string() + "'").code, 0);
    EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
    EXPECT_EQ(slurp(dir / "a.truth.json"), slurp(dir / "b.truth.json"));
    ASSERT_EQ(run("gen --scenario planted-range --seed 10 --out '" + (dir / "c.csv").string() + "'").code, 0);
    EXPECT_NE(slurp(dir / "a.csv"), slurp(dir / "c.csv"));
}

TEST_F(Cli, GenShiftLagThree) {
    ASSERT_EQ(run("gen --scenario shift --seed 1 --lag 3 --out '" + (dir / "s.csv").string() + "'").code, 0);
    const auto truth = read_json(dir / "s.truth.json");
    ASSERT_EQ(truth["relations"].size(), 1u);
    EXPECT_EQ(truth["relations"][0]["delay"], 3);
    EXPECT_EQ(truth["relations"][0]["cause"], "cause");
}

TEST_F(Cli, GenNullHasNoRelations) {
    ASSERT_EQ(run("gen --scenario null --seed 4 --length 100 --out '" + (dir / "n.csv").string() + "'").code, 0);
    const auto truth = read_json(dir / "n.truth.json");
    EXPECT_TRUE(truth["relations"].is_array());
    EXPECT_TRUE(truth["relations"].empty());
    EXPECT_EQ(load_csv(dir / "n.csv").length(), 100u);
}

TEST_F(Cli, FlowMergeWithSelfIsIdentity) {
    const auto g = chain_graph({"a", "b", "c"});
    persist(g, dir / "g.json");
    const auto r = run("flow merge '" + (dir / "g.json").string() + "' '" + (dir / "g.json").string() + "' -o '" +
                       (dir / "m.json").string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(dir / "m.json"), slurp(dir / "g.json"));
}

TEST_F(Cli, FlowMergeDisjointIsUnion) {
    persist(chain_graph({"a", "b"}), dir / "x.json");
    persist(chain_graph({"p", "q", "r"}), dir / "y.json");
    const auto r = run("flow merge '" + (dir / "x.json").string() + "' '" + (dir / "y.json").string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto merged = graph_from_json(json::parse(r.out));
    EXPECT_EQ(merged.nodes.size(), 5u);
    EXPECT_EQ(merged.edges.size(), 3u);
}

TEST_F(Cli, FlowMergeCycleWarnsAndExitsZero) {
    persist(chain_graph({"a", "b", "c"}), dir / "x.json");
    persist(chain_graph({"c", "a"}), dir / "y.json");
    const auto r = run("flow merge '" + (dir / "x.json").string() + "' '" + (dir / "y.json").string() + "' -o '" +
                       (dir / "m.json").string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("rejected"), std::string::npos);
    EXPECT_NE(r.err.find("existing path"), std::string::npos);
    EXPECT_EQ(restore(dir / "m.json").graph.edges.size(), 2u);
}

TEST_F(Cli, OpenApiDocMatchesCommand) {
    const auto r = run("openapi");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out, to_text(server::openapi()));
    EXPECT_EQ(slurp(std::string(TEMPOCAUSE_DOCS_DIR) + "/openapi.json"), r.out)
        << "regenerate docs/openapi.json with `tempocause openapi`";
}

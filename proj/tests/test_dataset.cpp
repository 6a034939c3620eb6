#include "tempocause/dataset.hpp"
#include "tempocause/generate.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>

using namespace tempocause;

namespace {

Errc parse_error_code(const std::string& text, const IngestOptions& opt = {}) {
    try {
        parse_csv(text, opt);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected parse failure";
    return Errc::Io;
}

} // namespace

TEST(Ingest, ThreeColumnsEightRowsOneMissing) {
    const std::string csv =
        "a,b,c\n1.5,2.5,x\n2.5,3.5,y\n3.5,,x\n4.5,5.5,y\n5.5,6.5,x\n6.5,7.5,y\n7.5,8.5,x\n8.5,9.5,y\n";
    const auto ds = parse_csv(csv);
    EXPECT_EQ(ds.length(), 8u);
    ASSERT_EQ(ds.variables().size(), 3u);
    std::size_t missing = 0;
    for (const auto& v : ds.variables()) missing += v.missing_count();
    EXPECT_EQ(missing, 1u);
    EXPECT_TRUE(ds.at("b").missing(2));
    EXPECT_TRUE(ds.at("a").is_continuous());
    EXPECT_TRUE(ds.at("c").is_discrete());
}

TEST(Ingest, DoseLevelsAreDiscrete) {
    const auto ds = parse_csv("dose,x\nlow,1.5\nnormal,2.5\nhigh,3.5\nnormal,4.5\n,5.5\nlow,6.5\n");
    const auto& v = ds.at("dose");
    ASSERT_TRUE(v.is_discrete());
    EXPECT_EQ(v.levels(), (std::vector<std::string>{"low", "normal", "high"}));
    EXPECT_TRUE(v.missing(4));
}

TEST(Ingest, ManyDistinctFloatsAreContinuous) {
    std::string csv = "x\n";
    for (int i = 0; i < 1000; ++i) csv += std::to_string(i * 0.37 + 0.01) + "\n";
    const auto ds = parse_csv(csv);
    EXPECT_TRUE(ds.at("x").is_continuous());
    EXPECT_EQ(ds.length(), 1000u);
}

TEST(Ingest, SmallIntegerColumnIsDiscreteSortedNumerically) {
    const auto ds = parse_csv("k\n10\n2\n1\n2\n");
    const auto& v = ds.at("k");
    ASSERT_TRUE(v.is_discrete());
    EXPECT_EQ(v.levels(), (std::vector<std::string>{"1", "2", "10"}));
}

TEST(Ingest, FractionalValuesStayContinuousEvenIfFew) {
    const auto ds = parse_csv("x\n0.5\n1.5\n0.5\n");
    EXPECT_TRUE(ds.at("x").is_continuous());
}

TEST(Ingest, DeclaredDiscreteOverridesThreshold) {
    IngestOptions opt;
    opt.discrete_cols = {"x"};
    std::string csv = "x\n";
    for (int i = 0; i < 20; ++i) csv += std::to_string(i) + "\n";
    EXPECT_TRUE(parse_csv(csv).at("x").is_continuous());
    EXPECT_TRUE(parse_csv(csv, opt).at("x").is_discrete());
}

TEST(Ingest, TimeColumnIsValidatedAndDropped) {
    IngestOptions opt;
    opt.time_col = "t";
    const auto ds = parse_csv("t,x\n0,1.5\n1,2.5\n2,3.5\n", opt);
    EXPECT_EQ(ds.variables().size(), 1u);
    EXPECT_EQ(ds.find("t"), nullptr);
    EXPECT_TRUE(ds.warnings().empty());
}

TEST(Ingest, NonUniformTimeWarns) {
    IngestOptions opt;
    opt.time_col = "t";
    const auto ds = parse_csv("t,x\n0,1.5\n1,2.5\n5,3.5\n", opt);
    ASSERT_EQ(ds.warnings().size(), 1u);
}

TEST(Ingest, Errors) {
    EXPECT_EQ(parse_error_code("a,b\n1,2\n3\n4,5\n"), Errc::RaggedRows);
    IngestOptions opt;
    opt.time_col = "t";
    EXPECT_EQ(parse_error_code("t,x\n0,1.5\n2,2.5\n1,3.5\n", opt), Errc::NonMonotonicTime);
    EXPECT_EQ(parse_error_code("t,x\n0,1.5\n0,2.5\n1,3.5\n", opt), Errc::NonMonotonicTime);
    EXPECT_EQ(parse_error_code("a\n1\n"), Errc::TooFewRows);
    EXPECT_EQ(parse_error_code("a,b\n,\n,\n"), Errc::NoUsableColumns);
    EXPECT_EQ(parse_error_code("t\n1\n2\n3\n", opt), Errc::NoUsableColumns);
    try {
        load_csv("/nonexistent/file.csv");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::Io);
    }
}

TEST(Ingest, HighCardinalityTextColumnDroppedWithWarning) {
    std::string csv = "id,x\n";
    for (int i = 0; i < 20; ++i) csv += "k" + std::to_string(i) + "," + std::to_string(i * 0.5 + 0.25) + "\n";
    const auto ds = parse_csv(csv);
    EXPECT_EQ(ds.find("id"), nullptr);
    EXPECT_EQ(ds.warnings().size(), 1u);
}

TEST(Ingest, QuotedFieldsCrlfAndBom) {
    const auto ds = parse_csv("\xEF\xBB\xBF" "name,x\r\n\"a,b\",1.5\r\n\"say \"\"hi\"\"\",2.5\r\n");
    const auto& v = ds.at("name");
    ASSERT_TRUE(v.is_discrete());
    EXPECT_EQ(v.levels()[0], "a,b");
    EXPECT_EQ(v.levels()[1], "say \"hi\"");
}

TEST(Ingest, DeterministicSameBytesSameDataset) {
    const auto g = gen::generate("planted-range", {3, {}, {}});
    EXPECT_EQ(parse_csv(g.csv), parse_csv(g.csv));
}

TEST(Ingest, RoundTripOverGeneratedScenarios) {
    for (const auto& name : gen::scenario_names()) {
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const auto g = gen::generate(name, {seed, std::size_t{200}, {}});
            IngestOptions opt;
            if (name == "glucose") opt.time_col = "hour";
            const auto ds = parse_csv(g.csv, opt);
            const auto again = parse_csv(export_csv(ds));
            EXPECT_EQ(ds, again) << name << " seed " << seed;
        }
    }
}

TEST(Ingest, RoundTripPreservesMissingness) {
    const auto ds = parse_csv("a,b\n1.25,\n,x\n3,y\n4,\n");
    const auto again = parse_csv(export_csv(ds));
    EXPECT_EQ(ds, again);
    EXPECT_EQ(again.at("a").missing_count(), 1u);
    EXPECT_EQ(again.at("b").missing_count(), 2u);
}

TEST(Summary, ConstantSeries) {
    std::vector<double> v(10, 5.0);
    const Dataset ds("c", {Variable::continuous("x", v)});
    const auto s = summarize(ds.at("x"));
    EXPECT_EQ(s.min, 5.0);
    EXPECT_EQ(s.max, 5.0);
    EXPECT_EQ(s.mean, 5.0);
    std::size_t occupied = 0;
    for (auto c : s.histogram.counts) occupied += c > 0;
    EXPECT_EQ(occupied, 1u);
}

TEST(Summary, DiscreteFrequencies) {
    const auto ds = parse_csv("k,x\na,1.5\na,2.5\nb,3.5\n,4.5\n");
    const auto s = summarize(ds.at("k"));
    ASSERT_EQ(s.level_frequencies.size(), 2u);
    EXPECT_EQ(s.level_frequencies[0], (std::pair<std::string, std::size_t>{"a", 2}));
    EXPECT_EQ(s.level_frequencies[1], (std::pair<std::string, std::size_t>{"b", 1}));
    EXPECT_EQ(s.missing, 1u);
    EXPECT_EQ(s.count, 3u);
}

TEST(Summary, HistogramCoversObservedRange) {
    const auto ds = parse_csv(gen::generate("planted-range", {5, {}, {}}).csv);
    for (const auto& s : summary(ds, 17)) {
        if (s.kind != VarKind::Continuous) {
            std::size_t total = 0;
            for (const auto& [l, n] : s.level_frequencies) total += n;
            EXPECT_EQ(total, s.count);
            continue;
        }
        ASSERT_EQ(s.histogram.edges.size(), 18u);
        EXPECT_EQ(s.histogram.edges.front(), s.min);
        EXPECT_EQ(s.histogram.edges.back(), s.max);
        std::size_t total = 0;
        for (auto c : s.histogram.counts) total += c;
        EXPECT_EQ(total, s.count);
    }
}

// Mean of the bundled glucose sample, computed independently with pandas
// (df["Glucose"].mean()) when the file was generated.
TEST(Summary, GlucoseSampleGoldenMean) {
    IngestOptions opt;
    opt.time_col = "hour";
    const auto ds = load_csv(std::string(TEMPOCAUSE_DATA_DIR) + "/glucose_sample.csv", opt);
    const auto s = summarize(ds.at("Glucose"));
    EXPECT_NEAR(s.mean, 128.73345, 1e-9);
    EXPECT_EQ(s.count + s.missing, ds.length());
}

TEST(Fingerprint, DependsOnNamesAndLength) {
    const auto a = parse_csv("x,y\n1.5,2.5\n3.5,4.5\n");
    const auto b = parse_csv("x,z\n1.5,2.5\n3.5,4.5\n");
    EXPECT_NE(fingerprint(a).hash, fingerprint(b).hash);
    EXPECT_EQ(fingerprint(a), fingerprint(parse_csv("x,y\n9.5,9.5\n9.5,9.5\n")));
}

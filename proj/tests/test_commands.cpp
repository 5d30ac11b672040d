#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <gtest/gtest.h>

#include "abk/frontend/commands.hpp"
#include "support.hpp"

using namespace abk::frontend;
using abk::testing::fixture;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun cli(std::vector<std::string> args) {
    args.insert(args.begin(), "abk");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

bool has_line(const std::string& text, const std::string& prefix, const std::string& verdict) {
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
        if (line.rfind(prefix, 0) == 0 && line.size() >= verdict.size() &&
            line.compare(line.size() - verdict.size(), verdict.size(), verdict) == 0)
            return true;
    return false;
}

} // namespace

TEST(Verify, So3Passes) {
    const CliRun r = cli({"verify", fixture("so3.json")});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_TRUE(has_line(r.out, "CHECK jacobi[pt]", "PASS"));
    EXPECT_TRUE(has_line(r.out, "CHECK d_squared[pt:theta1]", "PASS"));
}

TEST(Verify, BrokenSo3FailsJacobiAndDSquared) {
    const CliRun r = cli({"verify", fixture("so3-broken.json")});
    EXPECT_EQ(r.code, 1);
    EXPECT_TRUE(has_line(r.out, "CHECK jacobi[pt]", "FAIL"));
    EXPECT_TRUE(has_line(r.out, "CHECK d_squared[pt:theta2]", "FAIL"));
}

TEST(Verify, TangentPassesWithAnchorHomomorphism) {
    const CliRun r = cli({"verify", fixture("tangent2.json")});
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_TRUE(has_line(r.out, "CHECK anchor_hom[U]", "PASS"));
    EXPECT_TRUE(has_line(r.out, "CHECK leibniz[U]", "PASS"));
}

TEST(Verify, LineFormat) {
    const CliRun r = cli({"verify", fixture("tangent2.json")});
    const std::regex line(R"(CHECK \S+ max_defect=\d\.\d{6}e[+-]\d{2} tol=\S+ at=\[[^\]]*\] (PASS|FAIL))");
    std::istringstream in(r.out);
    int checks = 0;
    for (std::string l; std::getline(in, l);)
        if (l.rfind("CHECK", 0) == 0) {
            EXPECT_TRUE(std::regex_match(l, line)) << l;
            ++checks;
        }
    EXPECT_GT(checks, 0);
}

TEST(Verify, TransitionsAndCorruptions) {
    EXPECT_EQ(cli({"verify", fixture("tangent-charts.json")}).code, 0);
    const CliRun bad = cli({"verify", fixture("tangent-charts-corrupt.json")});
    EXPECT_EQ(bad.code, 1);
    EXPECT_TRUE(has_line(bad.out, "CHECK anchor_compat[U->V]", "FAIL"));
    EXPECT_EQ(cli({"verify", fixture("transformation.json")}).code, 0);
    EXPECT_EQ(cli({"verify", fixture("transformation-wrong.json")}).code, 1);
}

TEST(Verify, LoadErrorsExitTwo) {
    const CliRun r = cli({"verify", fixture("bad-anchor.json")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("/anchor/U"), std::string::npos);
    EXPECT_EQ(cli({"verify", fixture("missing.json")}).code, 2);
}

TEST(Verify, DeterministicUnderSeed) {
    for (const char* f : {"tangent2.json", "transformation.json", "separable.json"}) {
        const CliRun a = cli({"verify", fixture(f), "--seed", "5"});
        const CliRun b = cli({"verify", fixture(f), "--seed", "5"});
        EXPECT_EQ(a.out, b.out);
    }
    EXPECT_NE(cli({"verify", fixture("tangent2.json"), "--seed", "5"}).out,
              cli({"verify", fixture("tangent2.json"), "--seed", "6"}).out);
}

TEST(Verify, TolScaleCanForceFailure) {
    EXPECT_EQ(cli({"verify", fixture("tangent2.json"), "--tol-scale", "1e-12"}).code, 1);
    EXPECT_EQ(cli({"verify", fixture("so3-broken.json"), "--tol-scale", "1e9"}).code, 0);
}

TEST(Integrate, FreeMotion) {
    const CliRun r = cli({"integrate", fixture("free.json"), "--start", "0,1", "--t0", "0", "--t1", "1", "--steps", "100"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.rfind("t,x1,u1\n", 0), 0u);
    const std::string last = r.out.substr(r.out.rfind('\n', r.out.size() - 2) + 1);
    double t, x, w;
    char c1, c2;
    std::istringstream(last) >> t >> c1 >> x >> c2 >> w;
    EXPECT_EQ(t, 1.0);
    EXPECT_NEAR(x, 1.0, 1e-9);
    EXPECT_EQ(w, 1.0);
    EXPECT_NE(r.err.find("admissibility_defect="), std::string::npos);
}

TEST(Integrate, SeparableToFileMatchesClosedForm) {
    const auto path = std::filesystem::temp_directory_path() / "abk_separable.csv";
    const CliRun r = cli({"integrate", fixture("separable.json"), "--start", "0,1", "--t1", "1", "--steps", "1000", "--out",
                       path.string()});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("convergence_ratio="), std::string::npos);
    std::ifstream in(path);
    std::string line, last;
    while (std::getline(in, line)) last = line;
    double t, x, w;
    char c1, c2;
    std::istringstream(last) >> t >> c1 >> x >> c2 >> w;
    EXPECT_EQ(t, 1.0);
    EXPECT_NEAR(x, std::log(2.0), 1e-7);
    EXPECT_NEAR(w, 0.5, 1e-7);
}

TEST(Integrate, CsvIsDeterministic) {
    const std::vector<std::string> args = {"integrate", fixture("separable.json"), "--start", "0.3,-0.7", "--steps", "50"};
    EXPECT_EQ(cli(args).out, cli(args).out);
}

TEST(Integrate, UsageErrors) {
    EXPECT_EQ(cli({"integrate", fixture("free.json"), "--start", "0"}).code, 2);
    EXPECT_EQ(cli({"integrate", fixture("free.json"), "--start", "0,x"}).code, 2);
    EXPECT_EQ(cli({"integrate", fixture("so3.json"), "--start", "0,0,0"}).code, 2);
    EXPECT_EQ(cli({"integrate", fixture("free.json"), "--start", "0,1", "--steps", "1"}).code, 2);
    EXPECT_EQ(cli({"integrate", fixture("free.json")}).code, 2);
}

TEST(Integrate, BlowUpExitsOne) {
    // w' = -w^2 from w(0) = -1 blows up at t = 1
    EXPECT_EQ(cli({"integrate", fixture("separable.json"), "--start", "0,-1", "--t1", "3", "--steps", "30"}).code, 1);
}

TEST(Morphism, RotationAndScaling) {
    const CliRun ok = cli({"morphism", fixture("so3-rotation.json")});
    EXPECT_EQ(ok.code, 0) << ok.out << ok.err;
    EXPECT_TRUE(has_line(ok.out, "CHECK unit_laws", "PASS"));
    const CliRun bad = cli({"morphism", fixture("so3-scaling.json")});
    EXPECT_EQ(bad.code, 1);
    EXPECT_TRUE(has_line(bad.out, "CHECK morphism", "FAIL"));
    EXPECT_EQ(cli({"morphism", fixture("so3.json")}).code, 2);
}

TEST(Cli, Usage) {
    EXPECT_EQ(cli({}).code, 2);
    EXPECT_EQ(cli({"frobnicate"}).code, 2);
    EXPECT_EQ(cli({"verify"}).code, 2);
    EXPECT_EQ(cli({"--help"}).code, 0);
}

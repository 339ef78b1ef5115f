#include "mnri/cli.hpp"
#include "mnri/csv.hpp"
#include "mnri/inference.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mnri;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path tmp_dir() {
  fs::path p(MNRI_TEST_TMP);
  fs::create_directories(p);
  return p;
}

std::string write_file(const std::string& name, const std::string& content) {
  const auto path = tmp_dir() / name;
  std::ofstream(path) << content;
  return path.string();
}

std::string fmt(double v) { return csv::format_double(v); }

// Columns y, age, marker, noise; marker and noise carry no information beyond age.
std::string null_csv(long n, std::uint64_t seed, double mu = 1.0) {
  const auto s = oracle::synthetic_null(n, 0.4, mu, 2, seed);
  std::ostringstream os;
  os << "y,age,marker,noise\n";
  for (long i = 0; i < n; ++i) {
    os << (s.y(i) > 0.5 ? "1" : "0") << ',' << fmt(50.0 + 10.0 * s.x(i, 1)) << ',' << fmt(s.z(i, 0)) << ','
       << fmt(s.z(i, 1)) << '\n';
  }
  return os.str();
}

nlohmann::json compare_json(const std::vector<std::string>& args) {
  const auto r = run(args);
  EXPECT_EQ(r.code, 0) << r.err;
  return nlohmann::json::parse(r.out);
}

csv::Table parse_table(const std::string& text) {
  std::istringstream in(text);
  return csv::read(in);
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"bogus"}).code, 2);
  EXPECT_EQ(run({"compare", "--input", "x.csv"}).code, 2);
  EXPECT_EQ(run({"compare", "--input", "x.csv", "--outcome", "y", "--link", "cauchit"}).code, 2);
}

TEST(Compare, ReportFieldsAndDefaults) {
  const auto path = write_file("null1.csv", null_csv(300, 1));
  const auto j = compare_json({"compare", "--input", path, "--outcome", "y", "--base", "age", "--new", "marker"});
  EXPECT_EQ(j["mode"], "single");
  EXPECT_EQ(j["link"], "logit");
  EXPECT_EQ(j["tool_version"], cli::kToolVersion);
  EXPECT_EQ(j["sample_sizes"]["n"], 300);
  EXPECT_TRUE(j["sample_sizes"]["n_train"].is_null());
  EXPECT_EQ(j["mnri_test"]["reference"]["kind"], "scaled_chisq");
  EXPECT_EQ(j["mnri_test"]["reference"]["q"], 1);
  EXPECT_EQ(j["nri_test"]["reference"]["kind"], "normal");
  EXPECT_NE(j["nri_test"]["notes"].get<std::string>().find("invalid reference distribution"), std::string::npos);
  EXPECT_FALSE(j.contains("classical_scale"));
  const double p = j["mnri_test"]["p_value"];
  EXPECT_GE(p, 0.0);
  EXPECT_LE(p, 1.0);
}

TEST(Compare, ClassicalScaleIsDoubled) {
  const auto path = write_file("null2.csv", null_csv(250, 2));
  const auto j = compare_json(
      {"compare", "--input", path, "--outcome", "y", "--base", "age", "--new", "marker,noise", "--classical"});
  EXPECT_DOUBLE_EQ(j["classical_scale"]["nri_hard"].get<double>(), 2.0 * j["reclass"]["nri_hard"].get<double>());
  EXPECT_DOUBLE_EQ(j["classical_scale"]["mnri_smooth"].get<double>(),
                   2.0 * j["reclass"]["mnri_smooth"].get<double>());
}

TEST(Compare, JsonRoundTripsFieldForField) {
  const auto a = csv::read_file(write_file("rt_a.csv", null_csv(220, 3)));
  const auto b = csv::read_file(write_file("rt_b.csv", null_csv(180, 4)));
  cli::ColumnSpec spec{"y", {"age"}, {"marker", "noise"}, {{"age", 4}}};
  for (const csv::Table* test : {static_cast<const csv::Table*>(nullptr), &b}) {
    for (auto link : {glm::LinkKind::logit, glm::LinkKind::probit}) {
      for (bool classical : {false, true}) {
        const auto report = cli::compare(a, spec, link, test, classical);
        const auto text = cli::to_json(report).dump(2);
        const auto back = cli::report_from_json(nlohmann::json::parse(text));
        EXPECT_TRUE(back == report);
        EXPECT_EQ(cli::to_json(back).dump(2), text);
      }
    }
  }
}

TEST(Compare, PValuesUniformishUnderNull) {
  std::vector<double> ps;
  for (std::uint64_t seed = 100; seed < 160; ++seed) {
    const auto path = write_file("null_seed.csv", null_csv(200, seed));
    const auto j = compare_json({"compare", "--input", path, "--outcome", "y", "--base", "age", "--new", "marker"});
    ps.push_back(j["mnri_test"]["p_value"]);
  }
  // 60 draws: the 1% critical value of the KS statistic is about 0.21.
  EXPECT_LE(inference::ks_distance(ps, [](double x) { return std::clamp(x, 0.0, 1.0); }), 0.21);
}

TEST(Compare, TrainTestOnSameFileCollapsesToSingleSample) {
  const auto path = write_file("same.csv", null_csv(260, 5));
  const std::vector<std::string> base = {"compare", "--input", path, "--outcome", "y", "--base", "age", "--new",
                                         "marker"};
  auto with_test = base;
  with_test.insert(with_test.end(), {"--test-file", path});
  const auto single = compare_json(base);
  const auto tt = compare_json(with_test);
  EXPECT_EQ(tt["mode"], "train_test");
  EXPECT_EQ(tt["mnri_test"]["reference"]["kind"], "chisq_mixture");
  EXPECT_NEAR(tt["mnri_test"]["statistic"].get<double>(), single["mnri_test"]["statistic"].get<double>(), 1e-12);
  EXPECT_NEAR(tt["reclass"]["mnri_smooth"].get<double>(), single["reclass"]["mnri_smooth"].get<double>(), 1e-14);
  EXPECT_EQ(tt["sample_sizes"]["n_train"], 260);
}

TEST(Compare, TestFileHeaderMustMatch) {
  const auto a = write_file("hdr_a.csv", null_csv(100, 6));
  const auto b = write_file("hdr_b.csv", "y,age,marker\n1,2,3\n0,1,1\n1,0,2\n0,3,1\n");
  const auto r = run({"compare", "--input", a, "--outcome", "y", "--base", "age", "--new", "marker", "--test-file", b});
  EXPECT_EQ(r.code, 2);
}

TEST(Compare, DuplicatedColumnIsFitFailureNamingModel) {
  auto table = csv::read_file(write_file("dup_src.csv", null_csv(150, 7)));
  table.header.push_back("age_copy");
  for (auto& row : table.rows) row.push_back(row[1]);
  std::ostringstream os;
  cli::write_table(os, table);
  const auto path = write_file("dup.csv", os.str());
  const auto r = run({"compare", "--input", path, "--outcome", "y", "--base", "age", "--new", "age_copy"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("RankDeficient"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("expanded"), std::string::npos) << r.err;
}

TEST(Compare, DataErrorsExitTwo) {
  const auto good = write_file("good.csv", null_csv(120, 8));
  const std::vector<std::string> tail = {"--outcome", "y", "--base", "age", "--new", "marker"};
  auto with = [&](const std::string& path, std::vector<std::string> extra = {}) {
    std::vector<std::string> a = {"compare", "--input", path};
    a.insert(a.end(), tail.begin(), tail.end());
    a.insert(a.end(), extra.begin(), extra.end());
    return run(a).code;
  };
  // Missing column.
  EXPECT_EQ(run({"compare", "--input", good, "--outcome", "y", "--base", "age", "--new", "absent"}).code, 2);
  // Missing file.
  EXPECT_EQ(with((tmp_dir() / "missing.csv").string()), 2);
  // Non-binary outcome.
  EXPECT_EQ(with(write_file("nonbin.csv", "y,age,marker\n1,1,2\n2,2,1\n0,3,5\n1,4,1\n0,5,2\n")), 2);
  // Missing value.
  EXPECT_EQ(with(write_file("na.csv", "y,age,marker\n1,1,2\n0,NA,1\n0,3,5\n1,4,1\n0,5,2\n")), 2);
  EXPECT_EQ(with(write_file("empty.csv", "y,age,marker\n1,1,2\n0,,1\n0,3,5\n1,4,1\n0,5,2\n")), 2);
  // Constant column.
  EXPECT_EQ(with(write_file("const.csv", "y,age,marker\n1,1,2\n0,2,2\n0,3,2\n1,4,2\n0,5,2\n")), 2);
  // Outcome also listed as covariate, and no new column.
  EXPECT_EQ(run({"compare", "--input", good, "--outcome", "y", "--base", "y", "--new", "marker"}).code, 2);
  EXPECT_EQ(run({"compare", "--input", good, "--outcome", "y", "--base", "age"}).code, 2);
  EXPECT_EQ(with(good, {"--spline", "marker:9"}), 2);
}

TEST(Compare, DegenerateOutcomeExitsFour) {
  const auto path = write_file("degenerate.csv", "y,age,marker\n1,1,2\n1,2,1\n1,3,5\n1,4,1\n1,5,2\n");
  const auto r = run({"compare", "--input", path, "--outcome", "y", "--base", "age", "--new", "marker"});
  EXPECT_EQ(r.code, 4);
}

TEST(Compare, OutFileMatchesStdout) {
  const auto path = write_file("out_src.csv", null_csv(150, 9));
  const auto out_path = (tmp_dir() / "report.json").string();
  const std::vector<std::string> args = {"compare", "--input", path, "--outcome", "y", "--base", "age", "--new",
                                         "marker"};
  auto with_out = args;
  with_out.insert(with_out.end(), {"--out", out_path});
  const auto direct = run(args);
  ASSERT_EQ(run(with_out).code, 0);
  std::ifstream in(out_path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), direct.out);
}

TEST(Plotdata, RecordsAndDiagonal) {
  const auto path = write_file("plot.csv", null_csv(500, 10));
  const auto r = run({"plotdata", "--input", path, "--outcome", "y", "--base", "age", "--new", "marker"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = parse_table(r.out);
  EXPECT_EQ(t.header, (std::vector<std::string>{"id", "y", "prob_base", "prob_expanded"}));
  ASSERT_EQ(t.rows.size(), 500u);
  const auto pb = t.numeric_column("prob_base");
  const auto pe = t.numeric_column("prob_expanded");
  double mad = 0;
  for (std::size_t i = 0; i < pb.size(); ++i) mad += std::abs(pe[i] - pb[i]) / pb.size();
  EXPECT_LT(mad, 0.02);
  EXPECT_EQ(t.rows[0][0], "1");
  EXPECT_EQ(t.rows[499][0], "500");
}

TEST(Plotdata, EmptyNewListGivesIdenticalProbabilities) {
  const auto path = write_file("plot_same.csv", null_csv(120, 11));
  const auto r = run({"plotdata", "--input", path, "--outcome", "y", "--base", "age"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = parse_table(r.out);
  EXPECT_EQ(t.numeric_column("prob_base"), t.numeric_column("prob_expanded"));
  EXPECT_EQ(t.rows.size(), 120u);
}

TEST(Spline, AddsColumnsAndKnotComment) {
  const auto path = write_file("spline_src.csv", null_csv(200, 12));
  const auto r = run({"spline", "--input", path, "--column", "age", "--knots", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = parse_table(r.out);
  EXPECT_EQ(t.header.size(), 4u + 3u);
  EXPECT_EQ(t.header[4], "age_rcs1");
  EXPECT_EQ(t.header[6], "age_rcs3");
  ASSERT_EQ(t.comments.size(), 1u);
  EXPECT_EQ(t.comments[0].rfind(" knots age ", 0), 0u);
  EXPECT_EQ(t.numeric_column("age_rcs1"), t.numeric_column("age"));
}

TEST(Spline, ValueAtFirstKnotHasZeroNonlinearColumns) {
  const auto path = write_file("spline_knot.csv", "y,a\n1,10\n0,20\n1,40\n0,70\n1,90\n0,95\n");
  const auto r = run({"spline", "--input", path, "--column", "a", "--knot-values", "10,40,70,90"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = parse_table(r.out);
  EXPECT_EQ(t.numeric_column("a_rcs2")[0], 0.0);
  EXPECT_EQ(t.numeric_column("a_rcs3")[0], 0.0);
}

TEST(Spline, TooFewDistinctValuesExitsTwo) {
  const auto path = write_file("spline_few.csv", "y,a\n1,1\n0,1\n1,2\n0,2\n1,2\n0,1\n");
  EXPECT_EQ(run({"spline", "--input", path, "--column", "a", "--knots", "4"}).code, 2);
}

TEST(Spline, FileRoundTripEqualsInProcessExpansion) {
  const auto src = write_file("rt_src.csv", null_csv(400, 13));
  const auto expanded_path = (tmp_dir() / "rt_expanded.csv").string();
  ASSERT_EQ(run({"spline", "--input", src, "--column", "age", "--knots", "4", "--out", expanded_path}).code, 0);

  const auto in_process = compare_json(
      {"compare", "--input", src, "--outcome", "y", "--base", "age", "--new", "marker", "--spline", "age:4"});
  const auto via_file = compare_json({"compare", "--input", expanded_path, "--outcome", "y", "--base",
                                      "age_rcs1,age_rcs2,age_rcs3", "--new", "marker"});
  EXPECT_EQ(in_process["reclass"], via_file["reclass"]);
  EXPECT_EQ(in_process["mnri_test"], via_file["mnri_test"]);
  EXPECT_EQ(in_process["nri_test"], via_file["nri_test"]);
  EXPECT_EQ(in_process["knots"]["age"].size(), 4u);
}

TEST(Simulate, SingleReplicateRatesAreZeroOrOne) {
  const auto r = run({"simulate", "--n", "200", "--pi0", "0.5", "--mu-x", "1", "--reps", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = parse_table(r.out);
  ASSERT_EQ(t.rows.size(), 1u);
  for (const char* col : {"mnri_rate", "nri_rate"}) {
    const double v = t.numeric_column(col)[0];
    EXPECT_TRUE(v == 0.0 || v == 1.0);
  }
}

TEST(Simulate, SameSeedSameBytesAndGridOrder) {
  const std::vector<std::string> args = {"simulate", "--n", "200,300", "--pi0", "0.25,0.75", "--mu-x", "0.5",
                                         "--rho", "0,0.5", "--reps", "40", "--seed", "99", "--workers", "2"};
  const auto a = run(args);
  const auto b = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto t = parse_table(a.out);
  ASSERT_EQ(t.rows.size(), 8u);
  EXPECT_EQ(t.rows[0][0], "200");
  EXPECT_EQ(t.rows[1][3], "0.5");
  EXPECT_EQ(t.rows[2][1], "0.75");
  EXPECT_EQ(t.rows[4][0], "300");
  for (const char* col : {"mnri_se", "nri_se", "failed_fits"}) EXPECT_TRUE(t.has_column(col));
}

TEST(Simulate, InvalidGridExitsTwo) {
  EXPECT_EQ(run({"simulate", "--pi0", "1.5"}).code, 2);
  EXPECT_EQ(run({"simulate", "--n", "10"}).code, 2);
  EXPECT_EQ(run({"simulate", "--mode", "both"}).code, 2);
  EXPECT_EQ(run({"simulate", "--config", write_file("bad.json", "{not json")}).code, 2);
}

TEST(Simulate, ConfigFileWithFlagOverride) {
  const auto cfg = write_file("grid.json", R"({"n": [200], "pi0": 0.5, "mu_x": [0.25], "reps": 30,
                                                "mode": "train_test", "seed": 5})");
  const auto a = run({"simulate", "--config", cfg});
  ASSERT_EQ(a.code, 0) << a.err;
  auto t = parse_table(a.out);
  EXPECT_EQ(t.rows[0][4], "train_test");
  EXPECT_EQ(t.rows[0][6], "30");
  const auto b = run({"simulate", "--config", cfg, "--reps", "20", "--mode", "single"});
  t = parse_table(b.out);
  EXPECT_EQ(t.rows[0][4], "single");
  EXPECT_EQ(t.rows[0][6], "20");
  EXPECT_EQ(t.rows[0][7], "5");
}

TEST(Simulate, PublishedFirstRow) {
  const auto r = run({"simulate", "--n", "200", "--pi0", "0.25", "--mu-x", "0.25", "--rho", "0", "--reps", "5000"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = parse_table(r.out);
  const double mnri = t.numeric_column("mnri_rate")[0], nri = t.numeric_column("nri_rate")[0];
  const double se_m = t.numeric_column("mnri_se")[0], se_n = t.numeric_column("nri_se")[0];
  auto tol = [](double se, double pub) { return 3.0 * std::sqrt(se * se + pub * (1 - pub) / 5000.0); };
  EXPECT_NEAR(mnri, 0.0494, tol(se_m, 0.0494));
  EXPECT_NEAR(nri, 0.0468, tol(se_n, 0.0468));
}

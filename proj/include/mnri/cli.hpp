#pragma once

#include "mnri/csv.hpp"
#include "mnri/error.hpp"
#include "mnri/glm.hpp"
#include "mnri/inference.hpp"
#include "mnri/reclass.hpp"
#include "mnri/sim.hpp"

#include <json.hpp>

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mnri::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes: 0 success, 2 data, 3 fit, 4 degenerate outcome.
int exit_code(ErrorCode code);

struct ColumnSpec {
  std::string outcome;
  std::vector<std::string> base;
  std::vector<std::string> new_columns;
  std::map<std::string, int> spline;  // column -> knot count

  /// Names distinct, outcome not among the covariates, spline columns used.
  void validate() const;
  bool operator==(const ColumnSpec&) const = default;
};

/// "a:4,b:3" -> {a: 4, b: 3}.
std::map<std::string, int> parse_spline_spec(const std::string& text);

/// Model matrices built from a CSV table. Spline columns are replaced by
/// their <col>_rcs1.. basis columns.
struct PreparedData {
  glm::Dataset dataset;
  std::vector<std::string> base_names;  // without the intercept
  std::vector<std::string> new_names;
  std::map<std::string, std::vector<double>> knots;
};

/// `fixed_knots` (from a training sample) override knots computed from `table`.
/// q = 0 is allowed here.
PreparedData prepare(const csv::Table& table, const ColumnSpec& spec,
                     const std::map<std::string, std::vector<double>>* fixed_knots = nullptr);

struct CompareReport {
  std::string tool_version = kToolVersion;
  std::string mode = "single";  // or "train_test"
  std::string link = "logit";
  ColumnSpec columns;
  std::map<std::string, std::vector<double>> knots;
  long n = 0;
  long n_events = 0;
  std::optional<long> n_train;
  std::optional<long> n_train_events;
  reclass::ReclassReport reclass;
  inference::TestResult mnri_test;
  inference::TestResult nri_test;
  /// Adds the doubled (classical-scale) values to the output.
  bool classical = false;

  bool operator==(const CompareReport&) const = default;
};

CompareReport compare(const csv::Table& input, const ColumnSpec& spec, glm::LinkKind link,
                      const csv::Table* test = nullptr, bool classical = false);

nlohmann::json to_json(const CompareReport& report);
CompareReport report_from_json(const nlohmann::json& j);

/// Rows (id, y, prob_base, prob_expanded), id counting data rows from 1.
void write_plotdata(std::ostream& out, const csv::Table& input, const ColumnSpec& spec, glm::LinkKind link);

/// Appends <col>_rcs1..<col>_rcs{k-1} and records the knots in a comment line.
csv::Table spline_expand(const csv::Table& input, const std::string& column, int k);
csv::Table spline_expand(const csv::Table& input, const std::string& column, const std::vector<double>& knots);
void write_table(std::ostream& out, const csv::Table& table);

struct SimGrid {
  std::vector<long> n{200};
  std::vector<double> pi0{0.5};
  std::vector<double> mu_x{1.0};
  std::vector<double> rho{0.0};
  long replicates = 1000;
  sim::SimMode mode = sim::SimMode::single;
  sim::NullStyle null_style = sim::NullStyle::enforced;
  std::uint64_t seed = 20220131;
  double alpha = 0.05;

  /// Cells in n, pi0, mu_x, rho order (rho varying fastest).
  std::vector<sim::SimConfig> cells() const;
};

SimGrid grid_from_json(const nlohmann::json& j);
void write_sim_table(std::ostream& out, const std::vector<sim::SimTableRow>& rows);

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mnri::cli

#include "mnri/cli.hpp"

#include "mnri/spline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace mnri::cli {

using nlohmann::json;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::DataError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::TooFewDistinctValues:
      return 2;
    case ErrorCode::DegenerateOutcome:
      return 4;
    default:
      return 3;
  }
}

void ColumnSpec::validate() const {
  if (outcome.empty()) fail(ErrorCode::InvalidArgument, "an outcome column is required");
  std::set<std::string> seen{outcome};
  for (const auto* list : {&base, &new_columns}) {
    for (const auto& name : *list) {
      if (name.empty()) fail(ErrorCode::InvalidArgument, "empty column name");
      if (name == outcome) fail(ErrorCode::InvalidArgument, "outcome '" + name + "' also listed as a covariate");
      if (!seen.insert(name).second) fail(ErrorCode::InvalidArgument, "column '" + name + "' listed twice");
    }
  }
  for (const auto& [name, k] : spline) {
    const bool used = std::find(base.begin(), base.end(), name) != base.end() ||
                      std::find(new_columns.begin(), new_columns.end(), name) != new_columns.end();
    if (!used) fail(ErrorCode::InvalidArgument, "spline column '" + name + "' is not a base or new column");
    if (k < 3 || k > 5) fail(ErrorCode::InvalidArgument, "spline knot count must be 3, 4 or 5");
  }
}

std::map<std::string, int> parse_spline_spec(const std::string& text) {
  std::map<std::string, int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto colon = item.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == item.size()) {
      fail(ErrorCode::InvalidArgument, "spline entries look like column:knots, got '" + item + "'");
    }
    int k = 0;
    try {
      std::size_t used = 0;
      k = std::stoi(item.substr(colon + 1), &used);
      if (used != item.size() - colon - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidArgument, "bad knot count in '" + item + "'");
    }
    out[item.substr(0, colon)] = k;
  }
  return out;
}

namespace {

std::vector<double> outcome_column(const csv::Table& table, const std::string& name) {
  auto y = table.numeric_column(name);
  for (double v : y) {
    if (v != 0.0 && v != 1.0) fail(ErrorCode::DataError, "outcome column '" + name + "' must be coded 0/1");
  }
  if (y.empty()) fail(ErrorCode::DataError, "input has no data rows");
  const bool all_same = std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); });
  if (all_same) fail(ErrorCode::DegenerateOutcome, "outcome column '" + name + "' has only one class");
  return y;
}

Eigen::MatrixXd to_matrix(const std::vector<Eigen::VectorXd>& cols, Eigen::Index n, bool intercept) {
  const Eigen::Index offset = intercept ? 1 : 0;
  Eigen::MatrixXd m(n, static_cast<Eigen::Index>(cols.size()) + offset);
  if (intercept) m.col(0).setOnes();
  for (std::size_t j = 0; j < cols.size(); ++j) m.col(static_cast<Eigen::Index>(j) + offset) = cols[j];
  return m;
}

json reference_to_json(const inference::Reference& ref) {
  return std::visit(
      [](const auto& r) -> json {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, inference::ScaledChiSquare>) {
          return {{"kind", "scaled_chisq"}, {"k", r.k}, {"q", r.q}};
        } else if constexpr (std::is_same_v<T, inference::ChiSquareMixture>) {
          return {{"kind", "chisq_mixture"}, {"scale", r.scale}, {"weights", r.weights}};
        } else {
          return {{"kind", "normal"}, {"variance", r.variance}};
        }
      },
      ref);
}

inference::Reference reference_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "scaled_chisq") return inference::ScaledChiSquare{j.at("k").get<double>(), j.at("q").get<int>()};
  if (kind == "chisq_mixture") {
    return inference::ChiSquareMixture{j.at("scale").get<double>(), j.at("weights").get<std::vector<double>>()};
  }
  if (kind == "normal") return inference::NormalReference{j.at("variance").get<double>()};
  fail(ErrorCode::DataError, "unknown reference kind '" + kind + "'");
}

json test_to_json(const inference::TestResult& t) {
  return {{"statistic", t.statistic},
          {"reference", reference_to_json(t.reference)},
          {"p_value", t.p_value},
          {"notes", t.notes}};
}

inference::TestResult test_from_json(const json& j) {
  inference::TestResult t;
  t.statistic = j.at("statistic").get<double>();
  t.reference = reference_from_json(j.at("reference"));
  t.p_value = j.at("p_value").get<double>();
  t.notes = j.at("notes").get<std::string>();
  return t;
}

template <class T>
json optional_to_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> optional_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

long count_events(const glm::Dataset& d) { return static_cast<long>(d.y.sum()); }

}  // namespace

PreparedData prepare(const csv::Table& table, const ColumnSpec& spec,
                     const std::map<std::string, std::vector<double>>* fixed_knots) {
  spec.validate();
  const auto y = outcome_column(table, spec.outcome);
  const auto n = static_cast<Eigen::Index>(y.size());

  PreparedData out;
  std::vector<Eigen::VectorXd> x_cols;
  std::vector<Eigen::VectorXd> z_cols;
  auto add = [&](const std::string& name, std::vector<Eigen::VectorXd>& cols, std::vector<std::string>& names) {
    const auto v = table.numeric_column(name);
    if (std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); })) {
      fail(ErrorCode::DataError, "column '" + name + "' is constant");
    }
    const auto it = spec.spline.find(name);
    if (it == spec.spline.end()) {
      cols.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), n));
      names.push_back(name);
      return;
    }
    std::vector<double> knots;
    if (fixed_knots != nullptr && fixed_knots->count(name) != 0) {
      knots = fixed_knots->at(name);
    } else {
      knots = spline::default_knots(v, it->second);
    }
    const Eigen::MatrixXd basis = spline::rcs_basis(v, knots);
    for (Eigen::Index j = 0; j < basis.cols(); ++j) {
      cols.push_back(basis.col(j));
      names.push_back(name + "_rcs" + std::to_string(j + 1));
    }
    out.knots[name] = knots;
  };
  for (const auto& name : spec.base) add(name, x_cols, out.base_names);
  for (const auto& name : spec.new_columns) add(name, z_cols, out.new_names);

  out.dataset = glm::Dataset::make(Eigen::Map<const Eigen::VectorXd>(y.data(), n), to_matrix(x_cols, n, true),
                                   to_matrix(z_cols, n, false));
  return out;
}

CompareReport compare(const csv::Table& input, const ColumnSpec& spec, glm::LinkKind link_kind,
                      const csv::Table* test, bool classical) {
  const PreparedData train = prepare(input, spec);
  if (train.dataset.q() == 0) fail(ErrorCode::InvalidArgument, "compare needs at least one new column");
  const glm::Link link(link_kind);

  CompareReport report;
  report.link = std::string(glm::to_string(link_kind));
  report.columns = spec;
  report.knots = train.knots;
  report.classical = classical;

  if (test == nullptr) {
    const auto fits = glm::fit_nested(train.dataset, link);
    const auto sc = reclass::score_change(fits);
    report.mode = "single";
    report.n = static_cast<long>(train.dataset.n());
    report.n_events = count_events(train.dataset);
    report.reclass = reclass::make_report(sc);
    report.mnri_test = inference::test_mnri_single(fits);
    report.nri_test = inference::test_nri_normal_legacy(fits);
    return report;
  }

  if (test->header != input.header) fail(ErrorCode::DataError, "test file header differs from the input header");
  const PreparedData held_out = prepare(*test, spec, &train.knots);
  const auto pair = reclass::make_train_test(train.dataset, held_out.dataset, link);
  const auto sc = reclass::score_change(pair);
  report.mode = "train_test";
  report.n = static_cast<long>(held_out.dataset.n());
  report.n_events = count_events(held_out.dataset);
  report.n_train = static_cast<long>(train.dataset.n());
  report.n_train_events = count_events(train.dataset);
  report.reclass = reclass::make_report(sc);
  report.mnri_test = inference::test_mnri_train_test(pair);
  report.nri_test = inference::test_nri_normal_legacy(sc);
  return report;
}

json to_json(const CompareReport& r) {
  const auto& s = r.reclass;
  json j;
  j["tool_version"] = r.tool_version;
  j["mode"] = r.mode;
  j["link"] = r.link;
  j["columns"] = {{"outcome", r.columns.outcome},
                  {"base", r.columns.base},
                  {"new", r.columns.new_columns},
                  {"spline", r.columns.spline}};
  j["knots"] = r.knots;
  j["sample_sizes"] = {{"n", r.n},
                       {"n_events", r.n_events},
                       {"n_train", optional_to_json(r.n_train)},
                       {"n_train_events", optional_to_json(r.n_train_events)}};
  j["reclass"] = {{"nri_hard", s.nri_hard},
                  {"nri_smooth", s.nri_smooth},
                  {"mnri_hard", s.mnri_hard},
                  {"mnri_smooth", s.mnri_smooth},
                  {"mad", s.mad},
                  {"scaled_mad", s.scaled_mad},
                  {"cross_term", s.cross_term},
                  {"sign_inner", s.sign_inner},
                  {"sign_norm", s.sign_norm},
                  {"regression_form", optional_to_json(s.regression_form)},
                  {"ties", s.ties}};
  j["mnri_test"] = test_to_json(r.mnri_test);
  j["nri_test"] = test_to_json(r.nri_test);
  if (r.classical) {
    j["classical_scale"] = {{"nri_hard", 2.0 * s.nri_hard},
                            {"nri_smooth", 2.0 * s.nri_smooth},
                            {"mnri_hard", 2.0 * s.mnri_hard},
                            {"mnri_smooth", 2.0 * s.mnri_smooth}};
  }
  return j;
}

CompareReport report_from_json(const json& j) {
  try {
    CompareReport r;
    r.tool_version = j.at("tool_version").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.link = j.at("link").get<std::string>();
    const auto& c = j.at("columns");
    r.columns.outcome = c.at("outcome").get<std::string>();
    r.columns.base = c.at("base").get<std::vector<std::string>>();
    r.columns.new_columns = c.at("new").get<std::vector<std::string>>();
    r.columns.spline = c.at("spline").get<std::map<std::string, int>>();
    r.knots = j.at("knots").get<std::map<std::string, std::vector<double>>>();
    const auto& n = j.at("sample_sizes");
    r.n = n.at("n").get<long>();
    r.n_events = n.at("n_events").get<long>();
    r.n_train = optional_from_json<long>(n.at("n_train"));
    r.n_train_events = optional_from_json<long>(n.at("n_train_events"));
    const auto& s = j.at("reclass");
    r.reclass.nri_hard = s.at("nri_hard").get<double>();
    r.reclass.nri_smooth = s.at("nri_smooth").get<double>();
    r.reclass.mnri_hard = s.at("mnri_hard").get<double>();
    r.reclass.mnri_smooth = s.at("mnri_smooth").get<double>();
    r.reclass.mad = s.at("mad").get<double>();
    r.reclass.scaled_mad = s.at("scaled_mad").get<double>();
    r.reclass.cross_term = s.at("cross_term").get<double>();
    r.reclass.sign_inner = s.at("sign_inner").get<double>();
    r.reclass.sign_norm = s.at("sign_norm").get<long>();
    r.reclass.regression_form = optional_from_json<double>(s.at("regression_form"));
    r.reclass.ties = s.at("ties").get<long>();
    r.mnri_test = test_from_json(j.at("mnri_test"));
    r.nri_test = test_from_json(j.at("nri_test"));
    r.classical = j.contains("classical_scale");
    return r;
  } catch (const json::exception& e) {
    fail(ErrorCode::DataError, std::string("malformed report: ") + e.what());
  }
}

void write_plotdata(std::ostream& out, const csv::Table& input, const ColumnSpec& spec, glm::LinkKind link) {
  const PreparedData data = prepare(input, spec);
  const auto fits = glm::fit_nested(data.dataset, glm::Link(link));
  csv::write_row(out, {"id", "y", "prob_base", "prob_expanded"});
  for (Eigen::Index i = 0; i < data.dataset.n(); ++i) {
    csv::write_row(out, {std::to_string(i + 1), data.dataset.y(i) == 1.0 ? "1" : "0",
                         csv::format_double(fits.base.fitted_probs(i)),
                         csv::format_double(fits.expanded.fitted_probs(i))});
  }
}

csv::Table spline_expand(const csv::Table& input, const std::string& column, int k) {
  const auto v = input.numeric_column(column);
  return spline_expand(input, column, spline::default_knots(v, k));
}

csv::Table spline_expand(const csv::Table& input, const std::string& column, const std::vector<double>& knots) {
  const auto v = input.numeric_column(column);
  const Eigen::MatrixXd basis = spline::rcs_basis(v, knots);

  csv::Table out = input;
  std::string note = " knots " + column;
  for (double t : knots) note += " " + csv::format_double(t);
  out.comments.push_back(note);
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    const std::string name = column + "_rcs" + std::to_string(j + 1);
    if (input.has_column(name)) fail(ErrorCode::DataError, "column '" + name + "' already exists");
    out.header.push_back(name);
  }
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    for (Eigen::Index j = 0; j < basis.cols(); ++j) {
      out.rows[i].push_back(csv::format_double(basis(static_cast<Eigen::Index>(i), j)));
    }
  }
  return out;
}

void write_table(std::ostream& out, const csv::Table& table) {
  for (const auto& c : table.comments) out << '#' << c << '\n';
  csv::write_row(out, table.header);
  for (const auto& row : table.rows) csv::write_row(out, row);
}

std::vector<sim::SimConfig> SimGrid::cells() const {
  std::vector<sim::SimConfig> out;
  for (long nn : n) {
    for (double p : pi0) {
      for (double mu : mu_x) {
        for (double r : rho) {
          sim::SimConfig c;
          c.n = nn;
          c.pi0 = p;
          c.mu_x = mu;
          c.rho = r;
          c.replicates = replicates;
          c.mode = mode;
          c.null_style = null_style;
          c.seed = seed;
          c.alpha = alpha;
          c.validate();
          out.push_back(c);
        }
      }
    }
  }
  if (out.empty()) fail(ErrorCode::InvalidArgument, "simulation grid is empty");
  return out;
}

SimGrid grid_from_json(const json& j) {
  auto list = [&](const char* key, auto& target) {
    if (!j.contains(key)) return;
    using V = typename std::decay_t<decltype(target)>::value_type;
    if (j.at(key).is_array()) {
      target = j.at(key).get<std::vector<V>>();
    } else {
      target = {j.at(key).get<V>()};
    }
  };
  try {
    SimGrid g;
    list("n", g.n);
    list("pi0", g.pi0);
    list("mu_x", g.mu_x);
    list("rho", g.rho);
    if (j.contains("reps")) g.replicates = j.at("reps").get<long>();
    if (j.contains("mode")) g.mode = sim::parse_mode(j.at("mode").get<std::string>());
    if (j.contains("null_style")) g.null_style = sim::parse_null_style(j.at("null_style").get<std::string>());
    if (j.contains("seed")) g.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("alpha")) g.alpha = j.at("alpha").get<double>();
    return g;
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("bad simulation config: ") + e.what());
  }
}

void write_sim_table(std::ostream& out, const std::vector<sim::SimTableRow>& rows) {
  csv::write_row(out, {"n", "pi0", "mu_x", "rho", "mode", "null_style", "replicates", "seed", "alpha", "mnri_rate",
                       "nri_rate", "mnri_se", "nri_se", "failed_fits"});
  for (const auto& r : rows) {
    const auto& c = r.config;
    csv::write_row(out, {std::to_string(c.n), csv::format_double(c.pi0), csv::format_double(c.mu_x),
                         csv::format_double(c.rho), std::string(sim::to_string(c.mode)),
                         std::string(sim::to_string(c.null_style)), std::to_string(c.replicates),
                         std::to_string(c.seed), csv::format_double(c.alpha),
                         csv::format_double(r.rejection_rate_mnri), csv::format_double(r.rejection_rate_nri_normal),
                         csv::format_double(r.mc_standard_error), csv::format_double(r.mc_standard_error_nri),
                         std::to_string(r.failed_fits)});
  }
}

namespace {

// Writes to --out when given, else to `out`.
template <class F>
void emit(const std::string& path, std::ostream& out, F&& write) {
  if (path.empty()) {
    write(out);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) fail(ErrorCode::DataError, "cannot write '" + path + "'");
  write(file);
}

struct ModelOptions {
  std::string input;
  std::string outcome;
  std::vector<std::string> base;
  std::vector<std::string> new_columns;
  std::string spline;
  std::string link = "logit";
  std::string out;

  ColumnSpec spec() const {
    ColumnSpec s{outcome, base, new_columns, parse_spline_spec(spline)};
    return s;
  }
};

void add_model_options(CLI::App* cmd, ModelOptions& o) {
  cmd->add_option("--input", o.input, "CSV file with a header row")->required();
  cmd->add_option("--outcome", o.outcome, "0/1 outcome column")->required();
  cmd->add_option("--base", o.base, "base-model columns")->delimiter(',');
  cmd->add_option("--new", o.new_columns, "new columns added in the expanded model")->delimiter(',');
  cmd->add_option("--spline", o.spline, "restricted cubic spline columns, e.g. age:4");
  cmd->add_option("--link", o.link, "logit or probit")->check(CLI::IsMember({"logit", "probit"}));
  cmd->add_option("--out", o.out, "output file (default stdout)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reclassification statistics for nested binary regression models", "mnri"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  ModelOptions compare_opts;
  std::string test_file;
  bool classical = false;
  auto* compare_cmd = app.add_subcommand("compare", "fit nested models and report NRI and mNRI tests");
  add_model_options(compare_cmd, compare_opts);
  compare_cmd->add_option("--test-file", test_file, "independent test sample (train/test mode)");
  compare_cmd->add_flag("--classical", classical, "also report the doubled classical-scale statistics");

  ModelOptions plot_opts;
  auto* plot_cmd = app.add_subcommand("plotdata", "per-subject base and expanded event probabilities");
  add_model_options(plot_cmd, plot_opts);

  std::string spline_input, spline_column, spline_out;
  int spline_k = 4;
  std::vector<double> spline_knots;
  auto* spline_cmd = app.add_subcommand("spline", "append restricted cubic spline basis columns");
  spline_cmd->add_option("--input", spline_input, "CSV file")->required();
  spline_cmd->add_option("--column", spline_column, "numeric column to expand")->required();
  auto* k_opt = spline_cmd->add_option("--knots", spline_k, "number of knots (3, 4 or 5)");
  spline_cmd->add_option("--knot-values", spline_knots, "explicit knot locations")->delimiter(',')->excludes(k_opt);
  spline_cmd->add_option("--out", spline_out, "output file (default stdout)");

  SimGrid defaults;
  std::vector<long> sim_n;
  std::vector<double> sim_pi0, sim_mu, sim_rho;
  long sim_reps = defaults.replicates;
  std::string sim_mode, sim_null, sim_config, sim_out;
  std::uint64_t sim_seed = defaults.seed;
  double sim_alpha = defaults.alpha;
  unsigned sim_workers = 0;
  auto* sim_cmd = app.add_subcommand("simulate", "type I error of the NRI and mNRI tests");
  auto* o_n = sim_cmd->add_option("--n", sim_n, "sample sizes")->delimiter(',');
  auto* o_pi0 = sim_cmd->add_option("--pi0", sim_pi0, "event rates")->delimiter(',');
  auto* o_mu = sim_cmd->add_option("--mu-x", sim_mu, "mean shift of X among events")->delimiter(',');
  auto* o_rho = sim_cmd->add_option("--rho", sim_rho, "correlation of X and Z")->delimiter(',');
  auto* o_reps = sim_cmd->add_option("--reps", sim_reps, "replicates per cell");
  auto* o_mode = sim_cmd->add_option("--mode", sim_mode, "single or train_test");
  auto* o_null = sim_cmd->add_option("--null-style", sim_null, "enforced or literal");
  auto* o_seed = sim_cmd->add_option("--seed", sim_seed, "base seed");
  auto* o_alpha = sim_cmd->add_option("--alpha", sim_alpha, "nominal level");
  sim_cmd->add_option("--config", sim_config, "JSON grid file; flags override its entries");
  sim_cmd->add_option("--workers", sim_workers, "worker threads (0 = all cores)");
  sim_cmd->add_option("--out", sim_out, "output file (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (compare_cmd->parsed()) {
      const auto input = csv::read_file(compare_opts.input);
      std::optional<csv::Table> test;
      if (!test_file.empty()) test = csv::read_file(test_file);
      const auto report = compare(input, compare_opts.spec(), glm::parse_link(compare_opts.link),
                                  test ? &*test : nullptr, classical);
      emit(compare_opts.out, out, [&](std::ostream& os) { os << to_json(report).dump(2) << '\n'; });
    } else if (plot_cmd->parsed()) {
      const auto input = csv::read_file(plot_opts.input);
      std::ostringstream buffer;
      write_plotdata(buffer, input, plot_opts.spec(), glm::parse_link(plot_opts.link));
      emit(plot_opts.out, out, [&](std::ostream& os) { os << buffer.str(); });
    } else if (spline_cmd->parsed()) {
      const auto input = csv::read_file(spline_input);
      const auto table = spline_knots.empty() ? spline_expand(input, spline_column, spline_k)
                                              : spline_expand(input, spline_column, spline_knots);
      emit(spline_out, out, [&](std::ostream& os) { write_table(os, table); });
    } else if (sim_cmd->parsed()) {
      SimGrid grid;
      if (!sim_config.empty()) {
        std::ifstream in(sim_config);
        if (!in) fail(ErrorCode::InvalidArgument, "cannot open '" + sim_config + "'");
        json j;
        try {
          in >> j;
        } catch (const json::exception& e) {
          fail(ErrorCode::InvalidArgument, std::string("bad simulation config: ") + e.what());
        }
        grid = grid_from_json(j);
      }
      if (o_n->count()) grid.n = sim_n;
      if (o_pi0->count()) grid.pi0 = sim_pi0;
      if (o_mu->count()) grid.mu_x = sim_mu;
      if (o_rho->count()) grid.rho = sim_rho;
      if (o_reps->count()) grid.replicates = sim_reps;
      if (o_mode->count()) grid.mode = sim::parse_mode(sim_mode);
      if (o_null->count()) grid.null_style = sim::parse_null_style(sim_null);
      if (o_seed->count()) grid.seed = sim_seed;
      if (o_alpha->count()) grid.alpha = sim_alpha;
      const auto rows = sim::run_grid(grid.cells(), sim_workers);
      emit(sim_out, out, [&](std::ostream& os) { write_sim_table(os, rows); });
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.code());
  }
  return 0;
}

}  // namespace mnri::cli

#include "mnri/sim.hpp"

#include "mnri/error.hpp"
#include "mnri/inference.hpp"
#include "mnri/reclass.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace mnri::sim {

std::string_view to_string(SimMode mode) { return mode == SimMode::single ? "single" : "train_test"; }
std::string_view to_string(NullStyle style) {
  return style == NullStyle::literal ? "literal" : "enforced";
}

SimMode parse_mode(std::string_view s) {
  if (s == "single") return SimMode::single;
  if (s == "train_test" || s == "train-test") return SimMode::train_test;
  fail(ErrorCode::InvalidArgument, "unknown simulation mode '" + std::string(s) + "'");
}

NullStyle parse_null_style(std::string_view s) {
  if (s == "literal") return NullStyle::literal;
  if (s == "enforced") return NullStyle::enforced;
  fail(ErrorCode::InvalidArgument, "unknown null style '" + std::string(s) + "'");
}

void SimConfig::validate() const {
  if (n < 50) fail(ErrorCode::InvalidArgument, "simulation needs n >= 50");
  if (!(pi0 > 0.0 && pi0 < 1.0)) fail(ErrorCode::InvalidArgument, "pi0 must lie in (0, 1)");
  if (!(std::abs(rho) < 1.0)) fail(ErrorCode::InvalidArgument, "|rho| must be < 1");
  if (!std::isfinite(mu_x)) fail(ErrorCode::InvalidArgument, "mu_x must be finite");
  if (replicates < 1) fail(ErrorCode::InvalidArgument, "replicates must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t cell, std::uint64_t replicate,
                           std::uint64_t attempt) {
  std::uint64_t key = splitmix64(seed);
  key = splitmix64(key ^ cell);
  key = splitmix64(key ^ replicate);
  key = splitmix64(key ^ attempt);
  const std::uint64_t other = splitmix64(key);
  std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                    static_cast<std::uint32_t>(other), static_cast<std::uint32_t>(other >> 32)};
  engine_.seed(seq);
}

glm::Dataset gen_replicate(const SimConfig& config, RandomStream& stream) {
  config.validate();
  const Eigen::Index n = config.n;
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, 2);
  Eigen::MatrixXd z(n, 1);
  const double c = std::sqrt(1.0 - config.rho * config.rho);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double yi = stream.bernoulli(config.pi0) ? 1.0 : 0.0;
    const double e1 = stream.normal();
    const double e2 = stream.normal();
    const double xi = config.mu_x * yi + e1;
    y(i) = yi;
    x(i, 0) = 1.0;
    x(i, 1) = xi;
    z(i, 0) = config.null_style == NullStyle::literal ? config.rho * e1 + c * e2 : config.rho * xi + c * e2;
  }
  return glm::Dataset::make(std::move(y), std::move(x), std::move(z));
}

namespace {

bool is_fit_failure(ErrorCode code) {
  switch (code) {
    case ErrorCode::Separation:
    case ErrorCode::NoConvergence:
    case ErrorCode::RankDeficient:
    case ErrorCode::NotPositiveDefinite:
    case ErrorCode::DegenerateOutcome:
      return true;
    default:
      return false;
  }
}

ReplicateOutcome run_replicate(const SimConfig& config, std::uint64_t cell, std::uint64_t rep) {
  constexpr int max_attempts = 1000;
  const glm::Link link(glm::LinkKind::logit);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    RandomStream stream(config.seed, cell, rep, static_cast<std::uint64_t>(attempt));
    try {
      ReplicateOutcome out;
      reclass::ScoreChange sc;
      inference::TestResult mnri;
      if (config.mode == SimMode::single) {
        const glm::Dataset data = gen_replicate(config, stream);
        const glm::NestedFits fits = glm::fit_nested(data, link);
        sc = reclass::score_change(fits);
        mnri = inference::test_mnri_single(sc, static_cast<int>(data.q()));
      } else {
        const glm::Dataset train = gen_replicate(config, stream);
        const glm::Dataset test = gen_replicate(config, stream);
        const reclass::TrainTestPair pair = reclass::make_train_test(train, test, link);
        sc = reclass::score_change(pair);
        mnri = inference::test_mnri_train_test(pair);
      }
      const inference::TestResult nri = inference::test_nri_normal_legacy(sc);
      out.mnri_statistic = mnri.statistic;
      out.k = inference::k_constant(sc.event_rate());
      out.mnri_p = mnri.p_value;
      out.nri_statistic = nri.statistic;
      out.nri_p = nri.p_value;
      out.nri_smooth_scaled = static_cast<double>(sc.n()) * reclass::nri_smooth(sc);
      out.redraws = attempt;
      return out;
    } catch (const Error& e) {
      if (!is_fit_failure(e.code())) throw;
    }
  }
  fail(ErrorCode::NoConvergence, "replicate could not be fitted after repeated redraws");
}

}  // namespace

std::vector<ReplicateOutcome> simulate_replicates(const SimConfig& config, std::uint64_t cell_index,
                                                  unsigned workers) {
  config.validate();
  const std::size_t reps = static_cast<std::size_t>(config.replicates);
  std::vector<ReplicateOutcome> outcomes(reps);
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, reps));

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&]() {
    for (std::size_t i = next++; i < reps; i = next++) {
      try {
        outcomes[i] = run_replicate(config, cell_index, i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = reps;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  long redraws = 0;
  for (const auto& o : outcomes) redraws += o.redraws;
  if (static_cast<double>(redraws) > 0.01 * static_cast<double>(reps)) {
    fail(ErrorCode::NoConvergence, "more than 1% of replicates failed to fit (" + std::to_string(redraws) +
                                       " redraws over " + std::to_string(reps) + " replicates)");
  }
  return outcomes;
}

SimTableRow summarize(const SimConfig& config, const std::vector<ReplicateOutcome>& outcomes) {
  SimTableRow row;
  row.config = config;
  long mnri_rejects = 0, nri_rejects = 0;
  for (const auto& o : outcomes) {
    mnri_rejects += o.mnri_p < config.alpha ? 1 : 0;
    nri_rejects += o.nri_p < config.alpha ? 1 : 0;
    row.failed_fits += o.redraws;
  }
  const double reps = static_cast<double>(outcomes.size());
  row.rejection_rate_mnri = static_cast<double>(mnri_rejects) / reps;
  row.rejection_rate_nri_normal = static_cast<double>(nri_rejects) / reps;
  row.mc_standard_error = std::sqrt(row.rejection_rate_mnri * (1.0 - row.rejection_rate_mnri) / reps);
  row.mc_standard_error_nri =
      std::sqrt(row.rejection_rate_nri_normal * (1.0 - row.rejection_rate_nri_normal) / reps);
  return row;
}

SimTableRow run_cell(const SimConfig& config, std::uint64_t cell_index, unsigned workers) {
  return summarize(config, simulate_replicates(config, cell_index, workers));
}

std::vector<SimTableRow> run_grid(const std::vector<SimConfig>& configs, unsigned workers) {
  if (configs.empty()) fail(ErrorCode::InvalidArgument, "run_grid needs at least one cell");
  std::vector<SimTableRow> rows;
  rows.reserve(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) rows.push_back(run_cell(configs[i], i, workers));
  return rows;
}

Eigen::VectorXd BinormalTruth::expanded_coefficients() const {
  Eigen::VectorXd c(3);
  c << std::log(pi0 / (1.0 - pi0)) - 0.5 * mu_x * mu_x - 0.5 * mu_z * mu_z, mu_x, mu_z;
  return c;
}

Eigen::VectorXd BinormalTruth::base_coefficients() const {
  Eigen::VectorXd c(2);
  c << std::log(pi0 / (1.0 - pi0)) - 0.5 * mu_x * mu_x, mu_x;
  return c;
}

std::vector<Eigen::VectorXd> random_perturbations(int count_per_norm, const std::vector<double>& norms,
                                                  Eigen::Index dim, std::uint64_t seed) {
  RandomStream stream(seed, 0, 0);
  std::vector<Eigen::VectorXd> out;
  for (double norm : norms) {
    for (int i = 0; i < count_per_norm; ++i) {
      Eigen::VectorXd d(dim);
      for (Eigen::Index j = 0; j < dim; ++j) d(j) = stream.normal();
      out.push_back(norm * d / d.norm());
    }
  }
  return out;
}

std::vector<ChangeScoreComparison> proper_change_score_check(const BinormalTruth& truth,
                                                             const std::vector<Eigen::VectorXd>& perturbations,
                                                             long draws, std::uint64_t seed) {
  if (draws < 2) fail(ErrorCode::InvalidArgument, "need at least two draws");
  const glm::Link link(glm::LinkKind::logit);
  const Eigen::VectorXd theta = truth.expanded_coefficients();
  const Eigen::VectorXd base = truth.base_coefficients();
  const std::size_t m = perturbations.size();
  for (const auto& d : perturbations) {
    if (d.size() != theta.size()) fail(ErrorCode::InvalidArgument, "perturbation has the wrong dimension");
  }

  RandomStream stream(seed, 1, 0);
  double sum_truth = 0.0;
  std::vector<double> sum_pert(m, 0.0), sum_diff(m, 0.0), sum_diff2(m, 0.0);
  Eigen::Vector3d cov;
  for (long i = 0; i < draws; ++i) {
    const double y = stream.bernoulli(truth.pi0) ? 1.0 : 0.0;
    const double xv = truth.mu_x * y + stream.normal();
    const double zv = truth.mu_z * y + stream.normal();
    cov << 1.0, xv, zv;
    const double eta_base = base(0) + base(1) * xv;
    // The outcome enters the change score linearly through r, so it is
    // replaced by its exact conditional mean G(theta'(1, x, z)).
    const double y_mean = link.prob(theta.dot(cov));
    const double r = link.residual_weight(eta_base) * (y_mean - link.prob(eta_base));
    const double delta_truth = theta.dot(cov) - eta_base;
    const double t_truth = reclass::change_score_single(r, delta_truth, truth.pi0);
    sum_truth += t_truth;
    for (std::size_t j = 0; j < m; ++j) {
      const double t_pert = reclass::change_score_single(r, delta_truth + perturbations[j].dot(cov), truth.pi0);
      const double diff = t_truth - t_pert;
      sum_pert[j] += t_pert;
      sum_diff[j] += diff;
      sum_diff2[j] += diff * diff;
    }
  }
  const double n = static_cast<double>(draws);
  std::vector<ChangeScoreComparison> out(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double mean_diff = sum_diff[j] / n;
    const double var_diff = (sum_diff2[j] - n * mean_diff * mean_diff) / (n - 1.0);
    out[j].perturbation = perturbations[j];
    out[j].mean_truth = sum_truth / n;
    out[j].mean_perturbed = sum_pert[j] / n;
    out[j].difference = mean_diff;
    out[j].difference_se = std::sqrt(std::max(var_diff, 0.0) / n);
  }
  return out;
}

}  // namespace mnri::sim

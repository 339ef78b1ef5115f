#pragma once

#include "mnri/glm.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace mnri::sim {

enum class SimMode { single, train_test };
/// `literal`: (X, Z) | Y bivariate normal with correlation rho.
/// `enforced`: Z = rho X + sqrt(1 - rho^2) eps, so Z is independent of Y given X.
enum class NullStyle { literal, enforced };

std::string_view to_string(SimMode mode);
std::string_view to_string(NullStyle style);
SimMode parse_mode(std::string_view s);
NullStyle parse_null_style(std::string_view s);

struct SimConfig {
  long n = 200;
  double pi0 = 0.5;
  double mu_x = 1.0;
  double rho = 0.0;
  long replicates = 1000;
  SimMode mode = SimMode::single;
  NullStyle null_style = NullStyle::enforced;
  std::uint64_t seed = 20220131;
  double alpha = 0.05;

  void validate() const;
};

/// Deterministic per-replicate generator keyed by (seed, cell, replicate, attempt).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t cell, std::uint64_t replicate, std::uint64_t attempt = 0);

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  bool bernoulli(double p) { return uniform() < p; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// One conditional-binormal sample: x = (1, X), z = (Z).
glm::Dataset gen_replicate(const SimConfig& config, RandomStream& stream);

struct ReplicateOutcome {
  double mnri_statistic = 0.0;  // n * T^S
  double k = 0.0;
  double mnri_p = 1.0;
  double nri_statistic = 0.0;  // R_n (hard, half scale)
  double nri_p = 1.0;
  double nri_smooth_scaled = 0.0;  // n * R^S
  int redraws = 0;
};

/// Runs every replicate of one cell. `workers == 0` uses the hardware
/// concurrency; results do not depend on the worker count.
std::vector<ReplicateOutcome> simulate_replicates(const SimConfig& config, std::uint64_t cell_index = 0,
                                                  unsigned workers = 0);

struct SimTableRow {
  SimConfig config;
  double rejection_rate_mnri = 0.0;
  double rejection_rate_nri_normal = 0.0;
  double mc_standard_error = 0.0;  // for the mNRI rate
  double mc_standard_error_nri = 0.0;
  long failed_fits = 0;
};

SimTableRow summarize(const SimConfig& config, const std::vector<ReplicateOutcome>& outcomes);
SimTableRow run_cell(const SimConfig& config, std::uint64_t cell_index = 0, unsigned workers = 0);
std::vector<SimTableRow> run_grid(const std::vector<SimConfig>& configs, unsigned workers = 0);

/// Class-conditional binormal truth with unit variances and independent
/// covariates: X | Y ~ N(mu_x Y, 1), Z | Y ~ N(mu_z Y, 1). Both nested logit
/// models are then correctly specified.
struct BinormalTruth {
  double pi0 = 0.5;
  double mu_x = 1.0;
  double mu_z = 1.0;

  /// (intercept, X, Z) of the expanded model.
  Eigen::VectorXd expanded_coefficients() const;
  /// (intercept, X) of the base model.
  Eigen::VectorXd base_coefficients() const;
};

struct ChangeScoreComparison {
  Eigen::VectorXd perturbation;
  double mean_truth = 0.0;
  double mean_perturbed = 0.0;
  double difference = 0.0;  // mean_truth - mean_perturbed, paired draws
  double difference_se = 0.0;
};

std::vector<Eigen::VectorXd> random_perturbations(int count_per_norm, const std::vector<double>& norms,
                                                  Eigen::Index dim, std::uint64_t seed);

/// Monte Carlo expectation of the single-observation mNRI change score at the
/// true expanded coefficients and at each perturbed coefficient vector, using
/// the same covariate draws for every comparison. Y is integrated out given
/// (X, Z), which leaves the expectation unchanged and lowers the variance.
std::vector<ChangeScoreComparison> proper_change_score_check(const BinormalTruth& truth,
                                                             const std::vector<Eigen::VectorXd>& perturbations,
                                                             long draws, std::uint64_t seed);

}  // namespace mnri::sim

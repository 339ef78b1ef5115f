#pragma once

#include "mnri/glm.hpp"
#include "mnri/reclass.hpp"
#include "mnri/sim.hpp"

#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mnri::inference {

using numerics::SymMatrix;

/// k * chi2_q.
struct ScaledChiSquare {
  double k = 1.0;
  int q = 1;

  bool operator==(const ScaledChiSquare&) const = default;
};

/// scale * sum_j weights[j] * chi2_1.
struct ChiSquareMixture {
  double scale = 1.0;
  std::vector<double> weights;

  bool operator==(const ChiSquareMixture&) const = default;
};

/// N(0, variance), two-sided.
struct NormalReference {
  double variance = 1.0;

  bool operator==(const NormalReference&) const = default;
};

using Reference = std::variant<ScaledChiSquare, ChiSquareMixture, NormalReference>;

struct TestResult {
  double statistic = 0.0;
  Reference reference;
  double p_value = 1.0;
  std::string notes;

  bool operator==(const TestResult&) const = default;
};

/// p-value of `statistic` under `reference`: upper tail for the chi-square
/// forms, two-sided for the normal.
double p_value(const Reference& reference, double statistic);

/// phi(0) / (pi (1 - pi)).
double k_constant(double pi_hat);

/// n * T^S against k chi2_q with k from the evaluation event rate.
TestResult test_mnri_single(const glm::NestedFits& fits);
TestResult test_mnri_single(const reclass::ScoreChange& sc, int q);

/// +/- sqrt of the eigenvalues of var_train^1/2 var_test^-1 var_train^1/2,
/// sorted descending.
std::vector<double> mixture_weights(const SymMatrix& var_gamma_train, const SymMatrix& var_gamma_test);

/// n_test * T^S(train coefficients, test residuals) against the weighted
/// chi-square mixture.
TestResult test_mnri_train_test(const reclass::TrainTestPair& pair);

/// (4 n1)^-1 + (4 n0)^-1.
double legacy_nri_variance(long n_events, long n_nonevents);

/// Normal-reference test of the hard NRI; kept for comparison only.
TestResult test_nri_normal_legacy(const glm::NestedFits& fits);
TestResult test_nri_normal_legacy(const reclass::ScoreChange& sc);

extern const char* const kLegacyNriNote;

struct MomentSummary {
  long count = 0;
  double mean = 0.0;
  double mean_se = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double skewness_se = 0.0;
  double excess_kurtosis = 0.0;
  double jarque_bera = 0.0;
  double jarque_bera_p = 1.0;
};

MomentSummary summarize_moments(std::span<const double> values);

/// Moments of n * R^S over null replicates.
MomentSummary null_distribution_diagnostic(const sim::SimConfig& config, unsigned workers = 0);

/// sup_x |F_n(x) - F(x)|.
double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf);

}  // namespace mnri::inference

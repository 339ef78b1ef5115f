#include "mnri/inference.hpp"

#include "mnri/error.hpp"
#include "mnri/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mnri::inference {

const char* const kLegacyNriNote =
    "invalid reference distribution: the null distribution of the NRI is neither normal nor "
    "centered at zero; reported for comparison only";

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

double p_value(const Reference& reference, double statistic) {
  return std::visit(
      overloaded{
          [statistic](const ScaledChiSquare& r) {
            if (!(r.k > 0.0)) fail(ErrorCode::InvalidArgument, "scaled chi-square needs k > 0");
            // A negative statistic lies below the support of k chi2_q.
            return numerics::chisq_sf(std::max(statistic, 0.0) / r.k, r.q);
          },
          [statistic](const ChiSquareMixture& r) {
            return numerics::mixture_tail(statistic, numerics::MixtureSpec{r.weights, r.scale});
          },
          [statistic](const NormalReference& r) {
            if (!(r.variance > 0.0)) fail(ErrorCode::InvalidArgument, "normal reference needs variance > 0");
            return std::erfc(std::abs(statistic) / std::sqrt(2.0 * r.variance));
          },
      },
      reference);
}

double k_constant(double pi_hat) {
  if (!(pi_hat > 0.0 && pi_hat < 1.0)) {
    fail(ErrorCode::DegenerateOutcome, "k_constant requires an event rate strictly inside (0, 1)");
  }
  return numerics::norm_pdf(0.0) / (pi_hat * (1.0 - pi_hat));
}

TestResult test_mnri_single(const reclass::ScoreChange& sc, int q) {
  if (q < 1) fail(ErrorCode::InvalidArgument, "the mNRI test needs at least one new covariate");
  TestResult out;
  out.statistic = static_cast<double>(sc.n()) * reclass::mnri_smooth(sc);
  out.reference = ScaledChiSquare{k_constant(sc.event_rate()), q};
  out.p_value = p_value(out.reference, out.statistic);
  return out;
}

TestResult test_mnri_single(const glm::NestedFits& fits) {
  return test_mnri_single(reclass::score_change(fits), static_cast<int>(fits.data->q()));
}

std::vector<double> mixture_weights(const SymMatrix& var_gamma_train, const SymMatrix& var_gamma_test) {
  if (var_gamma_train.dimension() != var_gamma_test.dimension()) {
    fail(ErrorCode::InvalidArgument, "mixture_weights: dimension mismatch");
  }
  // Both must be positive definite; the factorizations throw otherwise.
  numerics::cholesky_lower(var_gamma_train);
  const SymMatrix root = numerics::sqrt_psd(var_gamma_train);
  const Eigen::MatrixXd middle = root.matrix() * numerics::solve_spd_columns(var_gamma_test, root.matrix());
  const numerics::SymEigen e = numerics::eig_sym(SymMatrix(middle));
  std::vector<double> weights;
  weights.reserve(2 * e.values.size());
  for (Eigen::Index j = 0; j < e.values.size(); ++j) {
    const double w = std::sqrt(std::max(e.values(j), 0.0));
    weights.push_back(w);
    weights.push_back(-w);
  }
  std::sort(weights.begin(), weights.end(), std::greater<>());
  return weights;
}

TestResult test_mnri_train_test(const reclass::TrainTestPair& pair) {
  const reclass::ScoreChange sc = reclass::score_change(pair);
  const glm::Dataset& test = pair.test_data();
  const glm::Dataset& train = *pair.train_fits.data;
  const Eigen::Index p = test.p();

  // Per-observation gamma variances; the training one is rescaled to the
  // test sample size so that unequal sizes give the variance of
  // sqrt(n_test) * gamma_hat.
  const double n_train = static_cast<double>(train.n());
  const double n_test = static_cast<double>(test.n());
  const auto train_blocks = glm::information_blocks(pair.train_fits.expanded, p);
  const auto test_blocks = glm::information_blocks(pair.test_fits.expanded, p);
  const SymMatrix var_train(train_blocks.inverse_gamma_gamma.matrix() * (n_test / n_train));

  const double k = k_constant(sc.event_rate());
  TestResult out;
  out.statistic = n_test * reclass::mnri_smooth(sc);
  out.reference = ChiSquareMixture{0.5 * k, mixture_weights(var_train, test_blocks.inverse_gamma_gamma)};
  out.p_value = p_value(out.reference, out.statistic);
  if (train.n() != test.n()) {
    std::ostringstream os;
    os << "training (n=" << train.n() << ") and test (n=" << test.n()
       << ") sizes differ; the mixture reference was derived for equal sizes";
    out.notes = os.str();
  }
  return out;
}

double legacy_nri_variance(long n_events, long n_nonevents) {
  if (n_events < 1 || n_nonevents < 1) {
    fail(ErrorCode::DegenerateOutcome, "legacy NRI variance needs events and non-events");
  }
  return 0.25 / static_cast<double>(n_events) + 0.25 / static_cast<double>(n_nonevents);
}

TestResult test_nri_normal_legacy(const reclass::ScoreChange& sc) {
  const long n1 = std::lround(sc.y.sum());
  const long n0 = static_cast<long>(sc.n()) - n1;
  TestResult out;
  out.statistic = reclass::nri_hard(sc);
  out.reference = NormalReference{legacy_nri_variance(n1, n0)};
  out.p_value = p_value(out.reference, out.statistic);
  out.notes = kLegacyNriNote;
  return out;
}

TestResult test_nri_normal_legacy(const glm::NestedFits& fits) {
  return test_nri_normal_legacy(reclass::score_change(fits));
}

MomentSummary summarize_moments(std::span<const double> values) {
  MomentSummary s;
  s.count = static_cast<long>(values.size());
  if (s.count < 4) fail(ErrorCode::InvalidArgument, "summarize_moments needs at least 4 values");
  const double n = static_cast<double>(s.count);
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  s.mean = mean;
  s.variance = m2 * n / (n - 1.0);
  s.mean_se = std::sqrt(s.variance / n);
  const double g1 = m3 / std::pow(m2, 1.5);
  const double g2 = m4 / (m2 * m2) - 3.0;
  s.skewness = g1 * std::sqrt(n * (n - 1.0)) / (n - 2.0);
  s.skewness_se = std::sqrt(6.0 * n * (n - 1.0) / ((n - 2.0) * (n + 1.0) * (n + 3.0)));
  s.excess_kurtosis = g2;
  s.jarque_bera = n / 6.0 * (g1 * g1 + 0.25 * g2 * g2);
  s.jarque_bera_p = numerics::chisq_sf(s.jarque_bera, 2);
  return s;
}

MomentSummary null_distribution_diagnostic(const sim::SimConfig& config, unsigned workers) {
  const auto outcomes = sim::simulate_replicates(config, 0, workers);
  std::vector<double> values;
  values.reserve(outcomes.size());
  for (const auto& o : outcomes) values.push_back(o.nri_smooth_scaled);
  return summarize_moments(values);
}

double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) fail(ErrorCode::InvalidArgument, "ks_distance: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace mnri::inference

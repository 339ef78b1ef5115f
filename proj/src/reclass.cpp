#include "mnri/reclass.hpp"

#include "mnri/error.hpp"
#include "mnri/numerics.hpp"

#include <cmath>

namespace mnri::reclass {

using Eigen::Index;

double extended_indicator(double u) {
  if (u > 0.0) return 1.0;
  if (u < 0.0) return 0.0;
  return 0.5;
}

double ScoreChange::event_rate() const { return y.mean(); }

namespace {

double normalizer(const ScoreChange& sc) {
  const double ybar = sc.event_rate();
  if (!(ybar > 0.0 && ybar < 1.0)) {
    fail(ErrorCode::DegenerateOutcome, "event rate of the evaluation sample is 0 or 1");
  }
  return static_cast<double>(sc.n()) * ybar * (1.0 - ybar);
}

void check_shapes(const ScoreChange& sc) {
  const Index n = sc.n();
  if (sc.delta.size() != n || sc.residual.size() != n || sc.prob_base.size() != n ||
      sc.prob_expanded.size() != n) {
    fail(ErrorCode::InvalidArgument, "ScoreChange vectors must share one length");
  }
  if (n == 0) fail(ErrorCode::InvalidArgument, "empty evaluation sample");
}

// [n ybar (1 - ybar)]^-1 sum weight_i (kernel(delta_i) - 1/2).
template <typename Kernel>
double statistic(const ScoreChange& sc, const VectorXd& weight, Kernel kernel) {
  check_shapes(sc);
  const double denom = normalizer(sc);
  double sum = 0.0;
  for (Index i = 0; i < sc.n(); ++i) sum += weight(i) * (kernel(sc.delta(i)) - 0.5);
  return sum / denom;
}

double hard(double u) { return extended_indicator(u); }
double smooth(double u) { return numerics::norm_cdf(u); }

VectorXd centered_outcome(const ScoreChange& sc) {
  return sc.y.array() - sc.event_rate();
}

}  // namespace

ScoreChange score_change(const glm::NestedFits& fits) {
  if (!fits.data) fail(ErrorCode::InvalidArgument, "NestedFits without data");
  ScoreChange sc;
  sc.y = fits.data->y;
  sc.delta = fits.expanded.linear_predictor - fits.base.linear_predictor;
  sc.residual = glm::score_residuals(fits.base, fits.link, sc.y);
  sc.prob_base = fits.base.fitted_probs;
  sc.prob_expanded = fits.expanded.fitted_probs;
  return sc;
}

TrainTestPair make_train_test(const glm::Dataset& train, const glm::Dataset& test, glm::Link link) {
  if (train.p() != test.p() || train.q() != test.q()) {
    fail(ErrorCode::InvalidArgument, "training and test data must share the covariate specification");
  }
  return TrainTestPair{glm::fit_nested(train, link), glm::fit_nested(test, link)};
}

ScoreChange score_change(const TrainTestPair& pair) {
  const glm::NestedFits& tr = pair.train_fits;
  const glm::NestedFits& te = pair.test_fits;
  if (!tr.data || !te.data) fail(ErrorCode::InvalidArgument, "TrainTestPair without data");
  if (tr.link.kind() != te.link.kind()) fail(ErrorCode::InvalidArgument, "train/test links differ");
  const glm::Dataset& data = *te.data;
  if (tr.expanded.coefficients.size() != data.p() + data.q() ||
      tr.base.coefficients.size() != data.p()) {
    fail(ErrorCode::InvalidArgument, "training fits do not match the test covariates");
  }
  const VectorXd eta_expanded = data.expanded_design() * tr.expanded.coefficients;
  const VectorXd eta_base = data.x * tr.base.coefficients;
  ScoreChange sc;
  sc.y = data.y;
  sc.delta = eta_expanded - eta_base;
  sc.residual = glm::score_residuals(te.base, te.link, sc.y);
  sc.prob_base = eta_base.unaryExpr([&](double e) { return tr.link.prob(e); });
  sc.prob_expanded = eta_expanded.unaryExpr([&](double e) { return tr.link.prob(e); });
  return sc;
}

double nri_hard(const ScoreChange& sc) { return statistic(sc, centered_outcome(sc), hard); }
double nri_smooth(const ScoreChange& sc) { return statistic(sc, centered_outcome(sc), smooth); }
double mnri_hard(const ScoreChange& sc) { return statistic(sc, sc.residual, hard); }
double mnri_smooth(const ScoreChange& sc) { return statistic(sc, sc.residual, smooth); }

double nri_hard(const glm::NestedFits& fits) { return nri_hard(score_change(fits)); }
double nri_smooth(const glm::NestedFits& fits) { return nri_smooth(score_change(fits)); }
double mnri_hard(const glm::NestedFits& fits) { return mnri_hard(score_change(fits)); }
double mnri_smooth(const glm::NestedFits& fits) { return mnri_smooth(score_change(fits)); }
double mnri_train_test(const TrainTestPair& pair) { return mnri_smooth(score_change(pair)); }

MadSummary mad_probabilities(const ScoreChange& sc) {
  check_shapes(sc);
  const double ybar = sc.event_rate();
  if (!(ybar > 0.0 && ybar < 1.0)) {
    fail(ErrorCode::DegenerateOutcome, "event rate of the evaluation sample is 0 or 1");
  }
  const double mad = (sc.prob_expanded - sc.prob_base).cwiseAbs().mean();
  return MadSummary{mad, mad / (2.0 * ybar * (1.0 - ybar))};
}

MadSummary mad_probabilities(const glm::NestedFits& fits) { return mad_probabilities(score_change(fits)); }

double mad_cross_term(const ScoreChange& sc) {
  const VectorXd expanded_residual = sc.y - sc.prob_expanded;
  return statistic(sc, expanded_residual, hard);
}

long count_ties(const ScoreChange& sc) {
  return static_cast<long>((sc.delta.array() == 0.0).count());
}

SignDecomposition sign_decomposition(const ScoreChange& sc) {
  check_shapes(sc);
  const double ybar = sc.event_rate();
  if (!(ybar > 0.0 && ybar < 1.0)) {
    fail(ErrorCode::DegenerateOutcome, "event rate of the evaluation sample is 0 or 1");
  }
  SignDecomposition out;
  for (Index i = 0; i < sc.n(); ++i) {
    const double s = 2.0 * extended_indicator(sc.delta(i)) - 1.0;
    out.sign_inner += s * sc.residual(i);
    out.sign_norm += s != 0.0 ? 1 : 0;
  }
  if (out.sign_norm == 0) fail(ErrorCode::AllTies, "every risk-score change is exactly zero");
  out.regression_form =
      out.sign_inner / static_cast<double>(out.sign_norm) / (2.0 * ybar * (1.0 - ybar));
  return out;
}

SignDecomposition sign_decomposition(const glm::NestedFits& fits) {
  return sign_decomposition(score_change(fits));
}

ReclassReport make_report(const ScoreChange& sc) {
  ReclassReport r;
  r.nri_hard = nri_hard(sc);
  r.nri_smooth = nri_smooth(sc);
  r.mnri_hard = mnri_hard(sc);
  r.mnri_smooth = mnri_smooth(sc);
  const MadSummary m = mad_probabilities(sc);
  r.mad = m.mad;
  r.scaled_mad = m.scaled_mad;
  r.cross_term = mad_cross_term(sc);
  r.ties = count_ties(sc);
  if (r.ties < sc.n()) {
    const SignDecomposition s = sign_decomposition(sc);
    r.sign_inner = s.sign_inner;
    r.sign_norm = s.sign_norm;
    r.regression_form = s.regression_form;
  }
  return r;
}

double change_score_single(double residual, double delta, double pi0) {
  return residual * (extended_indicator(delta) - 0.5) / (pi0 * (1.0 - pi0));
}

}  // namespace mnri::reclass

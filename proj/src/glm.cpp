#include "mnri/glm.hpp"

#include "mnri/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mnri::glm {

namespace {

constexpr double kProbClamp = 1e-12;
constexpr double kBoundaryProb = 1e-10;

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

}  // namespace

std::string_view to_string(LinkKind kind) {
  return kind == LinkKind::logit ? "logit" : "probit";
}

LinkKind parse_link(std::string_view name) {
  if (name == "logit") return LinkKind::logit;
  if (name == "probit") return LinkKind::probit;
  fail(ErrorCode::InvalidArgument, "unknown link '" + std::string(name) + "'");
}

double Link::prob(double eta) const {
  if (kind_ == LinkKind::logit) {
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
  }
  return numerics::norm_cdf(eta);
}

double Link::density(double eta) const {
  if (kind_ == LinkKind::logit) {
    const double p = prob(eta);
    return p * (1.0 - p);
  }
  return numerics::norm_pdf(eta);
}

double Link::residual_weight(double eta) const {
  if (kind_ == LinkKind::logit) return 1.0;
  const double upper = numerics::norm_cdf(-std::abs(eta));
  const double lower = 1.0 - upper;
  const double pdf = numerics::norm_pdf(eta);
  const double denom = upper * lower;
  if (denom > 0.0 && pdf > 0.0) return pdf / denom;
  // Mills-ratio asymptote far in the tails.
  return std::abs(eta);
}

double Link::fisher_weight(double eta) const {
  if (kind_ == LinkKind::logit) return density(eta);
  return numerics::norm_pdf(eta) * residual_weight(eta);
}

double Link::inverse(double p) const {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorCode::InvalidArgument, "Link::inverse requires p in (0, 1)");
  if (kind_ == LinkKind::logit) return std::log(p / (1.0 - p));
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (numerics::norm_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Dataset Dataset::make(VectorXd y, MatrixXd x, MatrixXd z) {
  const Index n = y.size();
  if (x.rows() != n || z.rows() != n) fail(ErrorCode::DataError, "row counts of y, x and z differ");
  if (x.cols() < 1) fail(ErrorCode::DataError, "x needs at least the constant column");
  for (Index i = 0; i < n; ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) fail(ErrorCode::DataError, "outcome must be coded 0/1");
    if (x(i, 0) != 1.0) fail(ErrorCode::DataError, "first column of x must be the constant 1");
  }
  if (!x.allFinite() || !z.allFinite()) fail(ErrorCode::DataError, "covariates must be finite");
  if (n < x.cols() + z.cols() + 1) fail(ErrorCode::DataError, "need n >= p + q + 1");
  const double events = y.sum();
  if (events == 0.0 || events == static_cast<double>(n)) {
    fail(ErrorCode::DegenerateOutcome, "outcome has no events or no non-events");
  }
  return Dataset{std::move(y), std::move(x), std::move(z)};
}

MatrixXd Dataset::expanded_design() const {
  MatrixXd d(n(), p() + q());
  d << x, z;
  return d;
}

double loglik(const VectorXd& y, const MatrixXd& design, const VectorXd& coef, Link link) {
  const VectorXd eta = design * coef;
  double ll = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    const double p = clamp_prob(link.prob(eta(i)));
    ll += y(i) * std::log(p) + (1.0 - y(i)) * std::log1p(-p);
  }
  return ll;
}

VectorXd score_residuals(const VectorXd& eta, Link link, const VectorXd& y) {
  VectorXd r(eta.size());
  for (Index i = 0; i < eta.size(); ++i) {
    r(i) = link.residual_weight(eta(i)) * (y(i) - link.prob(eta(i)));
  }
  return r;
}

VectorXd score_residuals(const FittedModel& fit, Link link, const VectorXd& y) {
  if (y.size() != fit.linear_predictor.size()) {
    fail(ErrorCode::InvalidArgument, "score_residuals: outcome length does not match fit");
  }
  return score_residuals(fit.linear_predictor, link, y);
}

VectorXd score(const VectorXd& y, const MatrixXd& design, const VectorXd& coef, Link link) {
  return design.transpose() * score_residuals(VectorXd(design * coef), link, y);
}

SymMatrix expected_information(const MatrixXd& design, const VectorXd& coef, Link link) {
  const VectorXd eta = design * coef;
  VectorXd w(eta.size());
  for (Index i = 0; i < eta.size(); ++i) w(i) = link.fisher_weight(eta(i));
  return SymMatrix(design.transpose() * w.asDiagonal() * design);
}

namespace {

bool near_boundary(const VectorXd& probs) {
  for (Index i = 0; i < probs.size(); ++i) {
    if (probs(i) < kBoundaryProb || probs(i) > 1.0 - kBoundaryProb) return true;
  }
  return false;
}

VectorXd probabilities(const VectorXd& eta, Link link) {
  return eta.unaryExpr([link](double e) { return link.prob(e); });
}

}  // namespace

FittedModel fit(const VectorXd& y, const MatrixXd& design, Link link, const FitOptions& options) {
  const Index n = y.size();
  const Index k = design.cols();
  if (design.rows() != n) fail(ErrorCode::InvalidArgument, "fit: design rows differ from outcome length");
  if (k < 1 || n < k) fail(ErrorCode::InvalidArgument, "fit: need at least as many rows as columns");
  if (!design.allFinite()) fail(ErrorCode::InvalidArgument, "fit: design has non-finite entries");
  const double ybar = y.mean();
  if (ybar <= 0.0 || ybar >= 1.0) fail(ErrorCode::DegenerateOutcome, "fit: outcome is constant");

  Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) {
    std::ostringstream os;
    os << "design has rank " << qr.rank() << " < " << k << " columns";
    fail(ErrorCode::RankDeficient, os.str());
  }

  VectorXd coef = VectorXd::Zero(k);
  for (Index j = 0; j < k; ++j) {
    if ((design.col(j).array() == 1.0).all()) {
      coef(j) = link.inverse(ybar);
      break;
    }
  }

  double ll = loglik(y, design, coef, link);
  FittedModel out;
  int iter = 0;
  bool converged = false;
  while (iter < options.max_iterations) {
    ++iter;
    const VectorXd u = score(y, design, coef, link);
    const SymMatrix info = expected_information(design, coef, link);
    VectorXd step;
    try {
      step = numerics::solve_spd(info, u);
    } catch (const Error& e) {
      if (near_boundary(probabilities(design * coef, link))) {
        fail(ErrorCode::Separation, "fitted probabilities reached {0,1}; information became singular");
      }
      fail(ErrorCode::RankDeficient, std::string("expected information is singular: ") + e.what());
    }

    VectorXd trial = coef + step;
    double ll_trial = loglik(y, design, trial, link);
    int halvings = 0;
    while (!(ll_trial >= ll - 1e-12 * std::abs(ll)) && halvings < 40) {
      step *= 0.5;
      trial = coef + step;
      ll_trial = loglik(y, design, trial, link);
      ++halvings;
    }
    const bool improved = ll_trial > ll;
    coef = trial;
    ll = ll_trial;

    if (u.cwiseAbs().maxCoeff() <= options.score_tol && step.norm() <= options.step_tol) {
      converged = true;
      break;
    }
    if (coef.norm() > options.divergence_norm && improved) {
      fail(ErrorCode::Separation, "coefficients diverge while the likelihood keeps improving");
    }
  }

  out.coefficients = coef;
  out.linear_predictor = design * coef;
  out.fitted_probs = probabilities(out.linear_predictor, link);
  out.loglik = ll;
  out.score = score(y, design, coef, link);
  out.iterations = iter;
  out.converged = converged;

  if (!converged) {
    if (near_boundary(out.fitted_probs)) {
      fail(ErrorCode::Separation, "no interior maximum: fitted probabilities reached {0,1}");
    }
    std::ostringstream os;
    os << "Fisher scoring did not converge in " << options.max_iterations << " iterations";
    fail(ErrorCode::NoConvergence, os.str());
  }
  out.expected_information = expected_information(design, coef, link);
  return out;
}

NestedFits fit_nested(std::shared_ptr<const Dataset> data, Link link, const FitOptions& options) {
  if (!data) fail(ErrorCode::InvalidArgument, "fit_nested: null dataset");
  auto tagged = [&](const char* model, const MatrixXd& design) {
    try {
      return fit(data->y, design, link, options);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(model) + " model: " + e.what(), model);
    }
  };
  NestedFits out;
  out.link = link;
  out.expanded = tagged("expanded", data->expanded_design());
  out.base = tagged("base", data->x);
  out.constant = tagged("constant", data->constant_design());
  out.data = std::move(data);
  return out;
}

NestedFits fit_nested(const Dataset& data, Link link, const FitOptions& options) {
  return fit_nested(std::make_shared<const Dataset>(data), link, options);
}

InformationBlocks information_blocks(const SymMatrix& info, Index p) {
  const Index dim = info.dimension();
  const Index q = dim - p;
  if (p < 1 || q < 1) fail(ErrorCode::InvalidArgument, "information_blocks: need p >= 1 and q >= 1");
  const MatrixXd& m = info.matrix();
  SymMatrix bb(m.topLeftCorner(p, p));
  MatrixXd bg = m.topRightCorner(p, q);
  SymMatrix gg(m.bottomRightCorner(q, q));
  const MatrixXd bb_inv_bg = numerics::solve_spd_columns(bb, bg);
  SymMatrix schur(gg.matrix() - bg.transpose() * bb_inv_bg);
  return InformationBlocks{std::move(bb), std::move(bg), std::move(gg), numerics::inverse_spd(schur)};
}

InformationBlocks information_blocks(const FittedModel& expanded, Index p) {
  const double n = static_cast<double>(expanded.n());
  return information_blocks(SymMatrix(expanded.expected_information.matrix() / n), p);
}

}  // namespace mnri::glm

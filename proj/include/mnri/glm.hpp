#pragma once

#include "mnri/numerics.hpp"

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <string_view>

namespace mnri::glm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using numerics::SymMatrix;

enum class LinkKind { logit, probit };

std::string_view to_string(LinkKind kind);
LinkKind parse_link(std::string_view name);

/// Inverse link G with derivative G' and score weight h = G' / (G (1 - G)).
class Link {
 public:
  constexpr explicit Link(LinkKind kind = LinkKind::logit) : kind_(kind) {}

  LinkKind kind() const noexcept { return kind_; }
  double prob(double eta) const;
  double density(double eta) const;
  /// h(eta); identically 1 for logit.
  double residual_weight(double eta) const;
  /// Fisher weight G'^2 / (G (1 - G)).
  double fisher_weight(double eta) const;
  double inverse(double p) const;

 private:
  LinkKind kind_;
};

/// Binary outcomes with base covariates `x` (first column the constant 1)
/// and new covariates `z`.
struct Dataset {
  VectorXd y;
  MatrixXd x;
  MatrixXd z;

  /// Validates the invariants and returns the dataset, or throws.
  static Dataset make(VectorXd y, MatrixXd x, MatrixXd z);

  Index n() const noexcept { return y.size(); }
  Index p() const noexcept { return x.cols(); }
  Index q() const noexcept { return z.cols(); }
  double event_rate() const { return y.mean(); }
  MatrixXd expanded_design() const;
  MatrixXd constant_design() const { return MatrixXd::Ones(n(), 1); }
};

struct FitOptions {
  int max_iterations = 100;
  double score_tol = 1e-8;
  double step_tol = 1e-8;
  /// Coefficient norm beyond which an improving likelihood is treated as separation.
  double divergence_norm = 1e3;
};

struct FittedModel {
  VectorXd coefficients;
  VectorXd linear_predictor;
  VectorXd fitted_probs;
  double loglik = 0.0;
  /// Total (not per-observation) expected information at the estimate.
  SymMatrix expected_information;
  VectorXd score;
  bool converged = false;
  int iterations = 0;

  Index n() const noexcept { return fitted_probs.size(); }
};

double loglik(const VectorXd& y, const MatrixXd& design, const VectorXd& coef, Link link);
VectorXd score(const VectorXd& y, const MatrixXd& design, const VectorXd& coef, Link link);
SymMatrix expected_information(const MatrixXd& design, const VectorXd& coef, Link link);

/// Maximum likelihood by Fisher scoring with step-halving.
FittedModel fit(const VectorXd& y, const MatrixXd& design, Link link, const FitOptions& options = {});

struct NestedFits {
  FittedModel expanded;
  FittedModel base;
  FittedModel constant;
  Link link;
  std::shared_ptr<const Dataset> data;
};

/// Fits the expanded (x, z), base (x) and constant models. Errors carry the
/// failing model's name in Error::model().
NestedFits fit_nested(std::shared_ptr<const Dataset> data, Link link, const FitOptions& options = {});
NestedFits fit_nested(const Dataset& data, Link link, const FitOptions& options = {});

/// r_i = h(eta_i) (y_i - G(eta_i)).
VectorXd score_residuals(const FittedModel& fit, Link link, const VectorXd& y);
VectorXd score_residuals(const VectorXd& eta, Link link, const VectorXd& y);

/// Partition of the per-observation expected information n^-1 I(theta) into
/// the leading `p` coefficients (beta) and the trailing ones (gamma).
struct InformationBlocks {
  SymMatrix beta_beta;
  MatrixXd beta_gamma;
  SymMatrix gamma_gamma;
  /// gamma-gamma block of the inverse: (I_gg - I_gb I_bb^-1 I_bg)^-1.
  SymMatrix inverse_gamma_gamma;
};

InformationBlocks information_blocks(const SymMatrix& per_observation_information, Index p);
InformationBlocks information_blocks(const FittedModel& expanded, Index p);

}  // namespace mnri::glm

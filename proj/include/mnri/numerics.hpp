#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace mnri::numerics {

using Eigen::Index;

/// Dense symmetric matrix. Construction checks symmetry to a relative
/// tolerance of 1e-10 and stores the exactly symmetrized average.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Eigen::MatrixXd m);

  static SymMatrix identity(Index n);
  static SymMatrix diagonal(const Eigen::VectorXd& d);

  Index dimension() const noexcept { return m_.rows(); }
  const Eigen::MatrixXd& matrix() const noexcept { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }

 private:
  Eigen::MatrixXd m_;
};

/// Lower Cholesky factor. A pivot at or below 1e-12 times the largest diagonal
/// entry raises NotPositiveDefinite.
Eigen::MatrixXd cholesky_lower(const SymMatrix& a);

Eigen::VectorXd solve_spd(const SymMatrix& a, const Eigen::VectorXd& b);
Eigen::MatrixXd solve_spd_columns(const SymMatrix& a, const Eigen::MatrixXd& b);
SymMatrix inverse_spd(const SymMatrix& a);

struct SymEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns, orthonormal, matching `values`
};

SymEigen eig_sym(const SymMatrix& a);

/// Symmetric square root of a positive semidefinite matrix.
SymMatrix sqrt_psd(const SymMatrix& a);

double norm_pdf(double x);
double norm_cdf(double x);

/// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

double chisq_cdf(double x, int dof);
/// Upper tail 1 - chisq_cdf, computed without cancellation.
double chisq_sf(double x, int dof);

/// Q = scale * sum_j weights[j] * chi2_1 with independent components.
struct MixtureSpec {
  std::vector<double> weights;
  double scale = 1.0;

  void validate() const;
};

/// P(Q > t) by Imhof inversion of the characteristic function.
double mixture_tail(double t, const MixtureSpec& spec);

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Adaptive Gauss-Kronrod (7/15) on a finite interval with global bisection.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol, int max_intervals = 2000);

}  // namespace mnri::numerics

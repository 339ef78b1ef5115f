#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace mnri::spline {

/// Restricted (natural) cubic spline: linear beyond the outer knots.
struct SplineBasis {
  std::vector<double> knots;  // strictly increasing, at least 3

  void validate() const;
  Eigen::Index columns() const { return static_cast<Eigen::Index>(knots.size()) - 1; }
};

/// Quantile levels for k knots: 3 -> (.10 .50 .90), 4 -> (.05 .35 .65 .95),
/// 5 -> (.05 .275 .50 .725 .95).
std::vector<double> knot_quantile_levels(int k);

/// Sample quantile with linear interpolation between order statistics
/// (position (n - 1) p, zero-based).
double quantile(std::vector<double> sorted_or_not, double level);

/// Knots at the standard quantile levels. Throws TooFewDistinctValues when x
/// has fewer than k distinct values or the quantiles coincide.
std::vector<double> default_knots(std::span<const double> x, int k);

/// n x (k - 1) design: column 0 is x; column j >= 1 is
/// [(x - t_j)+^3 - (x - t_{k-1})+^3 (t_k - t_j)/(t_k - t_{k-1})
///  + (x - t_k)+^3 (t_{k-1} - t_j)/(t_k - t_{k-1})] / (t_k - t_1)^2.
Eigen::MatrixXd rcs_basis(std::span<const double> x, const SplineBasis& basis);
Eigen::MatrixXd rcs_basis(std::span<const double> x, const std::vector<double>& knots);

}  // namespace mnri::spline

#include "mnri/spline.hpp"

#include "mnri/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mnri::spline {

void SplineBasis::validate() const {
  if (knots.size() < 3) fail(ErrorCode::InvalidArgument, "restricted cubic spline needs at least 3 knots");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!std::isfinite(knots[i])) fail(ErrorCode::InvalidArgument, "knots must be finite");
    if (i > 0 && !(knots[i] > knots[i - 1])) {
      fail(ErrorCode::InvalidArgument, "knots must be strictly increasing");
    }
  }
}

std::vector<double> knot_quantile_levels(int k) {
  switch (k) {
    case 3: return {0.10, 0.50, 0.90};
    case 4: return {0.05, 0.35, 0.65, 0.95};
    case 5: return {0.05, 0.275, 0.50, 0.725, 0.95};
    default: fail(ErrorCode::InvalidArgument, "default knots support k in {3, 4, 5}");
  }
}

double quantile(std::vector<double> v, double level) {
  if (v.empty()) fail(ErrorCode::InvalidArgument, "quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = (static_cast<double>(v.size()) - 1.0) * level;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

std::vector<double> default_knots(std::span<const double> x, int k) {
  const auto levels = knot_quantile_levels(k);
  const std::set<double> distinct(x.begin(), x.end());
  if (static_cast<int>(distinct.size()) < k) {
    fail(ErrorCode::TooFewDistinctValues, "need at least " + std::to_string(k) + " distinct values, found " +
                                              std::to_string(distinct.size()));
  }
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> knots;
  for (double level : levels) knots.push_back(quantile(sorted, level));
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i] > knots[i - 1])) {
      fail(ErrorCode::TooFewDistinctValues, "sample quantiles do not give distinct knots");
    }
  }
  return knots;
}

Eigen::MatrixXd rcs_basis(std::span<const double> x, const SplineBasis& basis) {
  basis.validate();
  const auto& t = basis.knots;
  const std::size_t k = t.size();
  const double t_last = t[k - 1];
  const double t_penult = t[k - 2];
  const double range2 = (t_last - t[0]) * (t_last - t[0]);
  auto cube_plus = [](double u) { return u > 0.0 ? u * u * u : 0.0; };

  Eigen::MatrixXd out(static_cast<Eigen::Index>(x.size()), basis.columns());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const auto row = static_cast<Eigen::Index>(i);
    out(row, 0) = xi;
    const double tail_penult = cube_plus(xi - t_penult);
    const double tail_last = cube_plus(xi - t_last);
    for (std::size_t j = 0; j + 2 < k; ++j) {
      const double term = cube_plus(xi - t[j]) -
                          tail_penult * (t_last - t[j]) / (t_last - t_penult) +
                          tail_last * (t_penult - t[j]) / (t_last - t_penult);
      out(row, static_cast<Eigen::Index>(j) + 1) = term / range2;
    }
  }
  return out;
}

Eigen::MatrixXd rcs_basis(std::span<const double> x, const std::vector<double>& knots) {
  return rcs_basis(x, SplineBasis{knots});
}

}  // namespace mnri::spline

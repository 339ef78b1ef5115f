#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {

namespace {

constexpr double kPi = 3.14159265358979323846;

double density(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

double simpson(const std::function<double(double)>& f, double a, double b, int intervals) {
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

double normal_cdf(double x) {
  if (x == 0.0) return 0.5;
  const double ax = std::min(std::abs(x), 12.0);
  const double half = simpson(density, 0.0, ax, 20000);
  return x > 0 ? 0.5 + half : 0.5 - half;
}

double chisq_cdf(double x, int q) {
  if (x <= 0.0) return 0.0;
  if (q % 2 == 0) {
    // 1 - exp(-x/2) sum_{j < q/2} (x/2)^j / j!
    double term = 1.0, sum = 1.0;
    for (int j = 1; j < q / 2; ++j) {
      term *= (x / 2.0) / j;
      sum += term;
    }
    return 1.0 - std::exp(-x / 2.0) * sum;
  }
  // Odd q: 2 Phi(sqrt x) - 1 - sqrt(2x/pi) e^{-x/2} sum_{j=1}^{(q-1)/2} x^{j-1} / (1*3*...*(2j-1))
  const double rx = std::sqrt(x);
  double out = 2.0 * normal_cdf(rx) - 1.0;
  double term = std::sqrt(2.0 * x / kPi) * std::exp(-x / 2.0);
  for (int j = 1; j <= (q - 1) / 2; ++j) {
    out -= term;
    term *= x / (2.0 * j + 1.0);
  }
  return out;
}

McEstimate mixture_tail_mc(const std::vector<double>& weights, double scale, double t, long draws,
                           std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(std::numeric_limits<double>::min(), 1.0);
  auto normal = [&]() {
    const double u1 = unif(gen), u2 = unif(gen);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  };
  long hits = 0;
  for (long d = 0; d < draws; ++d) {
    double s = 0.0;
    for (double w : weights) {
      const double z = normal();
      s += w * z * z;
    }
    if (scale * s > t) ++hits;
  }
  const double p = static_cast<double>(hits) / draws;
  return {p, std::sqrt(std::max(p * (1.0 - p), 1.0 / draws) / draws)};
}

double logit_loglik(const Eigen::VectorXd& y, const Eigen::MatrixXd& design, const Eigen::VectorXd& b) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double eta = design.row(i).dot(b);
    // log G(eta) = -log(1 + e^-eta), log(1 - G) = -log(1 + e^eta)
    ll += y(i) > 0.5 ? -std::log1p(std::exp(-eta)) : -std::log1p(std::exp(eta));
  }
  return ll;
}

Eigen::Vector2d logit_grid_search(const Eigen::VectorXd& y, const Eigen::MatrixXd& design) {
  Eigen::Vector2d best(0, 0);
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int i = -50; i <= 50; ++i) {
    for (int j = -50; j <= 50; ++j) {
      const Eigen::Vector2d b(0.1 * i, 0.1 * j);
      const double ll = logit_loglik(y, design, b);
      if (ll > best_ll) {
        best_ll = ll;
        best = b;
      }
    }
  }
  const Eigen::Vector2d centre = best;
  for (int i = -200; i <= 200; ++i) {
    for (int j = -200; j <= 200; ++j) {
      const Eigen::Vector2d b(centre(0) + 0.001 * i, centre(1) + 0.001 * j);
      const double ll = logit_loglik(y, design, b);
      if (ll > best_ll) {
        best_ll = ll;
        best = b;
      }
    }
  }
  return best;
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& at,
                            double h) {
  Eigen::VectorXd g(at.size());
  for (Eigen::Index j = 0; j < at.size(); ++j) {
    Eigen::VectorXd up = at, dn = at;
    up(j) += h;
    dn(j) -= h;
    g(j) = (f(up) - f(dn)) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& at,
                           double h) {
  const Eigen::Index k = at.size();
  Eigen::MatrixXd hess(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      auto shifted = [&](double si, double sj) {
        Eigen::VectorXd v = at;
        v(i) += si;
        v(j) += sj;
        return f(v);
      };
      hess(i, j) = (shifted(h, h) - shifted(h, -h) - shifted(-h, h) + shifted(-h, -h)) / (4.0 * h * h);
    }
  }
  return hess;
}

double half_scale_statistic(const std::vector<double>& y, const std::vector<double>& weight,
                            const std::vector<double>& delta, bool smooth) {
  const double n = static_cast<double>(y.size());
  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= n;
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double g;
    if (smooth) {
      g = normal_cdf(delta[i]);
    } else {
      g = delta[i] > 0 ? 1.0 : (delta[i] < 0 ? 0.0 : 0.5);
    }
    s += weight[i] * (g - 0.5);
  }
  return s / (n * ybar * (1.0 - ybar));
}

double quantile_type7(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (v.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (h - lo) * (v[lo + 1] - v[lo]);
}

Synthetic synthetic_null(long n, double pi0, double mu, int q, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> norm(0.0, 1.0);
  std::bernoulli_distribution bern(pi0);
  Synthetic s;
  s.y.resize(n);
  s.x.resize(n, 2);
  s.z.resize(n, q);
  for (long i = 0; i < n; ++i) {
    s.y(i) = bern(gen) ? 1.0 : 0.0;
    s.x(i, 0) = 1.0;
    s.x(i, 1) = mu * s.y(i) + norm(gen);
    for (int j = 0; j < q; ++j) s.z(i, j) = norm(gen);
  }
  return s;
}

}  // namespace oracle

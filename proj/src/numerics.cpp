#include "mnri/numerics.hpp"

#include "mnri/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>

namespace mnri::numerics {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

}  // namespace

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

SymMatrix::SymMatrix(Eigen::MatrixXd m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    fail(ErrorCode::InvalidArgument, "SymMatrix requires a non-empty square matrix");
  }
  if (!m.allFinite()) fail(ErrorCode::InvalidArgument, "SymMatrix entries must be finite");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale) {
    std::ostringstream os;
    os << "matrix is not symmetric (max |a_ij - a_ji| = " << asym << ")";
    fail(ErrorCode::InvalidArgument, os.str());
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(Index n) { return SymMatrix(Eigen::MatrixXd::Identity(n, n)); }

SymMatrix SymMatrix::diagonal(const Eigen::VectorXd& d) {
  return SymMatrix(Eigen::MatrixXd(d.asDiagonal()));
}

Eigen::MatrixXd cholesky_lower(const SymMatrix& a) {
  const Eigen::MatrixXd& m = a.matrix();
  const Index n = m.rows();
  const double max_diag = m.diagonal().maxCoeff();
  const double tol = 1e-12 * max_diag;
  if (!(max_diag > 0.0)) fail(ErrorCode::NotPositiveDefinite, "non-positive diagonal");

  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double d = m(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > tol)) {
      std::ostringstream os;
      os << "Cholesky pivot " << j << " = " << d << " (tolerance " << tol << ")";
      fail(ErrorCode::NotPositiveDefinite, os.str());
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Index i = j + 1; i < n; ++i) {
      l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
    }
  }
  return l;
}

Eigen::MatrixXd solve_spd_columns(const SymMatrix& a, const Eigen::MatrixXd& b) {
  if (b.rows() != a.dimension()) fail(ErrorCode::InvalidArgument, "solve_spd: dimension mismatch");
  const Eigen::MatrixXd l = cholesky_lower(a);
  const auto lv = l.triangularView<Eigen::Lower>();
  Eigen::MatrixXd y = lv.solve(b);
  return lv.transpose().solve(y);
}

Eigen::VectorXd solve_spd(const SymMatrix& a, const Eigen::VectorXd& b) {
  return solve_spd_columns(a, Eigen::MatrixXd(b)).col(0);
}

SymMatrix inverse_spd(const SymMatrix& a) {
  return SymMatrix(solve_spd_columns(a, Eigen::MatrixXd(Eigen::MatrixXd::Identity(a.dimension(), a.dimension()))));
}

SymEigen eig_sym(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.matrix());
  if (solver.info() != Eigen::Success) {
    fail(ErrorCode::NoConvergence, "symmetric eigensolver did not converge");
  }
  // Eigen returns ascending order.
  SymEigen out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

SymMatrix sqrt_psd(const SymMatrix& a) {
  const SymEigen e = eig_sym(a);
  const double scale = std::max(1.0, e.values.cwiseAbs().maxCoeff());
  if (e.values.minCoeff() < -1e-12 * scale) {
    fail(ErrorCode::NotPositiveDefinite, "sqrt_psd: negative eigenvalue");
  }
  const Eigen::VectorXd root = e.values.cwiseMax(0.0).cwiseSqrt();
  return SymMatrix(e.vectors * root.asDiagonal() * e.vectors.transpose());
}

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

namespace {

// Power series for P(a, x); used for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int i = 0; i < 10000; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a, x); used for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0.0)) fail(ErrorCode::InvalidArgument, "gamma_p requires a > 0");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_fraction(a, x);
}

double gamma_q(double a, double x) {
  if (!(a > 0.0)) fail(ErrorCode::InvalidArgument, "gamma_q requires a > 0");
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_fraction(a, x);
}

double chisq_cdf(double x, int dof) {
  if (dof < 1) fail(ErrorCode::InvalidArgument, "chisq_cdf requires dof >= 1");
  return gamma_p(0.5 * dof, 0.5 * x);
}

double chisq_sf(double x, int dof) {
  if (dof < 1) fail(ErrorCode::InvalidArgument, "chisq_sf requires dof >= 1");
  return gamma_q(0.5 * dof, 0.5 * x);
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

namespace {

// Gauss-Kronrod 15-point abscissae and weights; odd indices are the 7-point
// Gauss nodes.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gk15(const std::function<double(double)>& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    kronrod += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol, int max_intervals) {
  QuadratureResult out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  std::priority_queue<Segment> heap;
  Segment first = gk15(f, a, b);
  out.evaluations = 15;
  heap.push(first);
  double total = first.value;
  double err = first.error;
  while (err > abs_tol && static_cast<int>(heap.size()) < max_intervals) {
    Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      heap.push(worst);
      break;
    }
    Segment left = gk15(f, worst.a, mid);
    Segment right = gk15(f, mid, worst.b);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to drop accumulated update round-off.
  total = 0.0;
  err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.abs_error = err;
  out.converged = err <= abs_tol;
  return out;
}

// ---------------------------------------------------------------------------
// Weighted chi-square mixture
// ---------------------------------------------------------------------------

void MixtureSpec::validate() const {
  if (weights.empty()) fail(ErrorCode::InvalidArgument, "mixture weights must be non-empty");
  for (double w : weights) {
    if (!std::isfinite(w)) fail(ErrorCode::InvalidArgument, "mixture weights must be finite");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    fail(ErrorCode::InvalidArgument, "mixture scale must be positive");
  }
}

namespace {

// Wynn epsilon extrapolation of the limit of a sequence of partial sums.
double wynn_epsilon(const std::vector<double>& sums) {
  const std::size_t m = sums.size();
  if (m < 3) return sums.back();
  std::vector<double> prev(m + 1, 0.0);  // eps_{-1}
  std::vector<double> cur(sums.begin(), sums.end());  // eps_0
  double best = sums.back();
  for (std::size_t col = 1; col < m; ++col) {
    std::vector<double> next(cur.size() - 1);
    for (std::size_t k = 0; k + 1 < cur.size(); ++k) {
      const double diff = cur[k + 1] - cur[k];
      if (diff == 0.0) return cur[k + 1];
      next[k] = prev[k + 1] + 1.0 / diff;
    }
    prev = std::move(cur);
    cur = std::move(next);
    if (col % 2 == 0 && !cur.empty()) best = cur.back();
  }
  return best;
}

}  // namespace

double mixture_tail(double t, const MixtureSpec& spec) {
  spec.validate();
  if (!std::isfinite(t)) fail(ErrorCode::InvalidArgument, "mixture_tail: t must be finite");

  std::vector<double> lam;
  for (double w : spec.weights) {
    if (w != 0.0) lam.push_back(w * spec.scale);
  }
  if (lam.empty()) return t < 0.0 ? 1.0 : 0.0;

  double lmax = 0.0, pos_max = 0.0, neg_max = 0.0;
  int n_pos = 0, n_neg = 0;
  for (double l : lam) {
    lmax = std::max(lmax, std::abs(l));
    if (l > 0) {
      pos_max = std::max(pos_max, l);
      ++n_pos;
    } else {
      neg_max = std::max(neg_max, -l);
      ++n_neg;
    }
  }

  // Far tails: Q <= pos_max * chi2_{n_pos} and Q >= -neg_max * chi2_{n_neg}.
  constexpr double negligible = 1e-13;
  if (t > 0.0) {
    if (n_pos == 0) return 0.0;
    const double bound = chisq_sf(t / pos_max, n_pos);
    if (bound < negligible) return bound;
  } else if (t < 0.0) {
    if (n_neg == 0) return 1.0;
    const double bound = chisq_sf(-t / neg_max, n_neg);
    if (bound < negligible) return 1.0 - bound;
  }

  for (double& l : lam) l /= lmax;
  const double x = t / lmax;

  // Imhof: P(Q > x) = 1/2 + (1/pi) * int_0^inf sin(theta(u)) / (u rho(u)) du.
  auto integrand = [&lam, x](double u) {
    if (u == 0.0) {
      double s = 0.0;
      for (double l : lam) s += l;
      return 0.5 * (s - x);
    }
    double theta = -0.5 * x * u;
    double log_rho = 0.0;
    for (double l : lam) {
      const double lu = l * u;
      theta += 0.5 * std::atan(lu);
      log_rho += 0.25 * std::log1p(lu * lu);
    }
    return std::sin(theta) / (u * std::exp(log_rho));
  };

  constexpr double quad_tol = 1e-10;
  double integral = 0.0;

  if (x == 0.0) {
    auto head = integrate_adaptive(integrand, 0.0, 1.0, 0.5 * quad_tol);
    // u = s^-2 maps [1, inf) onto (0, 1]; the mapped integrand is bounded.
    auto mapped = [&integrand](double s) {
      if (s == 0.0) return 0.0;
      const double u = 1.0 / (s * s);
      return integrand(u) * 2.0 / (s * s * s);
    };
    auto tail = integrate_adaptive(mapped, 0.0, 1.0, 0.5 * quad_tol);
    if (!head.converged || !tail.converged) {
      fail(ErrorCode::IntegrationFailure, "mixture_tail: quadrature did not converge at t = 0");
    }
    integral = head.value + tail.value;
  } else {
    // Oscillatory tail: integrate half periods of sin(x u / 2) and extrapolate
    // the partial sums.
    const double half_period = 2.0 * std::numbers::pi / std::abs(x);
    const double head_end = half_period * std::max(1.0, std::ceil(1.0 / half_period));
    auto head = integrate_adaptive(integrand, 0.0, head_end, 0.1 * quad_tol, 4000);
    if (!head.converged) {
      fail(ErrorCode::IntegrationFailure, "mixture_tail: head quadrature did not converge");
    }
    std::vector<double> partial;
    partial.reserve(256);
    double running = head.value;
    double last_ext = std::numeric_limits<double>::quiet_NaN();
    int stable = 0;
    bool done = false;
    constexpr int max_cycles = 4000;
    constexpr std::size_t window = 24;
    double lo = head_end;
    for (int cycle = 0; cycle < max_cycles; ++cycle) {
      const double hi = lo + half_period;
      auto piece = integrate_adaptive(integrand, lo, hi, 0.01 * quad_tol);
      if (!piece.converged) {
        fail(ErrorCode::IntegrationFailure, "mixture_tail: cycle quadrature did not converge");
      }
      lo = hi;
      running += piece.value;
      partial.push_back(running);
      if (std::abs(piece.value) < 1e-3 * quad_tol) {
        integral = running;
        done = true;
        break;
      }
      if (partial.size() < 4) continue;
      const std::size_t start = partial.size() > window ? partial.size() - window : 0;
      const double ext = wynn_epsilon(std::vector<double>(partial.begin() + start, partial.end()));
      if (std::isfinite(last_ext) && std::abs(ext - last_ext) <= quad_tol) {
        if (++stable >= 2) {
          integral = ext;
          done = true;
          break;
        }
      } else {
        stable = 0;
      }
      last_ext = ext;
    }
    if (!done) fail(ErrorCode::IntegrationFailure, "mixture_tail: tail extrapolation did not converge");
  }

  const double p = 0.5 + integral / std::numbers::pi;
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace mnri::numerics

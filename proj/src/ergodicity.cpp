#include "filtstab/ergodicity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "filtstab/error.hpp"

namespace filtstab {
namespace {

constexpr double kPoissonTermTolerance = 1e-13;
constexpr std::size_t kPoissonTermCap = 100'000;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double safe_ratio(double value, double bound) {
  if (bound > 0.0) return value / bound;
  return value == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

// Removes the component along m so that sum_x row(x) psi(x) == 0.
void center_rows(Matrix& e, const Density& m, const StateSpace& space) {
  for (std::size_t u = 0; u < e.rows(); ++u) {
    auto row = e.row(u);
    double s = 0.0;
    for (std::size_t x = 0; x < row.size(); ++x) s += row[x] * space.psi[x];
    for (std::size_t x = 0; x < row.size(); ++x) row[x] -= s * m[x];
  }
}

void center(std::vector<double>& h, const Density& m, const StateSpace& space) {
  const double mean = integrate(h, m, space);
  for (double& v : h) v -= mean;
}

std::vector<double> apply_kernel(const TransitionKernel& kernel, const StateSpace& space, std::span<const double> h) {
  const std::size_t d = space.size();
  std::vector<double> out(d, 0.0);
  for (std::size_t x = 0; x < d; ++x) {
    const auto row = kernel.lambda.row(x);
    for (std::size_t y = 0; y < d; ++y) out[x] += row[y] * h[y] * space.psi[y];
  }
  return out;
}

}  // namespace

Matrix compose(const Matrix& a, const Matrix& b, const StateSpace& space) {
  const std::size_t d = space.size();
  if (a.cols() != d || b.rows() != d) throw InvalidInput("compose: dimension mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t u = 0; u < a.rows(); ++u)
    for (std::size_t z = 0; z < d; ++z) {
      const double w = a(u, z) * space.psi[z];
      if (w == 0.0) continue;
      for (std::size_t x = 0; x < b.cols(); ++x) out(u, x) += w * b(z, x);
    }
  return out;
}

Matrix n_step_density(const TransitionKernel& kernel, const StateSpace& space, std::size_t n) {
  if (n < 1) throw InvalidInput("n_step_density requires n >= 1");
  Matrix power = kernel.lambda;
  for (std::size_t k = 2; k <= n; ++k) power = compose(power, kernel.lambda, space);
  return power;
}

double ErgodicityReport::bound_at(std::size_t n) const {
  if (!applicable) return kNaN;
  return *C * std::pow(*r, static_cast<double>(n));
}

ErgodicityReport geometric_ergodicity_report(const FiniteModel& model, const Coefficients& coeffs,
                                             std::size_t n_max) {
  const std::size_t d = model.size();
  const Density& m = coeffs.m;
  ErgodicityReport report;
  report.n_max = n_max;
  report.gap = Matrix(d, n_max);
  report.degenerate = coeffs.degenerate;
  report.applicable = coeffs.C.has_value();
  report.C = coeffs.C;
  report.r = report.degenerate ? std::optional<double>(0.0) : coeffs.r;

  // lambda^(n) - m evolves as (lambda^(n-1) - m) o lambda since m is
  // invariant; centering each step keeps the rows exactly mean-free.
  Matrix excess = model.kernel.lambda;
  for (std::size_t u = 0; u < d; ++u)
    for (std::size_t x = 0; x < d; ++x) excess(u, x) -= m[x];
  center_rows(excess, m, model.space);

  report.worst_ratio = report.applicable ? 0.0 : kNaN;
  for (std::size_t n = 1; n <= n_max; ++n) {
    if (n > 1) {
      excess = compose(excess, model.kernel.lambda, model.space);
      center_rows(excess, m, model.space);
    }
    const double bound = report.bound_at(n);
    for (std::size_t u = 0; u < d; ++u) {
      double g = 0.0;
      for (std::size_t x = 0; x < d; ++x) g += std::abs(excess(u, x)) * model.space.psi[x];
      report.gap(u, n - 1) = g;
      report.max_gap = std::max(report.max_gap, g);
      if (report.applicable) report.worst_ratio = std::max(report.worst_ratio, safe_ratio(g, bound));
    }
  }
  return report;
}

std::vector<StationaryBackward> stationary_backward_sequence(const FiniteModel& model, const Density& m,
                                                             std::size_t n_max) {
  const std::size_t d = model.size();
  for (std::size_t i = 0; i < d; ++i) {
    if (!(m[i] > 0.0)) throw NumericalFailure("invariant density degenerate");
  }
  // w(x', x) = lambda(x', x) m(x') psi(x') / m(x), column-normalized.
  Matrix w(d, d);
  for (std::size_t x = 0; x < d; ++x) {
    double z = 0.0;
    for (std::size_t xp = 0; xp < d; ++xp) {
      w(xp, x) = model.kernel(xp, x) * m[xp] * model.space.psi[xp];
      z += w(xp, x);
    }
    if (!(z > 0.0)) throw NumericalFailure("invariant density degenerate");
    for (std::size_t xp = 0; xp < d; ++xp) w(xp, x) /= z;
  }

  std::vector<StationaryBackward> out;
  out.reserve(n_max);
  Matrix q(d, d);
  for (std::size_t u = 0; u < d; ++u)
    for (std::size_t x = 0; x < d; ++x) q(u, x) = w(u, x) / model.space.psi[u];
  // q(u, x) - q(u, 0), propagated with the zero-sum weights w(., x) - w(., 0).
  Matrix diff(d, d);
  for (std::size_t u = 0; u < d; ++u)
    for (std::size_t x = 0; x < d; ++x) diff(u, x) = q(u, x) - q(u, 0);

  for (std::size_t n = 1; n <= n_max; ++n) {
    if (n > 1) {
      Matrix next_q(d, d), next_diff(d, d);
      for (std::size_t u = 0; u < d; ++u) {
        for (std::size_t x = 0; x < d; ++x) {
          double v = 0.0, dv = 0.0;
          for (std::size_t xp = 0; xp < d; ++xp) {
            v += w(xp, x) * q(u, xp);
            dv += (w(xp, x) - w(xp, 0)) * diff(u, xp);
          }
          next_q(u, x) = v;
          next_diff(u, x) = x == 0 ? 0.0 : dv;
        }
      }
      q = std::move(next_q);
      diff = std::move(next_diff);
    }
    StationaryBackward sb;
    sb.n = n;
    sb.q = q;
    sb.Delta.resize(d);
    for (std::size_t u = 0; u < d; ++u) {
      const auto row = diff.row(u);
      const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
      sb.Delta[u] = *hi - *lo;
    }
    out.push_back(std::move(sb));
  }
  return out;
}

StationaryBackward stationary_backward(const FiniteModel& model, const Density& m, std::size_t n) {
  if (n < 1) throw InvalidInput("stationary_backward requires n >= 1");
  return stationary_backward_sequence(model, m, n).back();
}

BoundCheck delta_bound_check(std::span<const StationaryBackward> sequence, const Density& m,
                             const Coefficients& coeffs) {
  if (!coeffs.mixing()) return BoundCheck{false, kNaN};
  const double up = coeffs.lambda_upper;
  const double di = coeffs.lambda_diamond;
  const double r = coeffs.degenerate ? 0.0 : 1.0 - di / up;
  BoundCheck check{true, 0.0};
  for (const auto& sb : sequence) {
    const double decay = sb.n == 1 ? 1.0 : std::pow(r, static_cast<double>(sb.n - 1));
    for (std::size_t u = 0; u < sb.Delta.size(); ++u) {
      const double bound = m[u] * (up / di) * decay;
      check.worst_ratio = std::max(check.worst_ratio, safe_ratio(sb.Delta[u], bound));
    }
  }
  return check;
}

PoissonSolution solve_poisson(const FiniteModel& model, const Density& m, std::span<const double> f) {
  const std::size_t d = model.size();
  if (f.size() != d) throw InvalidInput("test function has the wrong dimension");
  PoissonSolution sol;
  sol.f_centered.assign(f.begin(), f.end());
  center(sol.f_centered, m, model.space);
  sol.g = sol.f_centered;
  auto max_norm = [](const std::vector<double>& v) {
    double worst = 0.0;
    for (double x : v) worst = std::max(worst, std::abs(x));
    return worst;
  };
  std::vector<double> term = sol.f_centered;
  while (max_norm(term) > kPoissonTermTolerance) {
    if (sol.terms == kPoissonTermCap) throw NumericalFailure("Poisson series did not converge");
    term = apply_kernel(model.kernel, model.space, term);
    center(term, m, model.space);
    for (std::size_t x = 0; x < d; ++x) sol.g[x] += term[x];
    ++sol.terms;
  }
  return sol;
}

double poisson_residual(const FiniteModel& model, const PoissonSolution& solution) {
  const auto kg = apply_kernel(model.kernel, model.space, solution.g);
  double worst = 0.0;
  for (std::size_t x = 0; x < kg.size(); ++x) {
    worst = std::max(worst, std::abs(solution.g[x] - solution.f_centered[x] - kg[x]));
  }
  return worst;
}

std::vector<double> lln_running_average(const FilterRun& run, std::span<const double> f, const StateSpace& space) {
  std::vector<double> out;
  out.reserve(run.horizon());
  double sum = 0.0;
  for (std::size_t k = 1; k <= run.horizon(); ++k) {
    sum += integrate(f, run.densities[k - 1], space);
    out.push_back(sum / static_cast<double>(k));
  }
  return out;
}

LlnAverage lln_average(const FilterRun& run, std::span<const double> f, const Density& m, const StateSpace& space) {
  if (run.horizon() == 0) throw InvalidInput("law-of-large-numbers average needs at least one step");
  if (f.size() != space.size()) throw InvalidInput("test function has the wrong dimension");
  LlnAverage out;
  out.average = lln_running_average(run, f, space).back();
  out.target = integrate(f, m, space);
  out.gap = out.average - out.target;
  return out;
}

}  // namespace filtstab

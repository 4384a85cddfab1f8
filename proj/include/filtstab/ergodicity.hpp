#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "filtstab/filter.hpp"
#include "filtstab/matrix.hpp"
#include "filtstab/model.hpp"

namespace filtstab {

/// (a o b)(u, x) = sum_z a(u, z) psi(z) b(z, x).
Matrix compose(const Matrix& a, const Matrix& b, const StateSpace& space);

/// n-step transition density lambda^(n), n >= 1.
Matrix n_step_density(const TransitionKernel& kernel, const StateSpace& space, std::size_t n);

/// L1 gaps g(u, n) = sum_x |lambda^(n)(u, x) - m(x)| psi(x) for n = 1..n_max,
/// compared against C r^n.
struct ErgodicityReport {
  std::size_t n_max = 0;
  Matrix gap;  // gap(u, n - 1)
  std::optional<double> C;
  std::optional<double> r;
  /// lambda_diamond > 0 and not degenerate: the C, r bound is available.
  bool applicable = false;
  /// lambda_diamond == lambda^*: C undefined, gaps must vanish for n >= 1.
  bool degenerate = false;
  /// max over (u, n) of gap / (C r^n); NaN when not applicable.
  double worst_ratio = 0.0;
  double max_gap = 0.0;

  double gap_at(std::size_t u, std::size_t n) const { return gap(u, n - 1); }
  /// C r^n, or NaN when not applicable.
  double bound_at(std::size_t n) const;
};

ErgodicityReport geometric_ergodicity_report(const FiniteModel& model, const Coefficients& coeffs,
                                             std::size_t n_max);

/// q_n(u, x): density in u of X_0 given X_n = x for the stationary chain,
/// with Delta_n(u) = max_x q_n(u, x) - min_x q_n(u, x).
struct StationaryBackward {
  std::size_t n = 0;
  Matrix q;
  std::vector<double> Delta;
};

/// q_1, ..., q_{n_max}. m must be strictly positive; throws
/// NumericalFailure("invariant density degenerate") otherwise.
std::vector<StationaryBackward> stationary_backward_sequence(const FiniteModel& model, const Density& m,
                                                             std::size_t n_max);

StationaryBackward stationary_backward(const FiniteModel& model, const Density& m, std::size_t n);

struct BoundCheck {
  bool applicable = false;
  double worst_ratio = 0.0;  // NaN when not applicable
};

/// max over (u, n) of Delta_n(u) / (m(u) (lambda^*/lambda_diamond) r^(n-1)).
BoundCheck delta_bound_check(std::span<const StationaryBackward> sequence, const Density& m,
                             const Coefficients& coeffs);

/// Solution g of g = f0 + K g with f0 = f - <f, m>.
struct PoissonSolution {
  std::vector<double> g;
  std::vector<double> f_centered;
  std::size_t terms = 0;
};

/// Sums the series f0 + K f0 + K^2 f0 + ... until a term is below 1e-13 in
/// max norm. Throws NumericalFailure if 10^5 terms do not suffice.
PoissonSolution solve_poisson(const FiniteModel& model, const Density& m, std::span<const double> f);

/// max_x |g(x) - f0(x) - sum_y g(y) lambda(x, y) psi(y)|.
double poisson_residual(const FiniteModel& model, const PoissonSolution& solution);

struct LlnAverage {
  double average = 0.0;  // (1/n) sum_{k=1}^n pi_{k-1}<f>
  double target = 0.0;   // <f, m>
  double gap = 0.0;      // average - target
};

LlnAverage lln_average(const FilterRun& run, std::span<const double> f, const Density& m,
                       const StateSpace& space);

/// Running averages (1/n) sum_{k=1}^n pi_{k-1}<f> for n = 1..N.
std::vector<double> lln_running_average(const FilterRun& run, std::span<const double> f, const StateSpace& space);

}  // namespace filtstab

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "filtstab/filter.hpp"
#include "filtstab/matrix.hpp"
#include "filtstab/model.hpp"

namespace filtstab {

/// rho(u, x): density in u (against psi) of X_0 given X_n = x and Y_1..Y_n.
/// Every column is a density.
struct BackwardDensity {
  Matrix rho;

  std::size_t size() const { return rho.rows(); }
  double operator()(std::size_t u, std::size_t x) const { return rho(u, x); }
};

/// Per-u extrema of rho over the conditioning state and their spread.
struct OscillationRecord {
  std::vector<double> delta;
  std::vector<double> rho_sup;
  std::vector<double> rho_inf;
};

/// The n = 0 backward density: X_0 = X_n, so rho_0(u, x) = 1{u = x} / psi(u).
BackwardDensity backward_origin(const StateSpace& space);

/// rho_1(u, x) = lambda(u, x) theta(u) / sum_v lambda(v, x) theta(v) psi(v).
/// theta must be strictly positive. Throws NumericalFailure("state
/// unreachable in one step") on a zero column.
BackwardDensity backward_init(const Density& theta0, const TransitionKernel& kernel, const StateSpace& space);

/// rho_n from rho_{n-1} and the filter density pi_{n-1} of the same prior.
/// Throws NumericalFailure("state has zero predicted mass") on a zero column.
BackwardDensity backward_step(const BackwardDensity& rho_prev, const Density& pi_prev,
                              const TransitionKernel& kernel, const StateSpace& space);

OscillationRecord oscillation(const BackwardDensity& rho);

/// 1 - (1/lambda^*) sum_x pi(x) min_r lambda(x, r) psi(x): the per-step
/// contraction factor of the oscillation.
double contraction_factor(const Density& pi_prev, const Coefficients& coeffs, const StateSpace& space);

/// Upper bounds on delta_n(u) for n = 1..N built from pi_0..pi_{N-1}.
struct OscillationBound {
  bool vacuous = false;  // lambda_diamond == 0: no finite bound
  std::vector<std::vector<double>> bound;  // bound[n - 1][u]
  std::vector<double> exponent_sum;        // exponent_sum[n - 1]
};

OscillationBound oscillation_bound(std::span<const Density> pi_history, const Coefficients& coeffs,
                                   const Density& theta0, const StateSpace& space);

/// nu / beta as a vector over states. beta must be strictly positive.
std::vector<double> density_ratio(const Density& nu, const Density& beta);

/// L = sum_x sum_u (nu/beta)(u) rho(u, x) psi(u) pi(x) psi(x), the likelihood
/// ratio of the observation record under nu against beta.
double likelihood_ratio(const BackwardDensity& rho, const Density& pi, std::span<const double> nu_over_beta,
                        const StateSpace& space);

/// Largest residual of the two identities linking the nu-filter run on the
/// beta record to the beta run, its backward density and L:
///   L (pi^{nu beta}(x) - pi^beta(x)) = pi^beta(x) (h(x) - L)
///   L pi^{nu beta}(x) = pi^beta(x) h(x),   h(x) = sum_u (nu/beta)(u) rho(u, x) psi(u)
/// evaluated at the final step. Throws InvalidInput if the runs consumed
/// different observations.
double check_likelihood_identities(const FilterRun& run_beta, const FilterRun& run_nu_on_same_obs,
                                   const BackwardDensity& rho, std::span<const double> nu_over_beta,
                                   const StateSpace& space);

/// Filter density and backward density evolved together from one prior, so
/// rho_n is always paired with the filter that generated it.
class BackwardContext {
 public:
  BackwardContext(const FiniteModel& model, Density theta0);

  /// Consumes Y_{n+1}.
  void step(Observation y);

  std::size_t n() const { return n_; }
  const Density& theta0() const { return history_.front(); }
  const BackwardDensity& rho() const { return rho_; }
  const Density& filter() const { return history_.back(); }
  /// pi_0..pi_n.
  const std::vector<Density>& filter_history() const { return history_; }

  /// delta_n(u), tracked through column differences of rho so that it keeps
  /// relative precision long after the columns agree to rounding.
  const std::vector<double>& delta() const { return delta_; }

  /// sum_{k=2}^n sum_x pi_{k-1}(x) min_r lambda(x, r) psi(x).
  double exponent_sum() const { return exponent_sum_; }

  double likelihood_ratio(std::span<const double> nu_over_beta) const;

 private:
  const FiniteModel* model_;
  std::vector<double> row_infima_;
  std::size_t n_ = 0;
  BackwardDensity rho_;
  Matrix column_diff_;  // rho(u, x) - rho(u, 0)
  std::vector<double> delta_;
  double exponent_sum_ = 0.0;
  std::vector<Density> history_;
};

/// P(X_0 = u | X_n = x_n, Y_1..Y_n) / psi(u) by path enumeration; a test
/// oracle independent of the recursion.
Density brute_force_backward(const FiniteModel& model, const Density& theta0,
                             std::span<const Observation> observations, std::size_t x_n);

/// E[(nu/beta)(X_0) | Y_1..Y_n] for the chain started from beta, by path
/// enumeration.
double brute_force_likelihood_ratio(const FiniteModel& model, const Density& nu, const Density& beta,
                                    std::span<const Observation> observations);

}  // namespace filtstab

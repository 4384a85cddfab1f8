#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "filtstab/matrix.hpp"

namespace filtstab {

/// Tolerance accepted on user-supplied normalizations (kernel rows,
/// likelihood rows, priors). Inputs within it are renormalized exactly.
inline constexpr double kInputSumTolerance = 1e-6;

/// Finite state space {0, ..., d-1} with atom weights psi of the reference
/// measure. Densities on it are taken with respect to psi.
struct StateSpace {
  std::vector<double> psi;

  std::size_t size() const { return psi.size(); }

  static StateSpace counting(std::size_t d) { return StateSpace{std::vector<double>(d, 1.0)}; }
};

/// One-step transition density: lambda(i, j) * psi[j] is the probability of
/// moving from i to j.
struct TransitionKernel {
  Matrix lambda;

  std::size_t size() const { return lambda.rows(); }
  double operator()(std::size_t from, std::size_t to) const { return lambda(from, to); }
};

/// An observation value. Finite alphabets use the integral symbol index
/// stored as a double; gaussian channels use the real value directly.
using Observation = double;

/// Conditional law of Y_n given X_n, accessed only through its likelihood
/// vector (gamma(x_1, y), ..., gamma(x_d, y)).
class ObservationModel {
 public:
  enum class Kind { finite, gaussian };

  ObservationModel() = default;

  /// gamma is d x p; row i sums to one against theta (defaults to ones).
  static ObservationModel finite(Matrix gamma, std::vector<double> theta = {});
  static ObservationModel gaussian(std::vector<double> means, double sigma);

  Kind kind() const { return kind_; }
  std::size_t states() const;
  std::size_t alphabet_size() const { return gamma_.cols(); }

  const Matrix& gamma() const { return gamma_; }
  const std::vector<double>& theta() const { return theta_; }
  const std::vector<double>& means() const { return means_; }
  double sigma() const { return sigma_; }

  /// Writes gamma(x, y) for every state x into out (size d).
  void likelihood(Observation y, std::span<double> out) const;

  /// Finite alphabets: symbol index of y, throws InvalidInput when y is not
  /// an integral symbol in range.
  std::size_t symbol(Observation y) const;

 private:
  Kind kind_ = Kind::finite;
  Matrix gamma_;
  std::vector<double> theta_;
  std::vector<double> means_;
  double sigma_ = 1.0;
};

/// Nonnegative density against psi: sum_i values[i] * psi[i] == 1.
struct Density {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

struct FiniteModel {
  StateSpace space;
  TransitionKernel kernel;
  ObservationModel observation;

  std::size_t size() const { return space.size(); }
};

/// Raw description of a model plus the two priors, as read from a config.
struct ModelConfig {
  std::size_t states = 0;
  std::vector<double> psi;  // empty means counting measure
  std::vector<std::vector<double>> transition;
  ObservationModel observation;
  std::vector<double> nu;
  std::vector<double> beta;
};

/// A validated model together with the true prior nu and the filter's
/// working prior beta.
struct ModelSetup {
  FiniteModel model;
  Density nu;
  Density beta;
};

/// Validates a config. Throws InvalidInput on dimension mismatches, negative
/// or non-finite entries, rows off by more than kInputSumTolerance
/// ("invalid kernel"), or a beta with a zero atom.
ModelSetup build_model(const ModelConfig& config);

/// Validates and assembles a model from parts (same checks as build_model).
FiniteModel make_model(StateSpace space, Matrix lambda, ObservationModel observation);

/// Validates values as a density against space, renormalizing when the total
/// mass is within kInputSumTolerance of one.
Density make_density(std::vector<double> values, const StateSpace& space);

Density uniform_density(const StateSpace& space);

/// Point mass at state i, as a density against psi.
Density point_mass(std::size_t i, const StateSpace& space);

/// Integral of f against the density: sum_i f[i] * p[i] * psi[i].
double integrate(std::span<const double> f, const Density& p, const StateSpace& space);

/// Total mass sum_i p[i] * psi[i].
double total_mass(const Density& p, const StateSpace& space);

/// Invariant density m with m(y) = sum_x lambda(x, y) m(x) psi(x), found by
/// power iteration on the adjoint action from the uniform density. Falls
/// back to lazy (averaged) iteration when plain iteration oscillates and
/// throws NumericalFailure("no unique invariant density found") if neither
/// converges within the iteration cap.
Density invariant_density(const TransitionKernel& kernel, const StateSpace& space);

/// One adjoint step: out(y) = sum_x lambda(x, y) p(x) psi(x).
Density adjoint_step(const TransitionKernel& kernel, const StateSpace& space, const Density& p);

struct Coefficients {
  double lambda_lower = 0.0;    // min_{i,j} lambda(i, j)
  double lambda_upper = 0.0;    // max_{i,j} lambda(i, j)
  double lambda_diamond = 0.0;  // m-average of row minima
  double rate = 0.0;            // lambda_diamond / lambda_upper
  std::vector<double> row_infima;
  /// Geometric ergodicity constants, set only when 0 < diamond < upper.
  std::optional<double> C;
  std::optional<double> r;
  /// diamond == upper: kernel constant in its target, C undefined.
  bool degenerate = false;
  /// The invariant density these coefficients were computed from.
  Density m;

  bool mixing() const { return lambda_diamond > 0.0; }
};

Coefficients mixing_coefficients(const FiniteModel& model, const Density& m);

/// Smallest r <= r_max such that every entry of the r-step density is
/// strictly positive. r_max == 0 selects the default 2 d^2.
std::optional<std::size_t> primitivity_check(const TransitionKernel& kernel, std::size_t r_max = 0);

}  // namespace filtstab

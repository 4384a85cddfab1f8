#include "filtstab/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "filtstab/error.hpp"

namespace filtstab {
namespace {

constexpr std::size_t kInvariantIterationCap = 1'000'000;
constexpr std::size_t kPlainIterations = 1'000;
constexpr double kInvariantStepTolerance = 1e-13;
constexpr std::size_t kPolishIterations = 10'000;
// Sums within this of one are left unscaled.
constexpr double kRoundoff = 1e-15;
constexpr double kInvariantResidualTolerance = 1e-10;

void require_finite_nonnegative(std::span<const double> values, const std::string& what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] < 0.0) {
      throw InvalidInput(what + ": entry " + std::to_string(i) + " is negative or not finite");
    }
  }
}

void validate_space(const StateSpace& space) {
  if (space.size() == 0) throw InvalidInput("state space must have at least one state");
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (!std::isfinite(space.psi[i]) || space.psi[i] <= 0.0) {
      throw InvalidInput("psi[" + std::to_string(i) + "] must be positive");
    }
  }
}

// Rescales each row of m so that it sums to one against weights, after
// checking it is already within kInputSumTolerance.
void normalize_rows(Matrix& m, std::span<const double> weights, const std::string& what) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    require_finite_nonnegative(row, what + " row " + std::to_string(i));
    double sum = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) sum += row[j] * weights[j];
    if (std::abs(sum - 1.0) > kInputSumTolerance) {
      throw InvalidInput(what + ": row " + std::to_string(i) + " sums to " + std::to_string(sum) +
                         " against its reference weights");
    }
    if (std::abs(sum - 1.0) > kRoundoff) {
      for (double& v : row) v /= sum;
    }
  }
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

void renormalize(Density& p, const StateSpace& space) {
  const double mass = total_mass(p, space);
  for (double& v : p.values) v /= mass;
}

}  // namespace

ObservationModel ObservationModel::finite(Matrix gamma, std::vector<double> theta) {
  if (gamma.rows() == 0 || gamma.cols() == 0) {
    throw InvalidInput("finite observation model needs a non-empty gamma matrix");
  }
  if (theta.empty()) theta.assign(gamma.cols(), 1.0);
  if (theta.size() != gamma.cols()) {
    throw InvalidInput("theta has " + std::to_string(theta.size()) + " entries, gamma has " +
                       std::to_string(gamma.cols()) + " columns");
  }
  for (std::size_t k = 0; k < theta.size(); ++k) {
    if (!std::isfinite(theta[k]) || theta[k] <= 0.0) {
      throw InvalidInput("theta[" + std::to_string(k) + "] must be positive");
    }
  }
  normalize_rows(gamma, theta, "invalid observation model");
  ObservationModel out;
  out.kind_ = Kind::finite;
  out.gamma_ = std::move(gamma);
  out.theta_ = std::move(theta);
  return out;
}

ObservationModel ObservationModel::gaussian(std::vector<double> means, double sigma) {
  if (means.empty()) throw InvalidInput("gaussian observation model needs one mean per state");
  for (double mu : means) {
    if (!std::isfinite(mu)) throw InvalidInput("gaussian means must be finite");
  }
  if (!std::isfinite(sigma) || sigma <= 0.0) throw InvalidInput("gaussian sigma must be positive");
  ObservationModel out;
  out.kind_ = Kind::gaussian;
  out.means_ = std::move(means);
  out.sigma_ = sigma;
  return out;
}

std::size_t ObservationModel::states() const {
  return kind_ == Kind::finite ? gamma_.rows() : means_.size();
}

std::size_t ObservationModel::symbol(Observation y) const {
  if (!(y >= 0.0) || y != std::floor(y) || y >= static_cast<double>(gamma_.cols())) {
    throw InvalidInput("observation symbol " + std::to_string(y) + " outside alphabet of size " +
                       std::to_string(gamma_.cols()));
  }
  return static_cast<std::size_t>(y);
}

void ObservationModel::likelihood(Observation y, std::span<double> out) const {
  if (kind_ == Kind::finite) {
    const std::size_t k = symbol(y);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = gamma_(i, k);
    return;
  }
  const double norm = 1.0 / (sigma_ * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double z = (y - means_[i]) / sigma_;
    out[i] = norm * std::exp(-0.5 * z * z);
  }
}

FiniteModel make_model(StateSpace space, Matrix lambda, ObservationModel observation) {
  validate_space(space);
  const std::size_t d = space.size();
  if (lambda.rows() != d || lambda.cols() != d) {
    throw InvalidInput("transition matrix must be " + std::to_string(d) + "x" + std::to_string(d));
  }
  normalize_rows(lambda, space.psi, "invalid kernel");
  if (observation.states() != d) {
    throw InvalidInput("observation model covers " + std::to_string(observation.states()) +
                       " states, expected " + std::to_string(d));
  }
  return FiniteModel{std::move(space), TransitionKernel{std::move(lambda)}, std::move(observation)};
}

Density make_density(std::vector<double> values, const StateSpace& space) {
  if (values.size() != space.size()) {
    throw InvalidInput("density has " + std::to_string(values.size()) + " entries, expected " +
                       std::to_string(space.size()));
  }
  require_finite_nonnegative(values, "density");
  Density p{std::move(values)};
  const double mass = total_mass(p, space);
  if (std::abs(mass - 1.0) > kInputSumTolerance) {
    throw InvalidInput("density integrates to " + std::to_string(mass) + " against psi");
  }
  if (std::abs(mass - 1.0) > kRoundoff) renormalize(p, space);
  return p;
}

Density uniform_density(const StateSpace& space) {
  double total = 0.0;
  for (double w : space.psi) total += w;
  return Density{std::vector<double>(space.size(), 1.0 / total)};
}

Density point_mass(std::size_t i, const StateSpace& space) {
  Density p{std::vector<double>(space.size(), 0.0)};
  p.values.at(i) = 1.0 / space.psi[i];
  return p;
}

double integrate(std::span<const double> f, const Density& p, const StateSpace& space) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += f[i] * p[i] * space.psi[i];
  return sum;
}

double total_mass(const Density& p, const StateSpace& space) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += p[i] * space.psi[i];
  return sum;
}

ModelSetup build_model(const ModelConfig& config) {
  const std::size_t d = config.states;
  if (d == 0) throw InvalidInput("states must be a positive integer");
  StateSpace space = config.psi.empty() ? StateSpace::counting(d) : StateSpace{config.psi};
  if (space.size() != d) {
    throw InvalidInput("psi has " + std::to_string(space.size()) + " entries, expected " +
                       std::to_string(d));
  }
  if (config.transition.size() != d) {
    throw InvalidInput("transition has " + std::to_string(config.transition.size()) +
                       " rows, expected " + std::to_string(d));
  }
  FiniteModel model = make_model(std::move(space), Matrix::from_rows(config.transition), config.observation);
  Density nu = make_density(config.nu, model.space);
  Density beta = make_density(config.beta, model.space);
  for (std::size_t i = 0; i < d; ++i) {
    if (beta[i] <= 0.0) {
      throw InvalidInput("beta not bounded below: beta[" + std::to_string(i) + "] is zero");
    }
  }
  return ModelSetup{std::move(model), std::move(nu), std::move(beta)};
}

Density adjoint_step(const TransitionKernel& kernel, const StateSpace& space, const Density& p) {
  const std::size_t d = space.size();
  Density out{std::vector<double>(d, 0.0)};
  for (std::size_t x = 0; x < d; ++x) {
    const double weight = p[x] * space.psi[x];
    if (weight == 0.0) continue;
    const auto row = kernel.lambda.row(x);
    for (std::size_t y = 0; y < d; ++y) out.values[y] += row[y] * weight;
  }
  return out;
}

Density invariant_density(const TransitionKernel& kernel, const StateSpace& space) {
  Density m = uniform_density(space);
  bool converged = false;
  for (std::size_t it = 0; it < kInvariantIterationCap; ++it) {
    Density next = adjoint_step(kernel, space, m);
    if (it >= kPlainIterations) {
      // Lazy chain (I + K) / 2: same fixed points, no periodic oscillation.
      for (std::size_t i = 0; i < next.size(); ++i) next.values[i] = 0.5 * (next.values[i] + m[i]);
    }
    renormalize(next, space);
    const double step = max_abs_diff(next.values, m.values);
    m = std::move(next);
    if (step < kInvariantStepTolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NumericalFailure("no unique invariant density found");
  // The step test leaves an error of about step / (1 - rho); keep iterating
  // while the steps still shrink.
  double last = kInvariantStepTolerance;
  for (std::size_t it = 0; it < kPolishIterations; ++it) {
    Density next = adjoint_step(kernel, space, m);
    for (std::size_t i = 0; i < next.size(); ++i) next.values[i] = 0.5 * (next.values[i] + m[i]);
    renormalize(next, space);
    const double step = max_abs_diff(next.values, m.values);
    if (step >= last) break;
    m = std::move(next);
    last = step;
    if (step == 0.0) break;
  }
  const Density image = adjoint_step(kernel, space, m);
  if (max_abs_diff(image.values, m.values) > kInvariantResidualTolerance) {
    throw NumericalFailure("no unique invariant density found");
  }
  return m;
}

Coefficients mixing_coefficients(const FiniteModel& model, const Density& m) {
  const std::size_t d = model.size();
  const Matrix& lambda = model.kernel.lambda;
  Coefficients c;
  c.m = m;
  c.row_infima.resize(d);
  c.lambda_lower = lambda(0, 0);
  c.lambda_upper = lambda(0, 0);
  for (std::size_t i = 0; i < d; ++i) {
    const auto row = lambda.row(i);
    const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
    c.row_infima[i] = *lo;
    c.lambda_lower = std::min(c.lambda_lower, *lo);
    c.lambda_upper = std::max(c.lambda_upper, *hi);
  }
  c.lambda_diamond = integrate(c.row_infima, m, model.space);
  c.rate = c.lambda_upper > 0.0 ? c.lambda_diamond / c.lambda_upper : 0.0;
  c.degenerate = c.lambda_diamond >= c.lambda_upper * (1.0 - 1e-12);
  if (c.lambda_diamond > 0.0 && !c.degenerate) {
    const double up = c.lambda_upper;
    const double di = c.lambda_diamond;
    c.C = up * up / (di * (up - di));
    c.r = 1.0 - di / up;
  }
  return c;
}

std::optional<std::size_t> primitivity_check(const TransitionKernel& kernel, std::size_t r_max) {
  const std::size_t d = kernel.size();
  if (r_max == 0) r_max = 2 * d * d;
  // Positivity pattern of the r-step density; psi > 0 makes it exact.
  std::vector<char> one(d * d), power(d * d), next(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) one[i * d + j] = kernel(i, j) > 0.0;
  power = one;
  for (std::size_t r = 1; r <= r_max; ++r) {
    if (std::all_of(power.begin(), power.end(), [](char c) { return c != 0; })) return r;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        char reach = 0;
        for (std::size_t k = 0; k < d && !reach; ++k) reach = power[i * d + k] && one[k * d + j];
        next[i * d + j] = reach;
      }
    }
    power.swap(next);
  }
  return std::nullopt;
}

}  // namespace filtstab

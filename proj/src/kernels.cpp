#include "embodied/kernels.hpp"

#include <cmath>
#include <sstream>

#include "embodied/error.hpp"

namespace embodied {

namespace {

void validate_rows(const Matrix& m, double row_tol, bool allow_zero_rows, const char* what) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw ValidationError(std::string(what) + ": empty kernel");
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double p = m(r, c);
      if (!(p >= 0.0 && p <= 1.0 + row_tol)) {
        std::ostringstream msg;
        msg << what << ": entry (" << r << ", " << c << ") = " << p << " outside [0, 1]";
        throw ValidationError(msg.str());
      }
      sum += p;
    }
    if (allow_zero_rows && sum == 0.0) continue;
    if (std::abs(sum - 1.0) > row_tol) {
      std::ostringstream msg;
      msg.precision(17);
      msg << what << ": row " << r << " sums to " << sum;
      throw ValidationError(msg.str());
    }
  }
}

}  // namespace

StateSpace StateSpace::make(std::string name, std::size_t cardinality) {
  if (cardinality == 0) throw ConfigError("state space '" + name + "' must be non-empty");
  return StateSpace{std::move(name), cardinality};
}

StochasticKernel::StochasticKernel(Matrix probs, double row_tol) : probs_(std::move(probs)) {
  validate_rows(probs_, row_tol, false, "stochastic kernel");
}

StochasticKernel StochasticKernel::uniform(std::size_t domain, std::size_t codomain) {
  if (domain == 0 || codomain == 0) throw ConfigError("uniform kernel: empty dimension");
  Matrix m = Matrix::Constant(static_cast<Eigen::Index>(domain),
                              static_cast<Eigen::Index>(codomain),
                              1.0 / static_cast<double>(codomain));
  return StochasticKernel(std::move(m));
}

StochasticKernel StochasticKernel::deterministic(std::span<const std::size_t> targets,
                                                 std::size_t codomain) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(targets.size()),
                          static_cast<Eigen::Index>(codomain));
  for (std::size_t r = 0; r < targets.size(); ++r) {
    if (targets[r] >= codomain) throw ConfigError("deterministic kernel: target out of range");
    m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(targets[r])) = 1.0;
  }
  return StochasticKernel(std::move(m));
}

EmpiricalKernel::EmpiricalKernel(Matrix probs, double row_tol) : probs_(std::move(probs)) {
  validate_rows(probs_, row_tol, true, "empirical kernel");
}

bool EmpiricalKernel::row_is_empty(std::size_t r) const {
  return probs_.row(static_cast<Eigen::Index>(r)).sum() == 0.0;
}

SmlSystem::SmlSystem(StateSpace world, StateSpace sensor, StateSpace actuator,
                     StochasticKernel beta, StochasticKernel alpha, std::vector<double> init_world,
                     double row_tol)
    : world_(std::move(world)),
      sensor_(std::move(sensor)),
      actuator_(std::move(actuator)),
      beta_(std::move(beta)),
      alpha_(std::move(alpha)),
      init_world_(std::move(init_world)) {
  const std::size_t nw = world_.cardinality;
  if (nw == 0 || sensor_.cardinality == 0 || actuator_.cardinality == 0) {
    throw ConfigError("SmlSystem: state spaces must be non-empty");
  }
  if (beta_.domain() != nw || beta_.codomain() != sensor_.cardinality) {
    throw ConfigError("SmlSystem: beta must be |W| x |S|");
  }
  if (alpha_.domain() != nw * actuator_.cardinality || alpha_.codomain() != nw) {
    throw ConfigError("SmlSystem: alpha must be (|W||A|) x |W|");
  }
  if (init_world_.size() != nw) throw ConfigError("SmlSystem: init_world must have |W| entries");
  double sum = 0.0;
  for (double p : init_world_) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("SmlSystem: init_world entry outside [0, 1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > row_tol) throw ValidationError("SmlSystem: init_world does not sum to 1");
}

void SmlSystem::check_policy(const StochasticKernel& pi) const {
  if (pi.domain() != sensor_card() || pi.codomain() != actuator_card()) {
    throw ConfigError("policy must be |S| x |A|");
  }
}

std::vector<std::size_t> Trajectory::worlds() const {
  std::vector<std::size_t> out;
  out.reserve(steps.size() + 1);
  for (const auto& st : steps) out.push_back(st.w);
  out.push_back(final_world);
  return out;
}

StochasticKernel one_step_mechanism(const SmlSystem& sys, const StochasticKernel& pi) {
  sys.check_policy(pi);
  const std::size_t nw = sys.world_card(), ns = sys.sensor_card(), na = sys.actuator_card();
  Matrix joint = Matrix::Zero(static_cast<Eigen::Index>(nw),
                              static_cast<Eigen::Index>(ns * na * nw));
  for (std::size_t w = 0; w < nw; ++w) {
    for (std::size_t s = 0; s < ns; ++s) {
      const double b = sys.beta()(w, s);
      if (b == 0.0) continue;
      for (std::size_t a = 0; a < na; ++a) {
        const double ba = b * pi(s, a);
        if (ba == 0.0) continue;
        const auto alpha_row = sys.alpha().row(sys.alpha_row(w, a));
        const std::size_t base = (s * na + a) * nw;
        for (std::size_t w2 = 0; w2 < nw; ++w2) {
          joint(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(base + w2)) =
              ba * alpha_row[w2];
        }
      }
    }
  }
  return StochasticKernel(std::move(joint), 1e-10);
}

StochasticKernel behavior_map(const SmlSystem& sys, const StochasticKernel& pi) {
  sys.check_policy(pi);
  const auto nw = static_cast<Eigen::Index>(sys.world_card());
  const auto na = static_cast<Eigen::Index>(sys.actuator_card());
  // Action marginal per world state: q(w, a) = sum_s beta(w, s) pi(s, a).
  const Matrix q = sys.beta().matrix() * pi.matrix();
  const Matrix& alpha = sys.alpha().matrix();
  Matrix out = Matrix::Zero(nw, nw);
#pragma omp parallel for schedule(static)
  for (Eigen::Index w = 0; w < nw; ++w) {
    for (Eigen::Index a = 0; a < na; ++a) {
      const double qa = q(w, a);
      if (qa == 0.0) continue;
      out.row(w) += qa * alpha.row(w * na + a);
    }
  }
  return StochasticKernel(std::move(out), 1e-10);
}

StochasticKernel behavior_map_serial(const SmlSystem& sys, const StochasticKernel& pi) {
  sys.check_policy(pi);
  const std::size_t nw = sys.world_card(), ns = sys.sensor_card(), na = sys.actuator_card();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(nw), static_cast<Eigen::Index>(nw));
  for (std::size_t w = 0; w < nw; ++w) {
    for (std::size_t w2 = 0; w2 < nw; ++w2) {
      double acc = 0.0;
      for (std::size_t s = 0; s < ns; ++s) {
        for (std::size_t a = 0; a < na; ++a) {
          acc += sys.beta()(w, s) * pi(s, a) * sys.alpha()(sys.alpha_row(w, a), w2);
        }
      }
      out(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(w2)) = acc;
    }
  }
  return StochasticKernel(std::move(out), 1e-10);
}

Trajectory simulate_from(const SmlSystem& sys, const ActionSampler& choose, std::size_t w0,
                         std::size_t steps, std::uint64_t seed) {
  if (w0 >= sys.world_card()) throw ConfigError("simulate: initial world out of range");
  Rng rng = Rng::stream(seed, {1});
  Trajectory traj;
  traj.seed = seed;
  traj.world_card = sys.world_card();
  traj.sensor_card = sys.sensor_card();
  traj.actuator_card = sys.actuator_card();
  traj.steps.reserve(steps);
  std::size_t w = w0;
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t s = rng.categorical(sys.beta().row(w));
    const std::size_t a = choose(s, rng);
    if (a >= sys.actuator_card()) throw ConfigError("simulate: sampler returned invalid action");
    traj.steps.push_back({w, s, a});
    w = rng.categorical(sys.alpha().row(sys.alpha_row(w, a)));
  }
  traj.final_world = w;
  return traj;
}

Trajectory simulate_with(const SmlSystem& sys, const ActionSampler& choose, std::size_t steps,
                         std::uint64_t seed) {
  if (steps == 0) throw ConfigError("simulate: step count must be >= 1");
  Rng init = Rng::stream(seed, {0});
  const std::size_t w0 = init.categorical(sys.init_world());
  return simulate_from(sys, choose, w0, steps, seed);
}

Trajectory simulate(const SmlSystem& sys, const StochasticKernel& pi, std::size_t steps,
                    std::uint64_t seed) {
  sys.check_policy(pi);
  return simulate_with(
      sys, [&pi](std::size_t s, Rng& rng) { return rng.categorical(pi.row(s)); }, steps, seed);
}

StochasticKernel mix(const StochasticKernel& a, const StochasticKernel& b, double lambda) {
  if (a.domain() != b.domain() || a.codomain() != b.codomain()) {
    throw ConfigError("mix: kernel shapes differ");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("mix: lambda outside [0, 1]");
  return StochasticKernel(lambda * a.matrix() + (1.0 - lambda) * b.matrix());
}

}  // namespace embodied

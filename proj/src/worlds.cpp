#include "embodied/worlds.hpp"

#include <cmath>

#include "embodied/behavior_dim.hpp"
#include "embodied/error.hpp"

namespace embodied {

std::vector<std::size_t> CyclicWalkerConfig::resolved_gait() const {
  if (!gait.empty()) return gait;
  std::vector<std::size_t> g(phases);
  for (std::size_t p = 0; p < phases; ++p) g[p] = p % actions;
  return g;
}

void CyclicWalkerConfig::check() const {
  if (phases < 2) throw ConfigError("walker: phases must be >= 2");
  if (actions < 2) throw ConfigError("walker: actions must be >= 2");
  if (track_length < 2) throw ConfigError("walker: track_length must be >= 2");
  if (!(slip_prob >= 0.0 && slip_prob < 1.0)) throw ConfigError("walker: slip_prob must lie in [0, 1)");
  if (!gait.empty()) {
    if (gait.size() != phases) throw ConfigError("walker: gait needs one action per phase");
    for (std::size_t a : gait) {
      if (a >= actions) throw ConfigError("walker: gait action out of range");
    }
  }
}

json to_json(const CyclicWalkerConfig& cfg) {
  return json{{"phases", cfg.phases},       {"actions", cfg.actions},
              {"track_length", cfg.track_length}, {"gait", cfg.resolved_gait()},
              {"slip_prob", cfg.slip_prob}, {"seed", cfg.seed}};
}

CyclicWalkerConfig walker_config_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("walker config: expected an object");
  CyclicWalkerConfig cfg;
  try {
    if (j.contains("phases")) cfg.phases = j.at("phases").get<std::size_t>();
    if (j.contains("actions")) cfg.actions = j.at("actions").get<std::size_t>();
    if (j.contains("track_length")) cfg.track_length = j.at("track_length").get<std::size_t>();
    if (j.contains("gait")) cfg.gait = j.at("gait").get<std::vector<std::size_t>>();
    if (j.contains("slip_prob")) cfg.slip_prob = j.at("slip_prob").get<double>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("walker config: ") + e.what());
  }
  return cfg;
}

WalkerSystem make_cyclic_walker(const CyclicWalkerConfig& cfg) {
  cfg.check();
  const std::size_t P = cfg.phases, A = cfg.actions, L = cfg.track_length, W = P * L;
  const auto gait = cfg.resolved_gait();

  Matrix alpha_s = Matrix::Zero(static_cast<Eigen::Index>(P * A), static_cast<Eigen::Index>(P));
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t a = 0; a < A; ++a) {
      const auto r = static_cast<Eigen::Index>(p * A + a);
      if (a == gait[p]) {
        alpha_s(r, static_cast<Eigen::Index>((p + 1) % P)) += 1.0 - cfg.slip_prob;
        alpha_s(r, static_cast<Eigen::Index>(p)) += cfg.slip_prob;
      } else {
        alpha_s(r, static_cast<Eigen::Index>(p)) = 1.0;
      }
    }
  }

  Matrix beta = Matrix::Zero(static_cast<Eigen::Index>(W), static_cast<Eigen::Index>(P));
  Matrix alpha = Matrix::Zero(static_cast<Eigen::Index>(W * A), static_cast<Eigen::Index>(W));
  for (std::size_t x = 0; x < L; ++x) {
    for (std::size_t p = 0; p < P; ++p) {
      const std::size_t w = x * P + p;
      beta(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(p)) = 1.0;
      for (std::size_t a = 0; a < A; ++a) {
        for (std::size_t p2 = 0; p2 < P; ++p2) {
          const double q = alpha_s(static_cast<Eigen::Index>(p * A + a), static_cast<Eigen::Index>(p2));
          if (q == 0.0) continue;
          // The position moves only when the cycle wraps around to phase 0.
          const std::size_t x2 = (p == P - 1 && p2 == 0) ? (x + 1) % L : x;
          alpha(static_cast<Eigen::Index>(w * A + a), static_cast<Eigen::Index>(x2 * P + p2)) += q;
        }
      }
    }
  }

  std::vector<double> init(W, 0.0);
  init[0] = 1.0;
  SmlSystem sml(StateSpace::make("world", W), StateSpace::make("sensor", P), StateSpace::make("actuator", A),
                StochasticKernel(std::move(beta)), StochasticKernel(std::move(alpha)), std::move(init));
  return WalkerSystem{cfg, std::move(sml), StochasticKernel(std::move(alpha_s)),
                      StochasticKernel::deterministic(gait, A), 1};
}

long long walker_performance(const Trajectory& traj, const WalkerSystem& walker) {
  if (traj.world_card != walker.sml.world_card()) {
    throw ConfigError("walker_performance: trajectory does not come from this walker");
  }
  const std::size_t L = walker.config.track_length;
  const auto worlds = traj.worlds();
  long long distance = 0;
  for (std::size_t t = 0; t + 1 < worlds.size(); ++t) {
    const std::size_t x = walker.position_of(worlds[t]), x2 = walker.position_of(worlds[t + 1]);
    const std::size_t delta = (x2 + L - x) % L;
    if (delta == 1) {
      ++distance;
    } else if (delta == L - 1) {
      --distance;
    }
  }
  return distance;
}

StochasticKernel random_kernel(std::size_t domain, std::size_t codomain, Rng& rng) {
  if (domain == 0 || codomain == 0) throw ConfigError("random_kernel: empty dimension");
  Matrix m(static_cast<Eigen::Index>(domain), static_cast<Eigen::Index>(codomain));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = -std::log1p(-rng.uniform());
    m.row(r) /= m.row(r).sum();
  }
  return StochasticKernel(std::move(m));
}

RandomSml make_random_sml(std::size_t world_card, std::size_t sensor_card, std::size_t actuator_card,
                          std::size_t target_rank_beta, std::size_t target_rank_alpha,
                          std::uint64_t seed, bool decoupled) {
  const std::size_t nw = world_card, ns = sensor_card, na = actuator_card;
  if (nw == 0 || ns == 0 || na == 0) throw ConfigError("make_random_sml: empty state space");
  if (target_rank_beta < 1 || target_rank_beta > std::min(nw, ns)) {
    throw ConfigError("make_random_sml: rank(beta) must lie in 1..min(|W|, |S|)");
  }
  const std::size_t alpha_cap = decoupled ? nw - 1 : nw * (nw - 1);
  if (target_rank_alpha > na - 1 || target_rank_alpha > alpha_cap) {
    throw ConfigError("make_random_sml: rank(alpha) infeasible for these cardinalities");
  }
  Rng rng = Rng::stream(seed, {0x736d6c});

  const Matrix beta = random_kernel(nw, target_rank_beta, rng).matrix() *
                      random_kernel(target_rank_beta, ns, rng).matrix();

  // Vertex kernels B_j(w; .), j = 0..r; actions 0..r use the vertices, the
  // rest random convex combinations of them.
  const std::size_t nv = target_rank_alpha + 1;
  std::vector<Matrix> vertices;
  if (decoupled) {
    const Matrix rho = random_kernel(nw, nw, rng).matrix();
    const Matrix tau = random_kernel(nv, nw, rng).matrix();
    for (std::size_t j = 0; j < nv; ++j) {
      Matrix v = 0.5 * rho;
      v.rowwise() += 0.5 * tau.row(static_cast<Eigen::Index>(j));
      vertices.push_back(std::move(v));
    }
  } else {
    for (std::size_t j = 0; j < nv; ++j) vertices.push_back(random_kernel(nw, nw, rng).matrix());
  }
  Matrix weights = Matrix::Zero(static_cast<Eigen::Index>(na), static_cast<Eigen::Index>(nv));
  for (std::size_t a = 0; a < na; ++a) {
    if (a < nv) {
      weights(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) = 1.0;
    } else {
      weights.row(static_cast<Eigen::Index>(a)) = random_kernel(1, nv, rng).matrix();
    }
  }
  Matrix alpha = Matrix::Zero(static_cast<Eigen::Index>(nw * na), static_cast<Eigen::Index>(nw));
  for (std::size_t w = 0; w < nw; ++w) {
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t j = 0; j < nv; ++j) {
        alpha.row(static_cast<Eigen::Index>(w * na + a)) +=
            weights(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j)) *
            vertices[j].row(static_cast<Eigen::Index>(w));
      }
    }
  }
  for (Eigen::Index r = 0; r < alpha.rows(); ++r) alpha.row(r) /= alpha.row(r).sum();
  Matrix beta_n = beta;
  for (Eigen::Index r = 0; r < beta_n.rows(); ++r) beta_n.row(r) /= beta_n.row(r).sum();

  std::vector<double> init = std::vector<double>(nw, 1.0 / static_cast<double>(nw));
  double tail = 1.0;
  for (std::size_t w = 0; w + 1 < nw; ++w) tail -= init[w];
  init.back() = tail;

  SmlSystem sys(StateSpace::make("world", nw), StateSpace::make("sensor", ns),
                StateSpace::make("actuator", na), StochasticKernel(std::move(beta_n)),
                StochasticKernel(std::move(alpha)), std::move(init));
  const std::size_t rb = beta_rank(sys), ra = alpha_rank(sys);
  if (rb != target_rank_beta || ra != target_rank_alpha) {
    throw NumericError("make_random_sml: achieved ranks (" + std::to_string(rb) + ", " +
                       std::to_string(ra) + ") differ from the request");
  }
  return RandomSml{std::move(sys), rb, ra};
}

StochasticKernel epsilon_greedy(const StochasticKernel& base, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon_greedy: epsilon outside [0, 1]");
  const Matrix uniform = Matrix::Constant(base.matrix().rows(), base.matrix().cols(),
                                          1.0 / static_cast<double>(base.codomain()));
  return StochasticKernel((1.0 - epsilon) * base.matrix() + epsilon * uniform, 1e-12);
}

}  // namespace embodied

#include "embodied/policy_models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "embodied/error.hpp"
#include "embodied/simplex.hpp"

namespace embodied {

namespace {

// Column (s, a) = beta(w; s) alpha(w, a; w') flattened over (w in worlds, w').
Matrix contribution_columns(const SmlSystem& sys, std::span<const std::size_t> worlds,
                            std::span<const std::size_t> sensors) {
  const std::size_t nw = sys.world_card(), na = sys.actuator_card();
  Matrix L = Matrix::Zero(static_cast<Eigen::Index>(worlds.size() * nw),
                          static_cast<Eigen::Index>(sensors.size() * na));
  for (std::size_t si = 0; si < sensors.size(); ++si) {
    for (std::size_t a = 0; a < na; ++a) {
      const auto col = static_cast<Eigen::Index>(si * na + a);
      for (std::size_t i = 0; i < worlds.size(); ++i) {
        const double b = sys.beta()(worlds[i], sensors[si]);
        if (b == 0.0) continue;
        const auto alpha_row = sys.alpha().row(sys.alpha_row(worlds[i], a));
        for (std::size_t w2 = 0; w2 < nw; ++w2) {
          L(static_cast<Eigen::Index>(i * nw + w2), col) = b * alpha_row[w2];
        }
      }
    }
  }
  return L;
}

Matrix image_basis(const Matrix& rows, double tol) {
  if (rows.rows() == 0 || rows.cols() == 0) return Matrix(rows.cols(), 0);
  return row_space_basis(rows, tol);
}

std::vector<std::size_t> iota_vec(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

EmbodimentMatrix embodiment_matrix(const SmlSystem& sys, double tol) {
  const auto worlds = iota_vec(sys.world_card());
  const auto sensors = iota_vec(sys.sensor_card());
  EmbodimentMatrix out;
  out.sensor_card = sys.sensor_card();
  out.actuator_card = sys.actuator_card();
  out.basis = image_basis(basis_images(sys).rows, tol);
  out.E = out.basis.transpose() * contribution_columns(sys, worlds, sensors);
  return out;
}

Vector vec_policy(const StochasticKernel& pi) {
  const Matrix& m = pi.matrix();
  return Eigen::Map<const Vector>(m.data(), m.size());
}

StochasticKernel expfam_policy(const EmbodimentMatrix& E, const Vector& theta) {
  if (static_cast<std::size_t>(theta.size()) != E.dim()) {
    throw ConfigError("expfam_policy: theta length must equal the family dimension");
  }
  const std::size_t ns = E.sensor_card, na = E.actuator_card;
  const Vector energy = E.dim() == 0 ? Vector::Zero(static_cast<Eigen::Index>(ns * na))
                                     : Vector(E.E.transpose() * theta);
  Matrix p(static_cast<Eigen::Index>(ns), static_cast<Eigen::Index>(na));
  for (std::size_t s = 0; s < ns; ++s) {
    const auto row = energy.segment(static_cast<Eigen::Index>(s * na), static_cast<Eigen::Index>(na));
    const double mx = row.maxCoeff();
    double z = 0.0;
    for (std::size_t a = 0; a < na; ++a) z += std::exp(row(static_cast<Eigen::Index>(a)) - mx);
    for (std::size_t a = 0; a < na; ++a) {
      p(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) =
          std::exp(row(static_cast<Eigen::Index>(a)) - mx) / z;
    }
  }
  return StochasticKernel(std::move(p), 1e-12);
}

double behavior_gap(const SmlSystem& sys, const StochasticKernel& a, const StochasticKernel& b) {
  return (behavior_map(sys, a).matrix() - behavior_map(sys, b).matrix()).cwiseAbs().maxCoeff();
}

namespace {

double log_partition(const EmbodimentMatrix& E, const Vector& theta, const Vector& target_moment) {
  const std::size_t ns = E.sensor_card, na = E.actuator_card;
  const Vector energy = E.E.transpose() * theta;
  double total = -theta.dot(target_moment);
  for (std::size_t s = 0; s < ns; ++s) {
    const auto row = energy.segment(static_cast<Eigen::Index>(s * na), static_cast<Eigen::Index>(na));
    const double mx = row.maxCoeff();
    total += mx + std::log((row.array() - mx).exp().sum());
  }
  return total;
}

}  // namespace

ExpFamFit fit_expfam(const SmlSystem& sys, const EmbodimentMatrix& E,
                     const StochasticKernel& target, double tol, std::size_t max_iters) {
  sys.check_policy(target);
  if (E.sensor_card != sys.sensor_card() || E.actuator_card != sys.actuator_card()) {
    throw ConfigError("fit_expfam: embodiment matrix does not match the system");
  }
  const std::size_t ns = E.sensor_card, na = E.actuator_card;
  const auto d = static_cast<Eigen::Index>(E.dim());
  const Vector m = E.E * vec_policy(target);

  ExpFamFit fit;
  fit.theta = Vector::Zero(d);
  double f = log_partition(E, fit.theta, m);
  for (;;) {
    const StochasticKernel pi = expfam_policy(E, fit.theta);
    const Vector p = vec_policy(pi);
    const Vector grad = E.E * p - m;
    fit.gradient_norm = d == 0 ? 0.0 : grad.cwiseAbs().maxCoeff();
    if (fit.gradient_norm <= tol) {
      fit.converged = true;
      break;
    }
    if (fit.iterations >= max_iters) break;

    Matrix H = Matrix::Zero(d, d);
    for (std::size_t s = 0; s < ns; ++s) {
      const auto block = E.E.middleCols(static_cast<Eigen::Index>(s * na), static_cast<Eigen::Index>(na));
      const auto ps = p.segment(static_cast<Eigen::Index>(s * na), static_cast<Eigen::Index>(na));
      const Vector mean = block * ps;
      H += block * ps.asDiagonal() * block.transpose() - mean * mean.transpose();
    }
    // Levenberg damping keeps the step defined when some direction of the
    // family is nearly flat.
    double mu = 1e-12 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
    Vector step;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Matrix Hd = H;
      Hd.diagonal().array() += mu;
      Eigen::LDLT<Matrix> ldlt(Hd);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        step = -ldlt.solve(grad);
        if (step.allFinite()) break;
      }
      mu *= 10.0;
      step.resize(0);
    }
    if (step.size() == 0) throw NumericError("fit_expfam: Newton system could not be solved");

    const double slope = grad.dot(step);
    double t = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Vector cand = fit.theta + t * step;
      const double fc = log_partition(E, cand, m);
      if (std::isfinite(fc) && fc <= f + 1e-4 * t * slope) {
        fit.theta = cand;
        f = fc;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    ++fit.iterations;
    if (!accepted) break;
  }
  fit.behavior_gap = behavior_gap(sys, expfam_policy(E, fit.theta), target);
  return fit;
}

std::size_t FacePattern::dimension() const {
  std::size_t d = 0;
  for (const auto& set : allowed) d += set.size() - 1;
  return d;
}

namespace {

std::vector<std::vector<std::size_t>> sorted_subsets(std::size_t na) {
  std::vector<std::vector<std::size_t>> subsets;
  for (std::size_t mask = 1; mask < (std::size_t{1} << na); ++mask) {
    std::vector<std::size_t> set;
    for (std::size_t a = 0; a < na; ++a) {
      if (mask >> a & 1U) set.push_back(a);
    }
    subsets.push_back(std::move(set));
  }
  std::sort(subsets.begin(), subsets.end());
  return subsets;
}

void face_recurse(const std::vector<std::vector<std::size_t>>& subsets, std::size_t s,
                  std::size_t ns, std::size_t na, std::size_t remaining, FacePattern& cur,
                  const std::function<void(const FacePattern&)>& visit) {
  if (s == ns) {
    if (remaining == 0) visit(cur);
    return;
  }
  // Later rows can absorb at most (na - 1) each.
  if (remaining > (ns - s) * (na - 1)) return;
  for (const auto& set : subsets) {
    const std::size_t extra = set.size() - 1;
    if (extra > remaining) continue;
    cur.allowed[s] = set;
    face_recurse(subsets, s + 1, ns, na, remaining - extra, cur, visit);
  }
}

}  // namespace

void for_each_face(std::size_t sensor_card, std::size_t actuator_card, std::size_t dim,
                   const std::function<void(const FacePattern&)>& visit) {
  if (sensor_card == 0 || actuator_card == 0) throw ConfigError("enumerate_faces: empty state space");
  if (actuator_card > 20) throw CapacityError("enumerate_faces: too many actions");
  if (dim > sensor_card * (actuator_card - 1)) {
    throw ConfigError("enumerate_faces: dimension exceeds |S|(|A|-1)");
  }
  const auto subsets = sorted_subsets(actuator_card);
  FacePattern cur;
  cur.allowed.resize(sensor_card);
  face_recurse(subsets, 0, sensor_card, actuator_card, dim, cur, visit);
}

std::vector<FacePattern> enumerate_faces(std::size_t sensor_card, std::size_t actuator_card,
                                         std::size_t dim) {
  std::vector<FacePattern> out;
  for_each_face(sensor_card, actuator_card, dim, [&](const FacePattern& f) { out.push_back(f); });
  return out;
}

SupportSet full_support(std::size_t sensor_card) {
  SupportSet s;
  s.sensor_indices = iota_vec(sensor_card);
  s.kept_mass = 1.0;
  return s;
}

SparseRepresentative sparse_representative(const SmlSystem& sys, const StochasticKernel& target,
                                           const SupportSet& support, double tol) {
  sys.check_policy(target);
  if (support.sensor_indices.empty()) throw ConfigError("sparse_representative: empty support");
  for (std::size_t s : support.sensor_indices) {
    if (s >= sys.sensor_card()) throw ConfigError("sparse_representative: support index out of range");
  }
  const std::size_t na = sys.actuator_card();
  const auto& sensors = support.sensor_indices;
  const std::size_t nsup = sensors.size();
  const auto worlds = worlds_within_support(sys, support);

  Matrix Q(0, 0);
  Matrix L(0, static_cast<Eigen::Index>(nsup * na));
  if (!worlds.empty()) {
    Q = image_basis(basis_images_restricted(sys, worlds, sensors).rows, tol);
    L = contribution_columns(sys, worlds, sensors);
  }
  const auto d = Q.cols();
  const Matrix Es = d == 0 ? Matrix(0, static_cast<Eigen::Index>(nsup * na)) : Matrix(Q.transpose() * L);

  Vector target_vec(static_cast<Eigen::Index>(nsup * na));
  std::size_t target_nnz = 0;
  for (std::size_t i = 0; i < nsup; ++i) {
    for (std::size_t a = 0; a < na; ++a) {
      const double p = target(sensors[i], a);
      target_vec(static_cast<Eigen::Index>(i * na + a)) = p;
      if (p != 0.0) ++target_nnz;
    }
  }

  SparseRepresentative out{target, 0, nsup + static_cast<std::size_t>(d), static_cast<std::size_t>(d), 0.0};
  Matrix result = target.matrix();
  if (target_nnz > out.budget) {
    const auto rows = static_cast<Eigen::Index>(nsup) + d;
    Matrix A = Matrix::Zero(rows, static_cast<Eigen::Index>(nsup * na));
    Vector b(rows);
    for (std::size_t i = 0; i < nsup; ++i) {
      A.row(static_cast<Eigen::Index>(i)).segment(static_cast<Eigen::Index>(i * na),
                                                  static_cast<Eigen::Index>(na)).setOnes();
      b(static_cast<Eigen::Index>(i)) = 1.0;
    }
    if (d > 0) {
      A.bottomRows(d) = Es;
      b.tail(d) = Es * target_vec;
    }
    const LpResult lp = find_basic_feasible_solution(A, b);
    if (!lp.feasible) throw NumericError("sparse_representative: feasibility problem reported infeasible");
    for (std::size_t i = 0; i < nsup; ++i) {
      auto row = result.row(static_cast<Eigen::Index>(sensors[i]));
      for (std::size_t a = 0; a < na; ++a) {
        const double v = lp.x(static_cast<Eigen::Index>(i * na + a));
        row(static_cast<Eigen::Index>(a)) = v < 1e-14 ? 0.0 : v;
      }
      const double sum = row.sum();
      if (!(sum > 0.0)) throw NumericError("sparse_representative: empty policy row");
      row /= sum;
    }
    out.policy = StochasticKernel(std::move(result), 1e-9);
  }

  for (std::size_t s : sensors) {
    for (std::size_t a = 0; a < na; ++a) {
      if (out.policy(s, a) != 0.0) ++out.nonzeros;
    }
  }
  if (!worlds.empty()) {
    const Matrix diff = behavior_map(sys, out.policy).matrix() - behavior_map(sys, target).matrix();
    for (std::size_t w : worlds) {
      out.behavior_gap = std::max(out.behavior_gap, diff.row(static_cast<Eigen::Index>(w)).cwiseAbs().maxCoeff());
    }
  }
  return out;
}

}  // namespace embodied

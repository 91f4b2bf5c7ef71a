#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "embodied/error.hpp"
#include "embodied/json_io.hpp"
#include "test_support.hpp"

using namespace embodied;
using namespace testing;

namespace {

Matrix identity_alpha_2() {
  // alpha(w, a; .) = delta_w for |W| = |A| = 2; rows in (w, a) order.
  Matrix a = Matrix::Zero(4, 2);
  a(0, 0) = a(1, 0) = 1.0;
  a(2, 1) = a(3, 1) = 1.0;
  return a;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("embodied_test_" + name);
}

}  // namespace

TEST_CASE("one-step mechanism of deterministic identity maps") {
  const SmlSystem sys = make_system(Matrix::Identity(2, 2), identity_alpha_2(), 2);
  const auto pi = StochasticKernel(Matrix::Identity(2, 2));
  const auto joint = one_step_mechanism(sys, pi);
  for (std::size_t w = 0; w < 2; ++w) {
    const std::size_t col = (w * 2 + w) * 2 + w;
    CHECK(joint(w, col) == 1.0);
    CHECK(joint.matrix().row(static_cast<Eigen::Index>(w)).sum() == 1.0);
  }
}

TEST_CASE("one-step mechanism of uniform kernels is uniform") {
  const SmlSystem sys = make_system(Matrix::Constant(2, 2, 0.5), Matrix::Constant(4, 2, 0.5), 2);
  const auto joint = one_step_mechanism(sys, StochasticKernel::uniform(2, 2));
  CHECK(joint.matrix().cwiseAbs().maxCoeff() == doctest::Approx(0.125));
  CHECK(joint.matrix().minCoeff() == doctest::Approx(0.125));
}

TEST_CASE("one-step mechanism matches the element-wise product") {
  Rng rng(11);
  const SmlSystem sys = random_system(3, 3, 2, rng);
  const auto pi = random_stochastic(3, 2, rng);
  const auto joint = one_step_mechanism(sys, pi);
  double worst = 0.0;
  for (std::size_t w = 0; w < 3; ++w)
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t w2 = 0; w2 < 3; ++w2) {
          const double expect = sys.beta()(w, s) * pi(s, a) * sys.alpha()(w * 2 + a, w2);
          worst = std::max(worst, std::abs(joint(w, (s * 2 + a) * 3 + w2) - expect));
        }
  CHECK(worst <= 1e-14);
}

TEST_CASE("policy dimension mismatch is a configuration error") {
  Rng rng(1);
  const SmlSystem sys = random_system(3, 3, 2, rng);
  CHECK_THROWS_AS(behavior_map(sys, StochasticKernel::uniform(2, 2)), ConfigError);
  CHECK_THROWS_AS(one_step_mechanism(sys, StochasticKernel::uniform(3, 3)), ConfigError);
}

TEST_CASE("behaviour ignores the policy when alpha does not depend on the action") {
  Rng rng(5);
  const auto base = random_stochastic(3, 3, rng);
  Matrix alpha(6, 3);
  for (int w = 0; w < 3; ++w) {
    alpha.row(2 * w) = base.matrix().row(w);
    alpha.row(2 * w + 1) = base.matrix().row(w);
  }
  const SmlSystem sys = make_system(random_stochastic(3, 2, rng).matrix(), alpha, 2);
  for (int i = 0; i < 5; ++i) {
    const auto p = behavior_map(sys, random_stochastic(2, 2, rng));
    CHECK(max_abs_diff(p.matrix(), base.matrix()) <= 1e-15);
  }
}

TEST_CASE("policies differing on an unreachable sensor state give the same behaviour") {
  Rng rng(9);
  Matrix beta = random_stochastic(3, 3, rng).matrix();
  beta.col(2).setZero();
  for (int r = 0; r < 3; ++r) beta.row(r) /= beta.row(r).sum();
  const SmlSystem sys = make_system(beta, random_stochastic(6, 3, rng).matrix(), 2);
  Matrix p1 = random_stochastic(3, 2, rng).matrix(), p2 = p1;
  p2.row(2) << 1.0, 0.0;
  p1.row(2) << 0.0, 1.0;
  const auto b1 = behavior_map(sys, StochasticKernel(p1));
  const auto b2 = behavior_map(sys, StochasticKernel(p2));
  CHECK(b1 == b2);

  // Equal one-step behaviour implies equal T-step world marginals.
  Eigen::RowVectorXd m1 = Eigen::RowVectorXd::Zero(3), m2 = m1;
  m1(0) = m2(0) = 1.0;
  for (int t = 1; t <= 10; ++t) {
    m1 = m1 * b1.matrix();
    m2 = m2 * b2.matrix();
    CHECK((m1 - m2).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("behaviour map equals the marginal of the one-step mechanism") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t nw = 1 + rng.below(5), ns = 1 + rng.below(5), na = 1 + rng.below(5);
    const SmlSystem sys = random_system(nw, ns, na, rng);
    const auto pi = random_stochastic(ns, na, rng);
    const auto joint = one_step_mechanism(sys, pi);
    Matrix marg = Matrix::Zero(static_cast<Eigen::Index>(nw), static_cast<Eigen::Index>(nw));
    for (std::size_t w = 0; w < nw; ++w)
      for (std::size_t sa = 0; sa < ns * na; ++sa)
        for (std::size_t w2 = 0; w2 < nw; ++w2)
          marg(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(w2)) += joint(w, sa * nw + w2);
    CHECK(max_abs_diff(behavior_map(sys, pi).matrix(), marg) <= 1e-14);
    CHECK(max_abs_diff(behavior_map(sys, pi).matrix(), behavior_map_serial(sys, pi).matrix()) <= 1e-14);
  }
}

TEST_CASE("behaviour map equals the beta * pi * reshaped-alpha product") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t nw = 2 + rng.below(4), ns = 1 + rng.below(5), na = 1 + rng.below(5);
    const SmlSystem sys = random_system(nw, ns, na, rng);
    const auto pi = random_stochastic(ns, na, rng);
    const Matrix q = sys.beta().matrix() * pi.matrix();
    Matrix p = Matrix::Zero(static_cast<Eigen::Index>(nw), static_cast<Eigen::Index>(nw));
    for (std::size_t w = 0; w < nw; ++w) {
      Matrix block = sys.alpha().matrix().middleRows(static_cast<Eigen::Index>(w * na), static_cast<Eigen::Index>(na));
      p.row(static_cast<Eigen::Index>(w)) = q.row(static_cast<Eigen::Index>(w)) * block;
    }
    CHECK(max_abs_diff(behavior_map(sys, pi).matrix(), p) <= 1e-12);
  }
}

TEST_CASE("behaviour map is affine in the policy") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const SmlSystem sys = random_system(4, 3, 3, rng);
    const auto p1 = random_stochastic(3, 3, rng), p2 = random_stochastic(3, 3, rng);
    const double lam = rng.uniform();
    const Matrix lhs = behavior_map(sys, mix(p1, p2, lam)).matrix();
    const Matrix rhs = lam * behavior_map(sys, p1).matrix() + (1.0 - lam) * behavior_map(sys, p2).matrix();
    CHECK(max_abs_diff(lhs, rhs) <= 1e-12);
  }
}

TEST_CASE("simulation of a deterministic loop follows the unique orbit") {
  // Two worlds flip each step; beta reads the world, policy copies the sensor.
  Matrix alpha = Matrix::Zero(4, 2);
  alpha(0, 1) = alpha(1, 1) = 1.0;
  alpha(2, 0) = alpha(3, 0) = 1.0;
  const SmlSystem sys = make_system(Matrix::Identity(2, 2), alpha, 2);
  const auto pi = StochasticKernel(Matrix::Identity(2, 2));
  for (std::uint64_t seed : {1ULL, 2ULL, 99ULL}) {
    const Trajectory t = simulate(sys, pi, 6, seed);
    REQUIRE(t.steps.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(t.steps[i].w == i % 2);
      CHECK(t.steps[i].s == i % 2);
      CHECK(t.steps[i].a == i % 2);
    }
    CHECK(t.final_world == 0);
  }
}

TEST_CASE("simulation is reproducible and rejects zero steps") {
  Rng rng(3);
  const SmlSystem sys = random_system(4, 3, 2, rng);
  const auto pi = random_stochastic(3, 2, rng);
  CHECK(simulate(sys, pi, 500, 42) == simulate(sys, pi, 500, 42));
  CHECK_FALSE(simulate(sys, pi, 500, 42) == simulate(sys, pi, 500, 43));
  CHECK_THROWS_AS(simulate(sys, pi, 0, 1), ConfigError);
}

TEST_CASE("empirical transitions converge to the behaviour kernel") {
  Rng rng(8);
  const SmlSystem sys = random_system(3, 3, 2, rng);
  const auto pi = random_stochastic(3, 2, rng);
  const Trajectory t = simulate(sys, pi, 100000, 5);
  const auto worlds = t.worlds();
  Matrix counts = Matrix::Zero(3, 3);
  for (std::size_t i = 0; i + 1 < worlds.size(); ++i) {
    counts(static_cast<Eigen::Index>(worlds[i]), static_cast<Eigen::Index>(worlds[i + 1])) += 1.0;
  }
  const Matrix p = behavior_map(sys, pi).matrix();
  for (Eigen::Index r = 0; r < 3; ++r) {
    const Eigen::RowVectorXd freq = counts.row(r) / counts.row(r).sum();
    CHECK(0.5 * (freq - p.row(r)).cwiseAbs().sum() <= 0.02);
  }
}

TEST_CASE("kernel files round-trip bit-exactly") {
  Rng rng(4);
  const auto k = random_stochastic(5, 7, rng);
  const auto path = temp_file("kernel.json");
  save_kernel(path, k);
  CHECK(load_kernel(path) == k);

  const SmlSystem sys = random_system(3, 2, 2, rng);
  const auto spath = temp_file("system.json");
  save_system(spath, sys);
  const SmlSystem back = load_system(spath);
  CHECK(back.beta() == sys.beta());
  CHECK(back.alpha() == sys.alpha());
  CHECK(back.init_world() == sys.init_world());
}

TEST_CASE("kernel files with bad rows are rejected with the row index") {
  const auto path = temp_file("bad_kernel.json");
  write_text_file(path, R"({"domain": 2, "codomain": 2, "rows": [[0.5, 0.5], [0.6, 0.3]]})");
  try {
    load_kernel(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
  write_text_file(path, R"({"domain": 1, "codomain": 2, "rows": [[1.5, -0.5]]})");
  CHECK_THROWS_AS(load_kernel(path), ParseError);
  write_text_file(path, R"({"domain": 1, "codomain": 2, "rows": [[1.0]]})");
  CHECK_THROWS_AS(load_kernel(path), ParseError);
  write_text_file(path, "{not json");
  CHECK_THROWS_AS(load_kernel(path), ParseError);
}

TEST_CASE("ingestion tolerates text round-off that construction rejects") {
  Matrix m(1, 3);
  m << 0.1, 0.2, 0.7 + 5e-10;
  CHECK_THROWS_AS(StochasticKernel{m}, ValidationError);
  CHECK_NOTHROW(StochasticKernel(m, kIngestionRowTol));
}

TEST_CASE("empirical kernels allow all-zero rows only") {
  Matrix m = Matrix::Zero(2, 2);
  m(1, 0) = 1.0;
  const EmpiricalKernel k(m);
  CHECK(k.row_is_empty(0));
  CHECK_FALSE(k.row_is_empty(1));
  m(0, 0) = 0.5;
  CHECK_THROWS_AS(EmpiricalKernel{m}, ValidationError);
}

TEST_CASE("system construction checks shapes") {
  CHECK_THROWS_AS(make_system(Matrix::Identity(2, 2), Matrix::Constant(2, 2, 0.5), 2), ConfigError);
  CHECK_THROWS_AS(StateSpace::make("x", 0), ConfigError);
}

TEST_CASE("seed derivation separates streams") {
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
}

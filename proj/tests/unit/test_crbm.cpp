#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <algorithm>

#include "embodied/binary_code.hpp"
#include "embodied/crbm.hpp"
#include "embodied/crbm_bounds.hpp"
#include "embodied/error.hpp"

using namespace embodied;

namespace {

// Definition-level oracle: sum over every hidden configuration z of
// exp(z.V y + z.W x + b.x + c.z + extra.y), normalised over x.
std::vector<double> brute_force_conditional(const CrbmParams& p, const Bits& y, const Vector& extra_input = Vector()) {
  std::vector<double> un(std::size_t{1} << p.n, 0.0);
  Vector yv(static_cast<Eigen::Index>(p.k));
  for (std::size_t i = 0; i < p.k; ++i) yv(static_cast<Eigen::Index>(i)) = y[i];
  const double input_term = extra_input.size() ? extra_input.dot(yv) : 0.0;
  for (std::size_t xi = 0; xi < un.size(); ++xi) {
    const Bits xb = index_to_bits(xi, p.n);
    Vector x(static_cast<Eigen::Index>(p.n));
    for (std::size_t i = 0; i < p.n; ++i) x(static_cast<Eigen::Index>(i)) = xb[i];
    for (std::size_t zi = 0; zi < (std::size_t{1} << p.m); ++zi) {
      const Bits zb = index_to_bits(zi, p.m);
      Vector z(static_cast<Eigen::Index>(p.m));
      for (std::size_t j = 0; j < p.m; ++j) z(static_cast<Eigen::Index>(j)) = zb[j];
      double e = p.b.dot(x) + input_term;
      if (p.m > 0) e += z.dot(p.V * yv) + z.dot(p.W * x) + p.c.dot(z);
      un[xi] += std::exp(e);
    }
  }
  double zsum = 0.0;
  for (double v : un) zsum += v;
  for (double& v : un) v /= zsum;
  return un;
}

CrbmParams random_params(std::size_t k, std::size_t n, std::size_t m, double sd, Rng& rng) {
  CrbmParams p = CrbmParams::random(k, n, m, sd, rng);
  for (Eigen::Index i = 0; i < p.b.size(); ++i) p.b(i) = rng.normal(0.0, sd);
  for (Eigen::Index i = 0; i < p.c.size(); ++i) p.c(i) = rng.normal(0.0, sd);
  return p;
}

Bits random_bits(std::size_t n, Rng& rng) {
  Bits b(n);
  for (auto& v : b) v = rng.bernoulli(0.5);
  return b;
}

double tv(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Distribution of x after one Gibbs sweep from a uniform start.
std::vector<double> one_sweep_distribution(const CrbmParams& p, const Bits& y) {
  const std::size_t nx = std::size_t{1} << p.n, nz = std::size_t{1} << p.m;
  Vector yv(static_cast<Eigen::Index>(p.k));
  for (std::size_t i = 0; i < p.k; ++i) yv(static_cast<Eigen::Index>(i)) = y[i];
  std::vector<double> out(nx, 0.0);
  for (std::size_t x0 = 0; x0 < nx; ++x0) {
    const Bits xb = index_to_bits(x0, p.n);
    Vector x(static_cast<Eigen::Index>(p.n));
    for (std::size_t i = 0; i < p.n; ++i) x(static_cast<Eigen::Index>(i)) = xb[i];
    const Vector act = p.c + p.V * yv + p.W * x;
    for (std::size_t zi = 0; zi < nz; ++zi) {
      const Bits zb = index_to_bits(zi, p.m);
      double pz = 1.0;
      Vector z(static_cast<Eigen::Index>(p.m));
      for (std::size_t j = 0; j < p.m; ++j) {
        z(static_cast<Eigen::Index>(j)) = zb[j];
        const double q = logistic(act(static_cast<Eigen::Index>(j)));
        pz *= zb[j] ? q : 1.0 - q;
      }
      const Vector vis = p.b + p.W.transpose() * z;
      for (std::size_t x1 = 0; x1 < nx; ++x1) {
        const Bits x1b = index_to_bits(x1, p.n);
        double px = 1.0;
        for (std::size_t i = 0; i < p.n; ++i) {
          const double q = logistic(vis(static_cast<Eigen::Index>(i)));
          px *= x1b[i] ? q : 1.0 - q;
        }
        out[x1] += pz * px / static_cast<double>(nx);
      }
    }
  }
  return out;
}

std::vector<double> empirical(const CrbmParams& p, const Bits& y, std::size_t sweeps, std::size_t samples,
                              std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> freq(std::size_t{1} << p.n, 0.0);
  for (std::size_t i = 0; i < samples; ++i) freq[bits_to_index(gibbs_sample(p, y, sweeps, rng))] += 1.0;
  for (double& f : freq) f /= static_cast<double>(samples);
  return freq;
}

}  // namespace

TEST_CASE("exact conditional without hidden units factorises") {
  CrbmParams p = CrbmParams::zeros(2, 3, 0);
  p.b << 0.5, -1.0, 2.0;
  const Bits y{1, 0};
  const auto dist = exact_conditional(p, y);
  for (std::size_t xi = 0; xi < 8; ++xi) {
    const Bits x = index_to_bits(xi, 3);
    double expect = 1.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double s = logistic(p.b(static_cast<Eigen::Index>(i)));
      expect *= x[i] ? s : 1.0 - s;
    }
    CHECK(dist[xi] == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("zero parameters give the uniform conditional") {
  const CrbmParams p = CrbmParams::zeros(3, 4, 5);
  for (double v : exact_conditional(p, Bits{0, 1, 1})) CHECK(v == doctest::Approx(1.0 / 16.0));
}

TEST_CASE("exact conditional matches the double sum over outputs and hidden units") {
  Rng rng(123);
  double worst = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t k = rng.below(7), n = 1 + rng.below(6), m = rng.below(7);
    const CrbmParams p = random_params(k, n, m, 1.5, rng);
    const Bits y = random_bits(k, rng);
    const auto fast = exact_conditional(p, y);
    const auto serial = exact_conditional_serial(p, y);
    const auto oracle = brute_force_conditional(p, y);
    double total = 0.0;
    for (std::size_t i = 0; i < fast.size(); ++i) {
      worst = std::max(worst, std::abs(fast[i] - oracle[i]));
      CHECK(fast[i] == serial[i]);
      total += fast[i];
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("an input-only energy term cancels in the conditional") {
  Rng rng(4);
  const CrbmParams p = random_params(3, 2, 3, 1.0, rng);
  Vector extra(3);
  extra << 2.0, -1.0, 0.5;
  for (std::size_t yi = 0; yi < 8; ++yi) {
    const Bits y = index_to_bits(yi, 3);
    const auto with = brute_force_conditional(p, y, extra);
    const auto lib = exact_conditional(p, y);
    for (std::size_t i = 0; i < lib.size(); ++i) CHECK(std::abs(with[i] - lib[i]) <= 1e-12);
  }
}

TEST_CASE("exact conditional rejects oversized outputs and mismatched inputs") {
  CHECK_THROWS_AS(exact_conditional(CrbmParams::zeros(1, 21, 1), Bits{0}), CapacityError);
  CHECK_THROWS_AS(exact_conditional(CrbmParams::zeros(2, 2, 1), Bits{0}), ConfigError);
}

TEST_CASE("Gibbs sampling") {
  SUBCASE("zero parameters sample uniformly") {
    const CrbmParams p = CrbmParams::zeros(2, 3, 2);
    const auto freq = empirical(p, Bits{1, 0}, 1, 100000, 7);
    CHECK(tv(freq, std::vector<double>(8, 0.125)) <= 0.02);
  }
  SUBCASE("a sharp hidden unit pins the output pattern") {
    CrbmParams p = CrbmParams::zeros(1, 3, 1);
    p.W << 10.0, -10.0, 10.0;
    p.c << 5.0;
    const auto exact = exact_conditional(p, Bits{1});
    const auto freq = empirical(p, Bits{1}, 20, 20000, 9);
    CHECK(exact[0b101] >= 0.99);
    CHECK(freq[0b101] >= 0.99);
  }
  SUBCASE("one sweep from a uniform start has the enumerated law") {
    Rng rng(10);
    const CrbmParams p = random_params(2, 3, 2, 1.0, rng);
    const Bits y{0, 1};
    CHECK(tv(empirical(p, y, 1, 100000, 3), one_sweep_distribution(p, y)) <= 0.02);
  }
  SUBCASE("long chains reach the exact conditional") {
    Rng rng(11);
    const CrbmParams p = random_params(2, 3, 3, 0.7, rng);
    const Bits y{1, 1};
    CHECK(tv(empirical(p, y, 50, 30000, 5), exact_conditional(p, y)) <= 0.03);
  }
  SUBCASE("same seed, same sample") {
    Rng rng(12);
    const CrbmParams p = random_params(2, 4, 3, 1.0, rng);
    CHECK(gibbs_sample(p, Bits{0, 1}, 5, 77) == gibbs_sample(p, Bits{0, 1}, 5, 77));
    CHECK_THROWS_AS(gibbs_sample(p, Bits{0, 1}, 0, 77), ConfigError);
  }
}

TEST_CASE("training configuration defaults follow the published protocol") {
  const TrainConfig t;
  CHECK(t.epochs == 20000);
  CHECK(t.batch_size == 50);
  CHECK(t.learning_rate == 1.0);
  CHECK(t.momentum == 0.1);
  CHECK(t.weight_cost == 0.001);
  CHECK(t.cd_steps == 10);
  CHECK(t.input_noise_sd == 0.01);
  const TrainConfig back = train_config_from_json(json{{"epochs", 7}});
  CHECK(back.epochs == 7);
  CHECK(back.batch_size == 50);
  CHECK(to_json(train_config_from_json(to_json(t))) == to_json(t));
}

TEST_CASE("CD training") {
  Rng rng(21);
  SUBCASE("zero epochs leave the parameters unchanged") {
    const CrbmParams p = random_params(2, 2, 3, 1.0, rng);
    TrainConfig cfg;
    cfg.epochs = 0;
    const std::vector<TrainingPair> data{{{0, 1}, {1, 0}}};
    const CrbmParams q = cd_train(p, data, cfg);
    CHECK(q.W == p.W);
    CHECK(q.V == p.V);
    CHECK(q.b == p.b);
    CHECK(q.c == p.c);
  }
  SUBCASE("a single deterministic pair is learned") {
    const std::vector<TrainingPair> data{{{1, 0}, {0, 1, 1}}};
    TrainConfig cfg;
    cfg.epochs = 300;
    cfg.seed = 3;
    const CrbmParams q = cd_train(CrbmParams::random(2, 3, 1, 0.01, rng), data, cfg);
    CHECK(exact_conditional(q, data[0].y)[0b011] >= 0.95);
  }
  SUBCASE("training is reproducible") {
    const std::vector<TrainingPair> data{{{1}, {0, 1}}, {{0}, {1, 0}}};
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.seed = 5;
    const CrbmParams init = CrbmParams::random(1, 2, 2, 0.1, rng);
    CHECK(cd_train(init, data, cfg).W == cd_train(init, data, cfg).W);
  }
  SUBCASE("dimension mismatch") {
    const std::vector<TrainingPair> data{{{1, 1}, {0, 1}}};
    CHECK_THROWS_AS(cd_train(CrbmParams::zeros(1, 2, 1), data, TrainConfig{}), ConfigError);
  }
}

TEST_CASE("continuous inputs without noise train like their binned codes") {
  Rng rng(31);
  const BinaryCode code{2, 1};
  BinaryEncoder enc(code);
  std::vector<ContinuousPair> cont;
  std::vector<TrainingPair> disc;
  for (double v : {-0.9, -0.3, 0.2, 0.8}) {
    const Bits x = index_to_bits(bin_of(v, 2) % 2 + 1, 2);
    cont.push_back({{v}, x});
    disc.push_back({enc.encode(std::vector<double>{v}), x});
  }
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 2;
  cfg.input_noise_sd = 0.0;
  const CrbmParams init = CrbmParams::random(2, 2, 3, 0.1, rng);
  CHECK(cd_train_continuous(init, cont, code, cfg).W == cd_train(init, disc, cfg).W);
  cfg.input_noise_sd = 0.01;
  CHECK(cd_train_continuous(init, cont, code, cfg).finite());
}

TEST_CASE("training recovers data drawn from a small CRBM") {
  Rng rng(41);
  const CrbmParams gen = random_params(2, 2, 2, 2.0, rng);
  std::vector<TrainingPair> train, test;
  for (int i = 0; i < 2000; ++i) {
    const Bits y = random_bits(2, rng);
    const auto dist = exact_conditional(gen, y);
    const Bits x = index_to_bits(rng.categorical(dist), 2);
    (i < 1500 ? train : test).push_back({y, x});
  }
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.learning_rate = 0.1;
  cfg.momentum = 0.5;
  cfg.weight_cost = 0.0;
  cfg.seed = 2;
  const CrbmParams learned = cd_train(CrbmParams::random(2, 2, 4, 0.01, rng), train, cfg);
  const double ll_gen = conditional_log_likelihood(gen, test);
  const double ll_learned = conditional_log_likelihood(learned, test);
  CHECK(ll_learned >= ll_gen * 1.05);  // log-likelihoods are negative
}

TEST_CASE("CD updates point uphill on the exact conditional likelihood") {
  Rng rng(51);
  int positive = 0, checks = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t k = 1 + rng.below(4), n = 1 + rng.below(4), m = 1 + rng.below(4);
    const CrbmParams p = random_params(k, n, m, 0.5, rng);
    const CrbmParams teacher = random_params(k, n, m, 2.5, rng);
    std::vector<TrainingPair> data;
    for (int i = 0; i < 300; ++i) {
      const Bits y = random_bits(k, rng);
      data.push_back({y, index_to_bits(rng.categorical(exact_conditional(teacher, y)), n)});
    }
    // Exact gradient of the mean log-likelihood by enumeration.
    Matrix gW = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    Matrix gV = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
    Vector gb = Vector::Zero(static_cast<Eigen::Index>(n)), gc = Vector::Zero(static_cast<Eigen::Index>(m));
    for (const auto& d : data) {
      Vector y(static_cast<Eigen::Index>(k));
      for (std::size_t i = 0; i < k; ++i) y(static_cast<Eigen::Index>(i)) = d.y[i];
      const auto model = exact_conditional(p, d.y);
      auto stats = [&](std::size_t xi, double w) {
        const Bits xb = index_to_bits(xi, n);
        Vector x(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i)) = xb[i];
        Vector pz = p.c + p.V * y + p.W * x;
        for (Eigen::Index j = 0; j < pz.size(); ++j) pz(j) = logistic(pz(j));
        gW += w * pz * x.transpose();
        gV += w * pz * y.transpose();
        gb += w * x;
        gc += w * pz;
      };
      stats(bits_to_index(d.x), 1.0);
      for (std::size_t xi = 0; xi < model.size(); ++xi) stats(xi, -model[xi]);
    }
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = data.size();
    cfg.learning_rate = 1e-3;
    cfg.momentum = 0.0;
    cfg.weight_cost = 0.0;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const CrbmParams q = cd_train(p, data, cfg);
    const double dot = ((q.W - p.W).array() * gW.array()).sum() + ((q.V - p.V).array() * gV.array()).sum() +
                       (q.b - p.b).dot(gb) + (q.c - p.c).dot(gc);
    ++checks;
    positive += dot > 0.0;
  }
  CHECK(positive >= 0.95 * checks);
}

TEST_CASE("parameter files round-trip") {
  Rng rng(61);
  const CrbmParams p = random_params(3, 2, 4, 1.0, rng);
  const CrbmParams q = crbm_from_json(json::parse(dump_json(to_json(p))));
  CHECK(q.W == p.W);
  CHECK(q.V == p.V);
  CHECK(q.b == p.b);
  CHECK(q.c == p.c);
  CHECK(p.parameter_count() == 4 * 3 + 4 * 2 + 4 + 2);
  CHECK_THROWS_AS(crbm_from_json(json{{"k", 1}}), ParseError);
}

TEST_CASE("constructed CRBMs") {
  SUBCASE("a single point needs no hidden unit") {
    const std::vector<SupportPoint> pts{{{1, 0}, {1, 0, 1}, 1.0}};
    for (double lam : {2.0, 5.0, 10.0}) {
      const CrbmParams p = construct_sparse_crbm(pts, lam);
      CHECK(p.m == 0);
      CHECK(exact_conditional(p, pts[0].y)[0b101] >= 1.0 - 8.0 * std::exp(-lam));
    }
  }
  SUBCASE("two equal-weight points differing in one bit") {
    const std::vector<SupportPoint> pts{{{0}, {0, 1}, 0.5}, {{0}, {1, 1}, 0.5}};
    double prev = 1e9;
    for (double lam : {5.0, 10.0, 20.0, 40.0}) {
      const auto dist = exact_conditional(construct_sparse_crbm(pts, lam), Bits{0});
      const double err = std::abs(dist[0b01] / dist[0b11] - 1.0);
      CHECK(err <= prev);
      prev = err;
    }
    CHECK(prev <= 1e-4);
  }
  SUBCASE("random sparse policies converge with |support| - 1 hidden units") {
    Rng rng(71);
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t k = 1 + rng.below(3), n = 1 + rng.below(3);
      std::vector<SupportPoint> pts;
      for (std::size_t yi = 0; yi < (std::size_t{1} << k); ++yi) {
        const std::size_t count = 1 + rng.below(std::min<std::size_t>(3, std::size_t{1} << n));
        std::vector<std::size_t> xs(std::size_t{1} << n);
        std::iota(xs.begin(), xs.end(), std::size_t{0});
        std::shuffle(xs.begin(), xs.end(), rng.engine());
        std::vector<double> w(count);
        double total = 0.0;
        for (auto& v : w) total += v = 0.1 + rng.uniform();
        for (std::size_t i = 0; i < count; ++i) pts.push_back({index_to_bits(yi, k), index_to_bits(xs[i], n), w[i] / total});
      }
      double prev = 1e300, best = 1e300;
      for (double lam : {5.0, 10.0, 20.0, 40.0, 80.0}) {
        const CrbmParams p = construct_sparse_crbm(pts, lam);
        CHECK(p.m == pts.size() - 1);
        const double kl = conditional_kl(p, pts);
        CHECK(kl <= prev + 1e-12);
        prev = kl;
        best = std::min(best, kl);
      }
      CHECK(best <= 1e-3);
    }
  }
  SUBCASE("invalid supports") {
    const std::vector<SupportPoint> dup{{{0}, {1}, 0.5}, {{0}, {1}, 0.5}};
    CHECK_THROWS_AS(construct_sparse_crbm(dup, 10.0), ValidationError);
    const std::vector<SupportPoint> bad_sum{{{0}, {1}, 0.5}, {{0}, {0}, 0.4}};
    CHECK_THROWS_AS(construct_sparse_crbm(bad_sum, 10.0), ValidationError);
    CHECK_THROWS_AS(construct_sparse_crbm(std::vector<SupportPoint>{}, 10.0), ConfigError);
    const std::vector<SupportPoint> ok{{{0}, {1}, 1.0}};
    CHECK_THROWS_AS(construct_sparse_crbm(ok, 0.0), ConfigError);
  }
}

TEST_CASE("hidden-unit bounds") {
  CHECK(bound_embodied(63, 3) == 65);
  CHECK(bound_embodied(1, 0) == 0);
  CHECK(bound_embodied(6, 2) == 7);
  CHECK_THROWS_AS(bound_embodied(0, 3), ConfigError);
  CHECK(bound_nonembodied(2, 2) == 6);
  CHECK(bound_joint(2, 2) == 7);
  CHECK(bound_lower(2, 2) == 2);
  for (unsigned k = 1; k <= 10; ++k)
    for (unsigned n = 1; n <= 10; ++n) {
      CHECK(bound_lower(k, n) <= bound_nonembodied(k, n));
      CHECK(bound_nonembodied(k, n) <= bound_joint(k, n));
      const double exact = std::ldexp(1.0, static_cast<int>(k)) * (std::ldexp(1.0, static_cast<int>(n)) - 1.0) / 2.0;
      CHECK(static_cast<double>(bound_nonembodied(k, n)) == std::ceil(exact));
    }
  CHECK_THROWS_AS(bound_nonembodied(48, 48), CapacityError);
  CHECK(log2_bound_nonembodied(48, 48) > 90.0);
  CHECK(log2_bound_nonembodied(2, 2) == doctest::Approx(std::log2(6.0)));
}

TEST_CASE("binary coding of [-1, 1]") {
  BinaryEncoder enc({4, 1});
  CHECK(enc.encode(std::vector<double>{-1.0}) == Bits{0, 0, 0, 0});
  CHECK(enc.encode(std::vector<double>{1.0}) == Bits{1, 1, 1, 1});
  CHECK(enc.encode(std::vector<double>{0.0}) == Bits{1, 0, 0, 0});
  CHECK(enc.decode(Bits{1, 0, 0, 0}).front() == doctest::Approx(0.0625));
  CHECK(enc.clamped() == 0);
  CHECK(enc.encode(std::vector<double>{1.7}) == Bits{1, 1, 1, 1});
  CHECK(enc.encode(std::vector<double>{-3.0}) == Bits{0, 0, 0, 0});
  CHECK(enc.clamped() == 2);
  BinaryEncoder two({3, 2});
  const Bits b = two.encode(std::vector<double>{-0.5, 0.9});
  CHECK(b.size() == 6);
  const auto back = two.decode(b);
  CHECK(std::abs(back[0] + 0.5) <= 0.125);
  CHECK(std::abs(back[1] - 0.9) <= 0.125);
  CHECK(bits_to_index(index_to_bits(37, 6)) == 37);
  CHECK(bits_for(1) == 1);
  CHECK(bits_for(6) == 3);
  CHECK(bits_for(8) == 3);
  CHECK(bits_for(9) == 4);
}

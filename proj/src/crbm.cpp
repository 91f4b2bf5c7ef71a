#include "embodied/crbm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "embodied/error.hpp"

namespace embodied {

namespace {

double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }
double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

Vector to_vector(std::span<const std::uint8_t> bits) {
  Vector v(static_cast<Eigen::Index>(bits.size()));
  for (std::size_t i = 0; i < bits.size(); ++i) v(static_cast<Eigen::Index>(i)) = bits[i] ? 1.0 : 0.0;
  return v;
}

void check_input(const CrbmParams& p, std::span<const std::uint8_t> y) {
  if (y.size() != p.k) throw ConfigError("CRBM: input has " + std::to_string(y.size()) + " bits, expected " + std::to_string(p.k));
}

Vector output_bits(std::size_t index, std::size_t n) {
  Vector x(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i)) = static_cast<double>(index >> (n - 1 - i) & 1U);
  return x;
}

double log_unnormalised(const CrbmParams& p, const Vector& hidden_input, std::size_t index) {
  const Vector x = output_bits(index, p.n);
  double e = p.b.dot(x);
  if (p.m > 0) {
    const Vector act = hidden_input + p.W * x;
    for (Eigen::Index j = 0; j < act.size(); ++j) e += softplus(act(j));
  }
  return e;
}

std::vector<double> normalise_log(std::vector<double> logs) {
  const double mx = *std::max_element(logs.begin(), logs.end());
  double z = 0.0;
  for (double& v : logs) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : logs) v /= z;
  return logs;
}

Vector hidden_input(const CrbmParams& p, std::span<const std::uint8_t> y) {
  if (p.m == 0) return Vector(0);
  return p.c + p.V * to_vector(y);
}

void check_exact(const CrbmParams& p, std::span<const std::uint8_t> y) {
  p.check();
  check_input(p, y);
  if (p.n > kMaxExactOutputs) throw CapacityError("exact_conditional: too many output units to enumerate");
}

}  // namespace

CrbmParams CrbmParams::zeros(std::size_t k, std::size_t n, std::size_t m) {
  if (n == 0) throw ConfigError("CRBM needs at least one output unit");
  CrbmParams p;
  p.k = k;
  p.n = n;
  p.m = m;
  p.V = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
  p.W = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  p.b = Vector::Zero(static_cast<Eigen::Index>(n));
  p.c = Vector::Zero(static_cast<Eigen::Index>(m));
  return p;
}

CrbmParams CrbmParams::random(std::size_t k, std::size_t n, std::size_t m, double sd, Rng& rng) {
  CrbmParams p = zeros(k, n, m);
  for (Eigen::Index i = 0; i < p.V.size(); ++i) p.V.data()[i] = rng.normal(0.0, sd);
  for (Eigen::Index i = 0; i < p.W.size(); ++i) p.W.data()[i] = rng.normal(0.0, sd);
  return p;
}

bool CrbmParams::finite() const {
  return V.allFinite() && W.allFinite() && b.allFinite() && c.allFinite();
}

void CrbmParams::check() const {
  const auto mi = static_cast<Eigen::Index>(m);
  if (n == 0) throw ConfigError("CRBM needs at least one output unit");
  if (V.rows() != mi || V.cols() != static_cast<Eigen::Index>(k) || W.rows() != mi ||
      W.cols() != static_cast<Eigen::Index>(n) || b.size() != static_cast<Eigen::Index>(n) ||
      c.size() != mi) {
    throw ConfigError("CRBM parameter blocks do not match (k, n, m)");
  }
}

json to_json(const CrbmParams& p) {
  return json{{"k", p.k}, {"n", p.n}, {"m", p.m}, {"V", matrix_to_json(p.V)},
              {"W", matrix_to_json(p.W)}, {"b", vector_to_json(p.b)}, {"c", vector_to_json(p.c)}};
}

CrbmParams crbm_from_json(const json& j) {
  try {
    CrbmParams p = CrbmParams::zeros(j.at("k").get<std::size_t>(), j.at("n").get<std::size_t>(),
                                     j.at("m").get<std::size_t>());
    if (p.m > 0) {
      if (p.k > 0) p.V = matrix_from_json(j.at("V"), "crbm.V");
      p.W = matrix_from_json(j.at("W"), "crbm.W");
    }
    p.b = vector_from_json(j.at("b"), "crbm.b");
    p.c = vector_from_json(j.at("c"), "crbm.c");
    p.check();
    if (!p.finite()) throw ParseError("crbm: non-finite parameter");
    return p;
  } catch (const json::exception& e) {
    throw ParseError(std::string("crbm: ") + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(std::string("crbm: ") + e.what());
  }
}

std::vector<double> exact_conditional(const CrbmParams& p, std::span<const std::uint8_t> y) {
  check_exact(p, y);
  const Vector h = hidden_input(p, y);
  const auto count = static_cast<long long>(std::size_t{1} << p.n);
  std::vector<double> logs(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < count; ++i) {
    logs[static_cast<std::size_t>(i)] = log_unnormalised(p, h, static_cast<std::size_t>(i));
  }
  return normalise_log(std::move(logs));
}

std::vector<double> exact_conditional_serial(const CrbmParams& p, std::span<const std::uint8_t> y) {
  check_exact(p, y);
  const Vector h = hidden_input(p, y);
  std::vector<double> logs(std::size_t{1} << p.n);
  for (std::size_t i = 0; i < logs.size(); ++i) logs[i] = log_unnormalised(p, h, i);
  return normalise_log(std::move(logs));
}

namespace {

void sample_hidden(const CrbmParams& p, const Vector& h, const Vector& x, Vector& z, Rng& rng) {
  const Vector act = h + p.W * x;
  for (Eigen::Index j = 0; j < act.size(); ++j) z(j) = rng.bernoulli(logistic(act(j))) ? 1.0 : 0.0;
}

void sample_visible(const CrbmParams& p, const Vector& z, Vector& x, Rng& rng) {
  const Vector act = p.b + p.W.transpose() * z;
  for (Eigen::Index i = 0; i < act.size(); ++i) x(i) = rng.bernoulli(logistic(act(i))) ? 1.0 : 0.0;
}

}  // namespace

Bits gibbs_sample(const CrbmParams& p, std::span<const std::uint8_t> y, std::size_t sweeps, Rng& rng) {
  p.check();
  check_input(p, y);
  if (sweeps == 0) throw ConfigError("gibbs_sample: sweeps must be >= 1");
  const Vector h = hidden_input(p, y);
  Vector x(static_cast<Eigen::Index>(p.n));
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.bernoulli(0.5) ? 1.0 : 0.0;
  Vector z(static_cast<Eigen::Index>(p.m));
  for (std::size_t s = 0; s < sweeps; ++s) {
    sample_hidden(p, h, x, z, rng);
    sample_visible(p, z, x, rng);
  }
  Bits out(p.n);
  for (std::size_t i = 0; i < p.n; ++i) out[i] = x(static_cast<Eigen::Index>(i)) > 0.5 ? 1 : 0;
  return out;
}

Bits gibbs_sample(const CrbmParams& p, std::span<const std::uint8_t> y, std::size_t sweeps,
                  std::uint64_t seed) {
  Rng rng(seed);
  return gibbs_sample(p, y, sweeps, rng);
}

void TrainConfig::check() const {
  if (batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
  if (cd_steps == 0) throw ConfigError("train: cd_steps must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train: momentum must lie in [0, 1)");
  if (!(weight_cost >= 0.0)) throw ConfigError("train: weight_cost must be non-negative");
  if (!(input_noise_sd >= 0.0)) throw ConfigError("train: input_noise_sd must be non-negative");
}

json to_json(const TrainConfig& cfg) {
  return json{{"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size},
              {"learning_rate", cfg.learning_rate},
              {"momentum", cfg.momentum},
              {"weight_cost", cfg.weight_cost},
              {"cd_steps", cfg.cd_steps},
              {"input_noise_sd", cfg.input_noise_sd},
              {"seed", cfg.seed}};
}

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("train config: expected an object");
  TrainConfig cfg;
  try {
    if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("learning_rate")) cfg.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("momentum")) cfg.momentum = j.at("momentum").get<double>();
    if (j.contains("weight_cost")) cfg.weight_cost = j.at("weight_cost").get<double>();
    if (j.contains("cd_steps")) cfg.cd_steps = j.at("cd_steps").get<std::size_t>();
    if (j.contains("input_noise_sd")) cfg.input_noise_sd = j.at("input_noise_sd").get<double>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("train config: ") + e.what());
  }
  return cfg;
}

namespace {

struct Gradient {
  Matrix V, W;
  Vector b, c;

  explicit Gradient(const CrbmParams& p)
      : V(Matrix::Zero(p.V.rows(), p.V.cols())),
        W(Matrix::Zero(p.W.rows(), p.W.cols())),
        b(Vector::Zero(p.b.size())),
        c(Vector::Zero(p.c.size())) {}
};

// Drives CD-k over the data; `sample(i, rng, y, x)` fills one training pair.
template <typename Fetch>
CrbmParams cd_loop(CrbmParams p, std::size_t count, const TrainConfig& cfg, Fetch&& fetch) {
  cfg.check();
  p.check();
  if (count == 0) throw ConfigError("cd_train: empty data set");
  Rng rng = Rng::stream(cfg.seed, {0x63640000});
  Gradient vel(p);
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Vector y(static_cast<Eigen::Index>(p.k)), x(static_cast<Eigen::Index>(p.n));
  Vector xt(static_cast<Eigen::Index>(p.n)), z(static_cast<Eigen::Index>(p.m));

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t start = 0; start < count; start += cfg.batch_size) {
      const std::size_t stop = std::min(count, start + cfg.batch_size);
      Gradient g(p);
      for (std::size_t idx = start; idx < stop; ++idx) {
        fetch(order[idx], rng, y, x);
        const Vector h = p.m > 0 ? Vector(p.c + p.V * y) : Vector(0);
        Vector pz = h + p.W * x;
        for (Eigen::Index j = 0; j < pz.size(); ++j) pz(j) = logistic(pz(j));
        for (Eigen::Index j = 0; j < pz.size(); ++j) z(j) = rng.bernoulli(pz(j)) ? 1.0 : 0.0;
        xt = x;
        Vector pzt = pz;
        for (std::size_t step = 0; step < cfg.cd_steps; ++step) {
          sample_visible(p, z, xt, rng);
          pzt = h + p.W * xt;
          for (Eigen::Index j = 0; j < pzt.size(); ++j) pzt(j) = logistic(pzt(j));
          if (step + 1 < cfg.cd_steps) {
            for (Eigen::Index j = 0; j < pzt.size(); ++j) z(j) = rng.bernoulli(pzt(j)) ? 1.0 : 0.0;
          }
        }
        g.W += pz * x.transpose() - pzt * xt.transpose();
        g.V += (pz - pzt) * y.transpose();
        g.b += x - xt;
        g.c += pz - pzt;
      }
      const double scale = 1.0 / static_cast<double>(stop - start);
      vel.W = cfg.momentum * vel.W + cfg.learning_rate * (scale * g.W - cfg.weight_cost * p.W);
      vel.V = cfg.momentum * vel.V + cfg.learning_rate * (scale * g.V - cfg.weight_cost * p.V);
      vel.b = cfg.momentum * vel.b + cfg.learning_rate * scale * g.b;
      vel.c = cfg.momentum * vel.c + cfg.learning_rate * scale * g.c;
      p.W += vel.W;
      p.V += vel.V;
      p.b += vel.b;
      p.c += vel.c;
    }
  }
  return p;
}

}  // namespace

CrbmParams cd_train(CrbmParams params, std::span<const TrainingPair> data, const TrainConfig& cfg) {
  for (const auto& d : data) {
    if (d.y.size() != params.k || d.x.size() != params.n) {
      throw ConfigError("cd_train: training pair does not match the CRBM dimensions");
    }
  }
  return cd_loop(std::move(params), data.size(), cfg,
                 [&](std::size_t i, Rng&, Vector& y, Vector& x) {
                   y = to_vector(data[i].y);
                   x = to_vector(data[i].x);
                 });
}

CrbmParams cd_train_continuous(CrbmParams params, std::span<const ContinuousPair> data,
                               const BinaryCode& input_code, const TrainConfig& cfg) {
  if (input_code.total_bits() != params.k) throw ConfigError("cd_train: input code width differs from k");
  for (const auto& d : data) {
    if (d.y.size() != input_code.channels || d.x.size() != params.n) {
      throw ConfigError("cd_train: training pair does not match the CRBM dimensions");
    }
  }
  BinaryEncoder encoder(input_code);
  std::vector<double> noisy(input_code.channels);
  return cd_loop(std::move(params), data.size(), cfg,
                 [&](std::size_t i, Rng& rng, Vector& y, Vector& x) {
                   for (std::size_t c = 0; c < noisy.size(); ++c) {
                     noisy[c] = data[i].y[c] + (cfg.input_noise_sd > 0.0 ? rng.normal(0.0, cfg.input_noise_sd) : 0.0);
                   }
                   y = to_vector(encoder.encode(noisy));
                   x = to_vector(data[i].x);
                 });
}

double conditional_log_likelihood(const CrbmParams& p, std::span<const TrainingPair> data) {
  if (data.empty()) throw ConfigError("conditional_log_likelihood: empty data set");
  std::map<Bits, std::vector<double>> cache;
  double total = 0.0;
  for (const auto& d : data) {
    auto it = cache.find(d.y);
    if (it == cache.end()) it = cache.emplace(d.y, exact_conditional_serial(p, d.y)).first;
    total += std::log(it->second[bits_to_index(d.x)]);
  }
  return total / static_cast<double>(data.size());
}

namespace {

void check_support(std::span<const SupportPoint> support) {
  if (support.empty()) throw ConfigError("construct_sparse_crbm: empty support");
  const std::size_t k = support.front().y.size(), n = support.front().x.size();
  if (n == 0) throw ConfigError("construct_sparse_crbm: outputs need at least one bit");
  std::map<Bits, double> row_mass;
  std::map<std::pair<Bits, Bits>, int> seen;
  for (const auto& pt : support) {
    if (pt.y.size() != k || pt.x.size() != n) throw ConfigError("construct_sparse_crbm: inconsistent bit widths");
    if (!(pt.prob > 0.0 && pt.prob <= 1.0)) throw ValidationError("construct_sparse_crbm: probability outside (0, 1]");
    if (!seen.emplace(std::make_pair(pt.y, pt.x), 0).second) {
      throw ValidationError("construct_sparse_crbm: duplicate support pattern");
    }
    row_mass[pt.y] += pt.prob;
  }
  for (const auto& [y, mass] : row_mass) {
    if (std::abs(mass - 1.0) > 1e-9) throw ValidationError("construct_sparse_crbm: conditional row does not sum to 1");
  }
}

double ones(const Bits& b) { return static_cast<double>(std::count(b.begin(), b.end(), 1)); }

}  // namespace

CrbmParams construct_sparse_crbm(std::span<const SupportPoint> support, double sharpness) {
  check_support(support);
  if (!(sharpness > 0.0) || !std::isfinite(sharpness)) throw ConfigError("construct_sparse_crbm: sharpness must be positive");
  const std::size_t k = support.front().y.size(), n = support.front().x.size();
  const std::size_t m = support.size() - 1;

  std::size_t base = 0;
  for (std::size_t i = 1; i < support.size(); ++i) {
    if (support[i].prob > support[base].prob) base = i;
  }
  const SupportPoint& p0 = support[base];
  const double lam = sharpness;
  // The output biases alone select the base pattern; each hidden unit lifts
  // its own pattern by a margin that grows linearly in the sharpness.
  const double bias_scale = m == 0 ? lam : lam / static_cast<double>(n + 2);
  const double gap = lam / static_cast<double>(n + 2);

  CrbmParams p = CrbmParams::zeros(k, n, m);
  const Vector x0 = to_vector(p0.x);
  p.b = bias_scale * (2.0 * x0.array() - 1.0).matrix();

  Eigen::Index j = 0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (i == base) continue;
    const SupportPoint& pt = support[i];
    const Vector xi = to_vector(pt.x), yi = to_vector(pt.y);
    if (k > 0) p.V.row(j) = lam * (2.0 * yi.array() - 1.0).matrix().transpose();
    p.W.row(j) = lam * (2.0 * xi.array() - 1.0).matrix().transpose();
    const double lift = p.b.dot(x0 - xi);
    const double delta = pt.y == p0.y ? std::log(pt.prob / p0.prob) + lift - lam / 2.0
                                      : std::log(pt.prob) + lift + gap - lam / 2.0;
    p.c(j) = -lam * (ones(pt.y) + ones(pt.x) - 0.5) + delta;
    ++j;
  }
  return p;
}

double conditional_kl(const CrbmParams& p, std::span<const SupportPoint> support) {
  check_support(support);
  std::map<Bits, std::vector<const SupportPoint*>> rows;
  for (const auto& pt : support) rows[pt.y].push_back(&pt);
  double kl = 0.0;
  for (const auto& [y, pts] : rows) {
    const auto model = exact_conditional_serial(p, y);
    for (const SupportPoint* pt : pts) {
      const double q = model[bits_to_index(pt->x)];
      kl += q > 0.0 ? pt->prob * std::log(pt->prob / q) : std::numeric_limits<double>::infinity();
    }
  }
  return std::max(kl, 0.0);
}

}  // namespace embodied

#include "embodied/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>

#include "embodied/crbm_bounds.hpp"
#include "embodied/error.hpp"

namespace embodied {

TrainConfig ExperimentConfig::desk_train_config() {
  TrainConfig t;
  t.epochs = 100;
  return t;
}

ExperimentConfig ExperimentConfig::paper_scale() {
  ExperimentConfig cfg;
  cfg.support_steps = 100000;
  cfg.train_steps = 10000;
  cfg.m_min = 1;
  cfg.m_max = 100;
  cfg.restarts = 100;
  cfg.evals_per_model = 10;
  cfg.gibbs_eval = true;
  cfg.train = TrainConfig{};
  return cfg;
}

void ExperimentConfig::check() const {
  walker.check();
  if (support_steps < 2) throw ConfigError("config: support_steps must be >= 2");
  if (train_steps < 1) throw ConfigError("config: train_steps must be >= 1");
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) throw ConfigError("config: keep_fraction must lie in (0, 1]");
  if (!(exploration_epsilon >= 0.0 && exploration_epsilon <= 1.0)) {
    throw ConfigError("config: exploration_epsilon must lie in [0, 1]");
  }
  if (!(gamma_tol > 0.0)) throw ConfigError("config: gamma_tol must be positive");
  if (m_max != 0 && m_max < m_min) throw ConfigError("config: m_max below m_min");
  if (restarts < 1 || evals_per_model < 1 || eval_steps < 1) {
    throw ConfigError("config: restarts, evals_per_model and eval_steps must be >= 1");
  }
  if (gibbs_eval && gibbs_sweeps < 1) throw ConfigError("config: gibbs_sweeps must be >= 1");
  if (!(init_weight_sd >= 0.0)) throw ConfigError("config: init_weight_sd must be non-negative");
  if (!(construct_sharpness > 0.0)) throw ConfigError("config: construct_sharpness must be positive");
  train.check();
}

json to_json(const ExperimentConfig& cfg) {
  return json{{"world", json{{"walker", to_json(cfg.walker)}}},
              {"support_steps", cfg.support_steps},
              {"train_steps", cfg.train_steps},
              {"keep_fraction", cfg.keep_fraction},
              {"exploration_epsilon", cfg.exploration_epsilon},
              {"gamma_tol", cfg.gamma_tol},
              {"m_min", cfg.m_min},
              {"m_max", cfg.m_max},
              {"restarts", cfg.restarts},
              {"evals_per_model", cfg.evals_per_model},
              {"eval_steps", cfg.eval_steps},
              {"gibbs_sweeps", cfg.gibbs_sweeps},
              {"gibbs_eval", cfg.gibbs_eval},
              {"init_weight_sd", cfg.init_weight_sd},
              {"construct_sharpness", cfg.construct_sharpness},
              {"train", to_json(cfg.train)},
              {"seed", cfg.seed}};
}

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

CyclicWalkerConfig walker_from_sidecar(const std::filesystem::path& world_file) {
  const auto side = sidecar_path(world_file);
  if (!std::filesystem::exists(side)) {
    throw ConfigError(world_file.string() + ": no sidecar " + side.string() +
                      "; experiments need a walker world generated by gen-world");
  }
  const json j = read_json_file(side);
  if (!j.contains("walker")) throw ParseError(side.string() + ": missing 'walker'");
  CyclicWalkerConfig walker = walker_config_from_json(j.at("walker"));
  const SmlSystem sys = load_system(world_file);
  const WalkerSystem rebuilt = make_cyclic_walker(walker);
  if (sys.world_card() != rebuilt.sml.world_card() || sys.sensor_card() != rebuilt.sml.sensor_card() ||
      sys.actuator_card() != rebuilt.sml.actuator_card()) {
    throw ValidationError(world_file.string() + ": system does not match its sidecar walker");
  }
  return walker;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("experiment config: expected an object");
  ExperimentConfig cfg;
  try {
    if (j.contains("world")) {
      const json& w = j.at("world");
      if (w.contains("walker")) {
        cfg.walker = walker_config_from_json(w.at("walker"));
      } else if (w.contains("system_file")) {
        cfg.walker = walker_from_sidecar(w.at("system_file").get<std::string>());
      } else {
        throw ParseError("experiment config: world needs 'walker' or 'system_file'");
      }
    }
    read_field(j, "support_steps", cfg.support_steps);
    read_field(j, "train_steps", cfg.train_steps);
    read_field(j, "keep_fraction", cfg.keep_fraction);
    read_field(j, "exploration_epsilon", cfg.exploration_epsilon);
    read_field(j, "gamma_tol", cfg.gamma_tol);
    read_field(j, "m_min", cfg.m_min);
    read_field(j, "m_max", cfg.m_max);
    read_field(j, "restarts", cfg.restarts);
    read_field(j, "evals_per_model", cfg.evals_per_model);
    read_field(j, "eval_steps", cfg.eval_steps);
    read_field(j, "gibbs_sweeps", cfg.gibbs_sweeps);
    read_field(j, "gibbs_eval", cfg.gibbs_eval);
    read_field(j, "init_weight_sd", cfg.init_weight_sd);
    read_field(j, "construct_sharpness", cfg.construct_sharpness);
    read_field(j, "seed", cfg.seed);
    if (j.contains("train")) cfg.train = train_config_from_json(j.at("train"));
  } catch (const json::exception& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
  cfg.check();
  return cfg;
}

std::filesystem::path sidecar_path(const std::filesystem::path& world_file) {
  auto p = world_file;
  p.replace_extension(".sidecar.json");
  return p;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  if (j.is_object() && j.contains("beta") && j.contains("alpha")) {
    ExperimentConfig cfg;
    cfg.walker = walker_from_sidecar(path);
    cfg.check();
    return cfg;
  }
  try {
    return experiment_config_from_json(j);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

PolicyCoding PolicyCoding::for_system(const SmlSystem& sys) {
  return PolicyCoding{bits_for(sys.sensor_card()), bits_for(sys.actuator_card()), sys.actuator_card()};
}

SupportStage run_support_stage(const WalkerSystem& world, const ExperimentConfig& cfg) {
  const StochasticKernel explore = epsilon_greedy(world.scripted_policy, cfg.exploration_epsilon);
  SupportStage out{{}, {}, simulate(world.sml, explore, cfg.support_steps, derive_seed(cfg.seed, {1}))};
  out.histogram = sensor_histogram(out.exploration);
  out.support = estimate_support(out.histogram, cfg.keep_fraction);
  return out;
}

DimensionStage run_dimension_stage(const SupportStage& support, const ExperimentConfig& cfg) {
  EmpiricalKernel gamma = estimate_gamma(support.exploration, support.support);
  const std::size_t d = gamma_affine_rank(gamma, support.support, 0, cfg.gamma_tol);
  return DimensionStage{std::move(gamma), d, bound_embodied(support.support.size(), d)};
}

std::vector<TrainingPair> collect_training_data(const WalkerSystem& world, const ExperimentConfig& cfg) {
  const PolicyCoding code = PolicyCoding::for_system(world.sml);
  const Trajectory traj = simulate(world.sml, world.scripted_policy, cfg.train_steps, derive_seed(cfg.seed, {2}));
  std::vector<TrainingPair> data;
  data.reserve(traj.steps.size());
  for (const auto& st : traj.steps) {
    data.push_back({index_to_bits(st.s, code.sensor_bits), index_to_bits(st.a, code.action_bits)});
  }
  return data;
}

double scripted_baseline(const WalkerSystem& world, const ExperimentConfig& cfg) {
  const Trajectory traj = simulate(world.sml, world.scripted_policy, cfg.eval_steps, derive_seed(cfg.seed, {4}));
  return static_cast<double>(walker_performance(traj, world));
}

double evaluate_crbm(const WalkerSystem& world, const CrbmParams& params, const ExperimentConfig& cfg,
                     std::uint64_t seed) {
  const PolicyCoding code = PolicyCoding::for_system(world.sml);
  if (params.k != code.sensor_bits || params.n != code.action_bits) {
    throw ConfigError("evaluate_crbm: CRBM widths do not match the world's coding");
  }
  std::vector<Bits> inputs;
  std::vector<std::vector<double>> conditionals;
  for (std::size_t s = 0; s < world.sml.sensor_card(); ++s) {
    inputs.push_back(index_to_bits(s, code.sensor_bits));
    if (!cfg.gibbs_eval) conditionals.push_back(exact_conditional_serial(params, inputs.back()));
  }
  const ActionSampler sampler = [&](std::size_t s, Rng& rng) -> std::size_t {
    if (cfg.gibbs_eval) return code.action_of(bits_to_index(gibbs_sample(params, inputs[s], cfg.gibbs_sweeps, rng)));
    return code.action_of(rng.categorical(conditionals[s]));
  };
  const Trajectory traj = simulate_with(world.sml, sampler, cfg.eval_steps, seed);
  return static_cast<double>(walker_performance(traj, world));
}

CrbmParams construct_scripted_crbm(const WalkerSystem& world, const SupportSet& support, double sharpness) {
  const PolicyCoding code = PolicyCoding::for_system(world.sml);
  std::vector<SupportPoint> points;
  for (std::size_t s : support.sensor_indices) {
    for (std::size_t a = 0; a < world.sml.actuator_card(); ++a) {
      const double p = world.scripted_policy(s, a);
      if (p > 0.0) points.push_back({index_to_bits(s, code.sensor_bits), index_to_bits(a, code.action_bits), p});
    }
  }
  return construct_sparse_crbm(points, sharpness);
}

namespace {

struct CellResult {
  std::vector<double> distances;
  bool diverged = false;
};

CellResult run_cell(const WalkerSystem& world, const ExperimentConfig& cfg,
                    const std::vector<TrainingPair>& data, std::size_t m, std::size_t restart) {
  const PolicyCoding code = PolicyCoding::for_system(world.sml);
  const std::uint64_t cell_seed = derive_seed(cfg.seed, {3, m, restart});
  Rng init(derive_seed(cell_seed, {0}));
  CrbmParams params = CrbmParams::random(code.sensor_bits, code.action_bits, m, cfg.init_weight_sd, init);
  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cell_seed, {1});
  params = cd_train(std::move(params), data, tc);
  CellResult out;
  if (!params.finite()) {
    out.diverged = true;
    return out;
  }
  for (std::size_t e = 0; e < cfg.evals_per_model; ++e) {
    out.distances.push_back(evaluate_crbm(world, params, cfg, derive_seed(cell_seed, {2, e})));
  }
  return out;
}

ScanReport assemble(const WalkerSystem& world, const ExperimentConfig& cfg, std::size_t m_lo,
                    std::size_t m_hi, const std::vector<CellResult>& cells) {
  ScanReport rep;
  rep.baseline = scripted_baseline(world, cfg);
  for (std::size_t m = m_lo; m <= m_hi; ++m) {
    ScanRow row;
    row.m = m;
    std::vector<double> all;
    for (std::size_t r = 0; r < cfg.restarts; ++r) {
      const CellResult& c = cells[(m - m_lo) * cfg.restarts + r];
      if (c.diverged) ++row.diverged;
      all.insert(all.end(), c.distances.begin(), c.distances.end());
    }
    if (!all.empty()) {
      row.best = *std::max_element(all.begin(), all.end());
      double sum = 0.0;
      for (double v : all) sum += v;
      row.mean = sum / static_cast<double>(all.size());
      double var = 0.0;
      for (double v : all) var += (v - row.mean) * (v - row.mean);
      row.std = std::sqrt(var / static_cast<double>(all.size()));
    }
    rep.rows.push_back(row);
  }
  return rep;
}

void check_scan_args(const ExperimentConfig& cfg, const std::vector<TrainingPair>& data,
                     std::size_t m_lo, std::size_t m_hi) {
  cfg.check();
  if (m_hi < m_lo) throw ConfigError("scan: empty m range");
  if (data.empty()) throw ConfigError("scan: empty training data");
}

}  // namespace

ScanReport run_scan_stage(const WalkerSystem& world, const ExperimentConfig& cfg,
                          const std::vector<TrainingPair>& data, std::size_t m_lo, std::size_t m_hi) {
  check_scan_args(cfg, data, m_lo, m_hi);
  const std::size_t ncells = (m_hi - m_lo + 1) * cfg.restarts;
  std::vector<CellResult> cells(ncells);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < static_cast<long long>(ncells); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      cells[idx] = run_cell(world, cfg, data, m_lo + idx / cfg.restarts, idx % cfg.restarts);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return assemble(world, cfg, m_lo, m_hi, cells);
}

ScanReport run_scan_stage_serial(const WalkerSystem& world, const ExperimentConfig& cfg,
                                 const std::vector<TrainingPair>& data, std::size_t m_lo,
                                 std::size_t m_hi) {
  check_scan_args(cfg, data, m_lo, m_hi);
  std::vector<CellResult> cells;
  for (std::size_t m = m_lo; m <= m_hi; ++m) {
    for (std::size_t r = 0; r < cfg.restarts; ++r) cells.push_back(run_cell(world, cfg, data, m, r));
  }
  return assemble(world, cfg, m_lo, m_hi, cells);
}

std::string scan_csv(const ScanReport& report) {
  std::string out = "m,best,mean,std\n";
  char buf[128];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g\n", r.m, r.best, r.mean, r.std);
    out += buf;
  }
  return out;
}

json to_json(const ScanReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back(json{{"m", r.m}, {"best", r.best}, {"mean", r.mean}, {"std", r.std}, {"diverged", r.diverged}});
  }
  return json{{"support_size", report.support_size}, {"d", report.d},     {"m_bound", report.m_bound},
              {"baseline", report.baseline},         {"rows", std::move(rows)}};
}

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                std::optional<std::pair<std::size_t, std::size_t>> m_range) {
  cfg.check();
  const WalkerSystem world = make_cyclic_walker(cfg.walker);
  SupportStage support = run_support_stage(world, cfg);
  DimensionStage dim = run_dimension_stage(support, cfg);

  const CrbmParams constructed = construct_scripted_crbm(world, support.support, cfg.construct_sharpness);
  double total = 0.0;
  for (std::size_t e = 0; e < cfg.evals_per_model; ++e) {
    total += evaluate_crbm(world, constructed, cfg, derive_seed(cfg.seed, {5, e}));
  }
  const double constructed_distance = total / static_cast<double>(cfg.evals_per_model);

  std::size_t lo = cfg.m_min, hi = cfg.m_max != 0 ? cfg.m_max : std::max<std::size_t>(cfg.m_min, 2 * dim.m_bound);
  if (m_range) std::tie(lo, hi) = *m_range;
  const auto data = collect_training_data(world, cfg);
  ScanReport scan = run_scan_stage(world, cfg, data, lo, hi);
  scan.support_size = support.support.size();
  scan.d = dim.d;
  scan.m_bound = dim.m_bound;
  return ExperimentResult{std::move(support), std::move(dim), constructed_distance, std::move(scan)};
}

json experiment_report(const ExperimentConfig& cfg, const ExperimentResult& result) {
  return json{{"config", to_json(cfg)},
              {"histogram", result.support.histogram},
              {"support", json{{"sensor_indices", result.support.support.sensor_indices},
                               {"kept_mass", result.support.support.kept_mass},
                               {"size", result.support.support.size()}}},
              {"gamma_rank", result.dimension.d},
              {"m_bound", result.dimension.m_bound},
              {"scripted_baseline", result.scan.baseline},
              {"constructed", json{{"m", result.support.support.size() - 1},
                                   {"sharpness", cfg.construct_sharpness},
                                   {"mean_distance", result.constructed_distance}}},
              {"scan", to_json(result.scan)}};
}

}  // namespace embodied

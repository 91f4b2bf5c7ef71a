#include "embodied/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

#include "embodied/behavior_dim.hpp"
#include "embodied/crbm.hpp"
#include "embodied/crbm_bounds.hpp"
#include "embodied/error.hpp"
#include "embodied/json_io.hpp"
#include "embodied/pipeline.hpp"
#include "embodied/policy_models.hpp"
#include "embodied/worlds.hpp"

namespace embodied {

namespace {

struct Globals {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  std::string config;
};

std::map<std::string, std::string> parse_assignments(const std::string& spec) {
  std::map<std::string, std::string> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + item + "'");
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

std::size_t to_count(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long n = std::stoll(v, &pos);
    if (pos != v.size() || n < 0) throw std::invalid_argument(v);
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' needs a non-negative integer, got '" + v + "'");
  }
}

double to_real(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' needs a number, got '" + v + "'");
  }
}

std::pair<std::size_t, std::size_t> parse_range(const std::string& spec) {
  const auto dots = spec.find("..");
  if (dots == std::string::npos) {
    const std::size_t m = to_count(spec, "--m");
    return {m, m};
  }
  const std::size_t lo = to_count(spec.substr(0, dots), "--m"), hi = to_count(spec.substr(dots + 2), "--m");
  if (hi < lo) throw ConfigError("--m: empty range " + spec);
  return {lo, hi};
}

std::vector<std::size_t> parse_list(const std::string& spec) {
  std::vector<std::size_t> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_count(item, "--worlds"));
  return out;
}

std::string out_path(const Globals& g, const std::string& fallback) {
  return g.out.empty() ? fallback : g.out;
}

void emit(const Globals& g, const std::string& fallback, const json& report) {
  const std::string path = out_path(g, fallback);
  write_json_file(path, report, 2);
  std::cerr << "wrote " << path << "\n";
}

json support_to_json(const SupportSet& s) {
  return json{{"sensor_indices", s.sensor_indices}, {"kept_mass", s.kept_mass}};
}

SupportSet support_from_file(const std::string& path) {
  const json j = read_json_file(path);
  try {
    const json& node = j.contains("support") ? j.at("support") : j;
    SupportSet s;
    s.sensor_indices = node.at("sensor_indices").get<std::vector<std::size_t>>();
    std::sort(s.sensor_indices.begin(), s.sensor_indices.end());
    s.kept_mass = node.value("kept_mass", 1.0);
    return s;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

json report_json(const DimensionReport& r) {
  return json{{"d", r.d},
              {"rank_beta", r.rank_beta},
              {"rank_alpha", r.rank_alpha},
              {"upper_bound", r.upper_bound},
              {"tolerance", r.tolerance},
              {"singular_values", r.singular_values}};
}

Trajectory load_trajectory(const std::string& path) {
  const json j = read_json_file(path);
  try {
    return trajectory_from_json(j);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

StochasticKernel load_policy(const std::string& path) {
  const json j = read_json_file(path);
  try {
    return stochastic_kernel_from_json(j.contains("policy") ? j.at("policy") : j);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

ExperimentConfig experiment_from(const Globals& g, bool paper_scale) {
  if (g.config.empty()) throw ConfigError("--config is required");
  ExperimentConfig cfg = load_experiment_config(g.config);
  if (paper_scale) {
    ExperimentConfig full = ExperimentConfig::paper_scale();
    full.walker = cfg.walker;
    full.seed = cfg.seed;
    cfg = full;
  }
  if (g.seed_set) cfg.seed = g.seed;
  cfg.check();
  return cfg;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Embodied behaviour dimension and CRBM policy tools"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Base random seed")->each([&](const std::string&) { g.seed_set = true; });
  app.add_option("--out", g.out, "Output file for the JSON report");
  app.add_option("--config", g.config, "Experiment config or generated world file");
  std::function<void()> action;

  // gen-world
  auto* gen = app.add_subcommand("gen-world", "Generate a world and write it as an SML system file");
  std::string walker_spec, random_spec;
  gen->add_option("--walker", walker_spec, "Cyclic walker, e.g. P=6,A=3,L=100,slip=0");
  gen->add_option("--random", random_spec, "Random loop, e.g. W=5,S=4,A=3,rb=2,ra=2,decoupled=1");
  gen->callback([&] {
    action = [&] {
      if (walker_spec.empty() == random_spec.empty()) throw ConfigError("gen-world needs exactly one of --walker, --random");
      const std::string path = out_path(g, "world.json");
      if (!walker_spec.empty()) {
        CyclicWalkerConfig cfg;
        for (const auto& [k, v] : parse_assignments(walker_spec)) {
          if (k == "P") cfg.phases = to_count(v, k);
          else if (k == "A") cfg.actions = to_count(v, k);
          else if (k == "L") cfg.track_length = to_count(v, k);
          else if (k == "slip") cfg.slip_prob = to_real(v, k);
          else throw ConfigError("unknown walker field '" + k + "'");
        }
        cfg.seed = g.seed;
        const WalkerSystem w = make_cyclic_walker(cfg);
        save_system(path, w.sml);
        write_json_file(sidecar_path(path), json{{"walker", to_json(cfg)},
                                                 {"alpha_s", to_json(w.alpha_s)},
                                                 {"scripted_policy", to_json(w.scripted_policy)}});
        std::cout << "walker |W|=" << w.sml.world_card() << " |S|=" << w.sml.sensor_card()
                  << " |A|=" << w.sml.actuator_card() << "\n";
      } else {
        std::map<std::string, std::size_t> f{{"W", 4}, {"S", 4}, {"A", 3}, {"rb", 2}, {"ra", 2}, {"decoupled", 0}};
        for (const auto& [k, v] : parse_assignments(random_spec)) {
          if (!f.count(k)) throw ConfigError("unknown random-world field '" + k + "'");
          f[k] = to_count(v, k);
        }
        const RandomSml r = make_random_sml(f["W"], f["S"], f["A"], f["rb"], f["ra"], g.seed, f["decoupled"] != 0);
        save_system(path, r.sys);
        std::cout << "random loop rank(beta)=" << r.rank_beta << " rank(alpha)=" << r.rank_alpha << "\n";
      }
      std::cerr << "wrote " << path << "\n";
    };
  });

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate the closed loop");
  std::string system_file, policy_file;
  std::size_t steps = 0;
  sim->add_option("--system", system_file, "SML system file")->required();
  sim->add_option("--policy", policy_file, "Policy kernel file (default: scripted sidecar policy, else uniform)");
  sim->add_option("--steps", steps, "Number of steps")->required();
  sim->callback([&] {
    action = [&] {
      const SmlSystem sys = load_system(system_file);
      StochasticKernel pi = StochasticKernel::uniform(sys.sensor_card(), sys.actuator_card());
      if (!policy_file.empty()) {
        pi = load_policy(policy_file);
      } else if (std::filesystem::exists(sidecar_path(system_file))) {
        pi = stochastic_kernel_from_json(read_json_file(sidecar_path(system_file)).at("scripted_policy"));
      }
      const Trajectory t = simulate(sys, pi, steps, g.seed);
      emit(g, "trajectory.json", to_json(t));
      std::cout << "steps " << t.steps.size() << "\n";
    };
  });

  // dim
  auto* dim = app.add_subcommand("dim", "Embodied behaviour dimension");
  double tol = kExactRankTol;
  std::size_t a0 = 0;
  std::string worlds_spec;
  dim->add_option("--system", system_file, "SML system file")->required();
  dim->add_option("--tol", tol, "Relative rank tolerance");
  dim->add_option("--a0", a0, "Reference action");
  dim->add_option("--worlds", worlds_spec, "Restrict to these world states, e.g. 0,1,4");
  dim->callback([&] {
    action = [&] {
      const SmlSystem sys = load_system(system_file);
      if (!worlds_spec.empty()) {
        const auto worlds = parse_list(worlds_spec);
        const RestrictedDimension r = restricted_dimension(sys, worlds, tol, a0);
        emit(g, "dim.json", json{{"d", r.d}, {"support", support_to_json(r.support)},
                                 {"tolerance", tol}, {"singular_values", r.singular_values}});
        std::cout << r.d << "\n";
      } else {
        const DimensionReport r = embodied_dimension(sys, tol, a0);
        emit(g, "dim.json", report_json(r));
        std::cout << r.d << "\n";
      }
    };
  });

  // support
  auto* sup = app.add_subcommand("support", "Estimate the sensor support set");
  std::string traj_file;
  double keep = 0.8;
  sup->add_option("--trajectory", traj_file, "Trajectory file (default: run the exploration stage of --config)");
  sup->add_option("--keep", keep, "Fraction of observed mass to keep");
  sup->callback([&] {
    action = [&] {
      std::vector<std::uint64_t> hist;
      if (!traj_file.empty()) {
        hist = sensor_histogram(load_trajectory(traj_file));
      } else {
        ExperimentConfig cfg = experiment_from(g, false);
        hist = run_support_stage(make_cyclic_walker(cfg.walker), cfg).histogram;
      }
      const SupportSet s = estimate_support(hist, keep);
      emit(g, "support.json", json{{"support", support_to_json(s)}, {"histogram", hist}, {"keep_fraction", keep}});
      std::cout << s.size() << "\n";
    };
  });

  // gamma
  auto* gam = app.add_subcommand("gamma", "Estimate the internal world model and its affine rank");
  std::string support_file;
  double gamma_tol = kEmpiricalRankTol;
  gam->add_option("--trajectory", traj_file, "Trajectory file")->required();
  gam->add_option("--support", support_file, "Support file (default: prune with --keep)");
  gam->add_option("--keep", keep, "Fraction of observed mass to keep");
  gam->add_option("--tol", gamma_tol, "Absolute singular-value threshold");
  gam->add_option("--a0", a0, "Reference action");
  gam->callback([&] {
    action = [&] {
      const Trajectory t = load_trajectory(traj_file);
      const SupportSet s = support_file.empty() ? estimate_support(sensor_histogram(t), keep) : support_from_file(support_file);
      const EmpiricalKernel gamma = estimate_gamma(t, s);
      const std::size_t d = gamma_affine_rank(gamma, s, a0, gamma_tol);
      emit(g, "gamma.json", json{{"gamma", to_json(gamma)}, {"support", support_to_json(s)}, {"d", d},
                                 {"tolerance", gamma_tol}, {"m_bound", bound_embodied(s.size(), d)}});
      std::cout << d << "\n";
    };
  });

  // bound
  auto* bnd = app.add_subcommand("bound", "Hidden-unit bounds");
  long long support_card = -1, dim_val = -1, k_bits = -1, n_bits = -1;
  bnd->add_option("--support", support_card, "Support cardinality |S|");
  bnd->add_option("--dim", dim_val, "Restricted dimension d");
  bnd->add_option("--k", k_bits, "Input bits");
  bnd->add_option("--n", n_bits, "Output bits");
  bnd->callback([&] {
    action = [&] {
      json rep = json::object();
      const bool embodied_mode = support_card >= 0 || dim_val >= 0;
      const bool generic_mode = k_bits >= 0 || n_bits >= 0;
      if (!embodied_mode && !generic_mode) throw ConfigError("bound needs --support/--dim or --k/--n");
      if (embodied_mode) {
        if (support_card < 1) throw ConfigError("--support must be >= 1");
        if (dim_val < 0) throw ConfigError("--dim must be >= 0");
        const auto m = bound_embodied(static_cast<std::uint64_t>(support_card), static_cast<std::uint64_t>(dim_val));
        rep["embodied"] = m;
        std::cout << m << "\n";
      }
      if (generic_mode) {
        if (k_bits < 0 || n_bits < 1) throw ConfigError("--k must be >= 0 and --n >= 1");
        const auto k = static_cast<unsigned>(k_bits), n = static_cast<unsigned>(n_bits);
        rep["log2_nonembodied"] = log2_bound_nonembodied(k, n);
        if (k + n <= 62) {
          rep["nonembodied"] = bound_nonembodied(k, n);
          rep["joint"] = bound_joint(k, n);
          rep["lower"] = bound_lower(k, n);
          std::cout << "nonembodied " << bound_nonembodied(k, n) << "\njoint " << bound_joint(k, n)
                    << "\nlower " << bound_lower(k, n) << "\n";
        } else {
          std::printf("nonembodied 2^%.6f\n", log2_bound_nonembodied(k, n));
        }
      }
      if (!g.out.empty()) emit(g, "", rep);
    };
  });

  // fit-expfam
  auto* fit = app.add_subcommand("fit-expfam", "Fit the exponential family to a target behaviour");
  std::string target_file;
  double fit_tol = 1e-10;
  std::size_t max_iters = 200;
  fit->add_option("--system", system_file, "SML system file")->required();
  fit->add_option("--target", target_file, "Target policy file")->required();
  fit->add_option("--tol", fit_tol, "Moment residual tolerance");
  fit->add_option("--max-iters", max_iters, "Newton iteration limit");
  fit->callback([&] {
    action = [&] {
      const SmlSystem sys = load_system(system_file);
      const StochasticKernel target = load_policy(target_file);
      const EmbodimentMatrix E = embodiment_matrix(sys);
      const ExpFamFit f = fit_expfam(sys, E, target, fit_tol, max_iters);
      emit(g, "expfam.json", json{{"theta", vector_to_json(f.theta)}, {"E", matrix_to_json(E.E)},
                                  {"gradient_norm", f.gradient_norm}, {"behavior_gap", f.behavior_gap},
                                  {"iterations", f.iterations}, {"converged", f.converged},
                                  {"policy", to_json(expfam_policy(E, f.theta))}});
      std::cout << (f.converged ? "converged" : "not converged") << " gap " << f.behavior_gap << "\n";
    };
  });

  // sparse-rep
  auto* sparse = app.add_subcommand("sparse-rep", "Sparse policy with the same behaviour");
  sparse->add_option("--system", system_file, "SML system file")->required();
  sparse->add_option("--target", target_file, "Target policy file")->required();
  sparse->add_option("--support", support_file, "Support file (default: all sensor states)");
  sparse->add_option("--tol", tol, "Relative rank tolerance");
  sparse->callback([&] {
    action = [&] {
      const SmlSystem sys = load_system(system_file);
      const StochasticKernel target = load_policy(target_file);
      const SupportSet s = support_file.empty() ? full_support(sys.sensor_card()) : support_from_file(support_file);
      const SparseRepresentative r = sparse_representative(sys, target, s, tol);
      emit(g, "sparse.json", json{{"policy", to_json(r.policy)}, {"nonzeros", r.nonzeros}, {"budget", r.budget},
                                  {"restricted_dim", r.restricted_dim}, {"behavior_gap", r.behavior_gap}});
      std::cout << r.nonzeros << " nonzeros (budget " << r.budget << ")\n";
    };
  });

  // construct-crbm
  auto* cons = app.add_subcommand("construct-crbm", "CRBM realising a sparse policy");
  double sharpness = 100.0;
  cons->add_option("--policy", policy_file, "Policy kernel file")->required();
  cons->add_option("--support", support_file, "Support file (default: all sensor states)");
  cons->add_option("--lambda", sharpness, "Sharpness");
  cons->callback([&] {
    action = [&] {
      const StochasticKernel pi = load_policy(policy_file);
      const SupportSet s = support_file.empty() ? full_support(pi.domain()) : support_from_file(support_file);
      const std::size_t kb = bits_for(pi.domain()), nb = bits_for(pi.codomain());
      std::vector<SupportPoint> pts;
      for (std::size_t sidx : s.sensor_indices) {
        if (sidx >= pi.domain()) throw ConfigError("support index outside the policy");
        for (std::size_t a = 0; a < pi.codomain(); ++a) {
          if (pi(sidx, a) > 0.0) pts.push_back({index_to_bits(sidx, kb), index_to_bits(a, nb), pi(sidx, a)});
        }
      }
      const CrbmParams p = construct_sparse_crbm(pts, sharpness);
      const double kl = conditional_kl(p, pts);
      emit(g, "crbm.json", json{{"crbm", to_json(p)}, {"kl", kl}, {"sharpness", sharpness}});
      std::cout << "m " << p.m << " kl " << kl << "\n";
    };
  });

  // train-crbm
  auto* train = app.add_subcommand("train-crbm", "Train a CRBM on sensor/action pairs by CD-k");
  std::size_t m_hidden = 1;
  std::string train_file;
  long long epochs = -1;
  train->add_option("--data", traj_file, "Trajectory file whose (s, a) pairs form the data")->required();
  train->add_option("--m", m_hidden, "Hidden units");
  train->add_option("--train", train_file, "TrainConfig JSON");
  train->add_option("--epochs", epochs, "Override the epoch count");
  train->callback([&] {
    action = [&] {
      const Trajectory t = load_trajectory(traj_file);
      TrainConfig tc = train_file.empty() ? TrainConfig{} : train_config_from_json(read_json_file(train_file));
      if (epochs >= 0) tc.epochs = static_cast<std::size_t>(epochs);
      if (g.seed_set) tc.seed = g.seed;
      const std::size_t kb = bits_for(t.sensor_card), nb = bits_for(t.actuator_card);
      std::vector<TrainingPair> data;
      for (const auto& st : t.steps) data.push_back({index_to_bits(st.s, kb), index_to_bits(st.a, nb)});
      Rng init = Rng::stream(tc.seed, {7});
      const CrbmParams p = cd_train(CrbmParams::random(kb, nb, m_hidden, 0.01, init), data, tc);
      if (!p.finite()) throw NumericError("train-crbm: training diverged");
      const double ll = conditional_log_likelihood(p, data);
      emit(g, "crbm.json", json{{"crbm", to_json(p)}, {"train", to_json(tc)}, {"log_likelihood", ll}});
      std::cout << "log-likelihood " << ll << "\n";
    };
  });

  // scan / report
  auto* scan = app.add_subcommand("scan", "Trained-CRBM m-scan on a walker world");
  std::string m_spec;
  bool full_scale = false;
  scan->add_option("--m", m_spec, "Hidden-unit range, e.g. 1..12");
  scan->add_flag("--paper-scale", full_scale, "Use the original study's protocol sizes");
  scan->callback([&] {
    action = [&] {
      const ExperimentConfig cfg = experiment_from(g, full_scale);
      const WalkerSystem world = make_cyclic_walker(cfg.walker);
      const SupportStage s = run_support_stage(world, cfg);
      const DimensionStage d = run_dimension_stage(s, cfg);
      auto [lo, hi] = m_spec.empty() ? std::pair<std::size_t, std::size_t>{cfg.m_min, cfg.m_max ? cfg.m_max : 2 * d.m_bound}
                                     : parse_range(m_spec);
      ScanReport rep = run_scan_stage(world, cfg, collect_training_data(world, cfg), lo, hi);
      rep.support_size = s.support.size();
      rep.d = d.d;
      rep.m_bound = d.m_bound;
      const std::string path = out_path(g, "scan.json");
      auto csv = std::filesystem::path(path);
      csv.replace_extension(".csv");
      write_json_file(path, json{{"config", to_json(cfg)}, {"scan", to_json(rep)}}, 2);
      write_text_file(csv, scan_csv(rep));
      std::cerr << "wrote " << path << " and " << csv.string() << "\n";
      std::cout << scan_csv(rep);
    };
  });

  auto* report = app.add_subcommand("report", "Run the full experiment protocol");
  report->add_option("--m", m_spec, "Hidden-unit range, e.g. 1..12");
  report->add_flag("--paper-scale", full_scale, "Use the original study's protocol sizes");
  report->callback([&] {
    action = [&] {
      const ExperimentConfig cfg = experiment_from(g, full_scale);
      std::optional<std::pair<std::size_t, std::size_t>> range;
      if (!m_spec.empty()) range = parse_range(m_spec);
      const ExperimentResult r = run_experiment(cfg, range);
      const std::string path = out_path(g, "report.json");
      auto csv = std::filesystem::path(path);
      csv.replace_extension(".csv");
      write_json_file(path, experiment_report(cfg, r), 2);
      write_text_file(csv, scan_csv(r.scan));
      std::cerr << "wrote " << path << " and " << csv.string() << "\n";
      std::cout << "|S|=" << r.support.support.size() << " d=" << r.dimension.d << " m_bound=" << r.dimension.m_bound
                << " baseline=" << r.scan.baseline << " constructed=" << r.constructed_distance << "\n";
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (action) action();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "invalid data: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "invalid data: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace embodied

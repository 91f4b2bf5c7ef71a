#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "embodied/error.hpp"
#include "embodied/pipeline.hpp"

using namespace embodied;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.support_steps = 5000;
  cfg.train_steps = 300;
  cfg.restarts = 2;
  cfg.evals_per_model = 2;
  cfg.eval_steps = 60;
  cfg.train.epochs = 5;
  cfg.seed = 17;
  return cfg;
}

}  // namespace

TEST_CASE("walker support and dimension stages") {
  ExperimentConfig cfg = small_config();
  cfg.keep_fraction = 1.0;
  const WalkerSystem world = make_cyclic_walker(cfg.walker);
  const SupportStage s = run_support_stage(world, cfg);
  CHECK(s.support.size() == 6);
  CHECK(s.exploration.steps.size() == cfg.support_steps);
  const DimensionStage d = run_dimension_stage(s, cfg);
  CHECK(d.d == 6);
  CHECK(d.m_bound == 11);
}

TEST_CASE("a pruned support keeps the requested mass") {
  ExperimentConfig cfg = small_config();
  cfg.keep_fraction = 0.5;
  const WalkerSystem world = make_cyclic_walker(cfg.walker);
  const SupportStage s = run_support_stage(world, cfg);
  CHECK(s.support.kept_mass >= 0.5);
  CHECK(s.support.size() < 6);
  const DimensionStage d = run_dimension_stage(s, cfg);
  CHECK(d.d <= s.support.size());
  CHECK(d.m_bound == s.support.size() + d.d - 1);
}

TEST_CASE("a walker that ignores its actions has dimension zero") {
  ExperimentConfig cfg = small_config();
  cfg.keep_fraction = 1.0;
  cfg.walker.slip_prob = 0.0;
  const WalkerSystem world = make_cyclic_walker(cfg.walker);
  // Replace gamma by one whose rows do not depend on the action.
  SupportStage s = run_support_stage(world, cfg);
  for (auto& st : s.exploration.steps) st.a = 0;
  const DimensionStage d = run_dimension_stage(s, cfg);
  CHECK(d.d == 0);
  CHECK(d.m_bound == 5);
}

TEST_CASE("the constructed CRBM walks as far as the scripted gait") {
  ExperimentConfig cfg = small_config();
  cfg.keep_fraction = 1.0;
  cfg.eval_steps = 300;
  const WalkerSystem world = make_cyclic_walker(cfg.walker);
  const SupportStage s = run_support_stage(world, cfg);
  const CrbmParams p = construct_scripted_crbm(world, s.support, 100.0);
  CHECK(p.m == 5);
  const double baseline = scripted_baseline(world, cfg);
  CHECK(baseline == 50.0);
  for (std::uint64_t e = 0; e < 5; ++e) CHECK(evaluate_crbm(world, p, cfg, e) >= 0.99 * baseline);
}

TEST_CASE("training data follow the scripted gait") {
  const ExperimentConfig cfg = small_config();
  const WalkerSystem world = make_cyclic_walker(cfg.walker);
  const auto data = collect_training_data(world, cfg);
  CHECK(data.size() == cfg.train_steps);
  const PolicyCoding code = PolicyCoding::for_system(world.sml);
  CHECK(code.sensor_bits == 3);
  CHECK(code.action_bits == 2);
  for (const auto& d : data) {
    const auto s = bits_to_index(d.y);
    CHECK(bits_to_index(d.x) == s % 3);
  }
}

TEST_CASE("the m-scan is deterministic and independent of scheduling") {
  const ExperimentConfig cfg = small_config();
  const WalkerSystem world = make_cyclic_walker(cfg.walker);
  const auto data = collect_training_data(world, cfg);
  const ScanReport par = run_scan_stage(world, cfg, data, 1, 3);
  const ScanReport ser = run_scan_stage_serial(world, cfg, data, 1, 3);
  const ScanReport again = run_scan_stage(world, cfg, data, 1, 3);
  REQUIRE(par.rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(par.rows[i].m == i + 1);
    CHECK(par.rows[i].best == ser.rows[i].best);
    CHECK(par.rows[i].mean == ser.rows[i].mean);
    CHECK(par.rows[i].std == ser.rows[i].std);
    CHECK(par.rows[i].mean == again.rows[i].mean);
    CHECK(par.rows[i].best >= par.rows[i].mean);
  }
  const std::string csv = scan_csv(par);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "m,best,mean,std");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 3);
    ++rows;
  }
  CHECK(rows == 3);
  CHECK_THROWS_AS(run_scan_stage(world, cfg, data, 3, 1), ConfigError);
}

TEST_CASE("experiment configs round-trip through JSON") {
  ExperimentConfig cfg = small_config();
  cfg.walker.gait = {1, 2, 0, 1, 2, 0};
  cfg.gibbs_eval = true;
  const ExperimentConfig back = experiment_config_from_json(json::parse(dump_json(to_json(cfg))));
  CHECK(dump_json(to_json(back)) == dump_json(to_json(cfg)));
  const ExperimentConfig partial = experiment_config_from_json(json{{"restarts", 3}});
  CHECK(partial.restarts == 3);
  CHECK(partial.support_steps == ExperimentConfig{}.support_steps);
  CHECK_THROWS_AS(experiment_config_from_json(json{{"keep_fraction", 0.0}}), ConfigError);
  CHECK_THROWS_AS(experiment_config_from_json(json{{"restarts", "many"}}), ParseError);
  const ExperimentConfig full = ExperimentConfig::paper_scale();
  CHECK(full.support_steps == 100000);
  CHECK(full.train_steps == 10000);
  CHECK(full.restarts == 100);
  CHECK(full.train.epochs == 20000);
}

TEST_CASE("full experiment report") {
  ExperimentConfig cfg = small_config();
  cfg.keep_fraction = 1.0;
  const ExperimentResult r = run_experiment(cfg, std::pair<std::size_t, std::size_t>{1, 2});
  CHECK(r.scan.rows.size() == 2);
  CHECK(r.scan.support_size == 6);
  CHECK(r.scan.m_bound == 11);
  const json rep = experiment_report(cfg, r);
  CHECK(rep.contains("scan"));
  CHECK(dump_json(rep) == dump_json(experiment_report(cfg, run_experiment(cfg, std::pair<std::size_t, std::size_t>{1, 2}))));
}

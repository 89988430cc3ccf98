#include "papc/bench/matrix_io.hpp"
#include "papc/bench/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace papc::bench;

namespace {

int cmd_run(const std::string& config_path, const RunSettings& settings) {
  const auto cfg = ExperimentConfig::from(Config::load(config_path));
  const auto res = run_experiment(cfg, settings);
  if (res.exit_code == 2) {
    std::cerr << "rejected: " << res.message << '\n';
    return 2;
  }
  if (res.outcomes.empty()) {
    std::cerr << "failed: " << res.message << '\n';
    return res.exit_code;
  }
  for (const auto& o : res.outcomes) {
    std::cout << "seed " << o.seed << ": ";
    if (o.ok())
      std::cout << "|x - x*| = " << format_double(o.dist_x) << ", kkt = " << format_double(o.kkt.max()) << '\n';
    else
      std::cout << "FAILED (" << *o.failure << ")\n";
  }
  if (res.gap_slope) std::cout << "gap slope: " << format_double(*res.gap_slope) << '\n';
  std::cout << "wrote " << res.directory.string() << '\n';
  return res.exit_code;
}

int cmd_validate(const std::string& config_path) {
  const auto cfg = ExperimentConfig::from(Config::load(config_path));
  const auto inst = build_problem(cfg.raw);
  const auto sched = make_schedules(inst, cfg.schedule);
  const auto cert = validate_experiment(inst, cfg, sched);
  std::cout << "problem " << inst.name << " (" << papc::to_string(cfg.regime) << ", horizon " << cfg.horizon << ")\n";
  std::cout << "gamma0 = " << format_double(sched.gamma(0)) << ", beta = " << format_double(sched.beta)
            << ", tau cap = " << format_double(sched.tau_cap) << '\n';
  for (const auto& c : cert.conditions)
    std::cout << (c.passed ? "  ok    " : "  FAIL  ") << c.name << (c.passed ? "" : ": " + c.detail) << '\n';
  for (const auto& note : cert.notes) std::cout << "  note  " << note << '\n';
  std::cout << (cert.passed() ? "certified" : "rejected") << '\n';
  return cert.passed() ? 0 : 2;
}

int cmd_zoo() {
  for (const auto& e : zoo()) {
    std::cout << e.name << "\t" << e.summary;
    if (!e.parameters.empty()) {
      std::cout << " [";
      for (std::size_t i = 0; i < e.parameters.size(); ++i) std::cout << (i ? ", " : "") << e.parameters[i];
      std::cout << "]";
    }
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic primal-dual splitting experiments"};
  app.require_subcommand(1);

  std::string config_path;
  RunSettings settings;
  std::uint64_t seed_override = 0;
  std::string out_dir;

  auto* run = app.add_subcommand("run", "run an experiment and write its artifacts");
  run->add_option("--config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
  auto* seed_opt = run->add_option("--seed-override", seed_override, "run this single seed instead");
  run->add_option("--jobs", settings.jobs, "seeds run in parallel")->check(CLI::PositiveNumber);
  auto* out_opt = run->add_option("--out", out_dir, "output directory");
  run->add_flag("--force", settings.force, "run even if the hypotheses are rejected");

  auto* validate = app.add_subcommand("validate", "check the step-size and noise hypotheses");
  validate->add_option("--config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);

  auto* zoo_cmd = app.add_subcommand("zoo", "list registered problems");
  bool list = false;
  zoo_cmd->add_flag("--list", list, "list problems");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (*seed_opt) settings.seed_override = seed_override;
      if (*out_opt) settings.out = out_dir;
      return cmd_run(config_path, settings);
    }
    if (*validate) return cmd_validate(config_path);
    return cmd_zoo();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ZooError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

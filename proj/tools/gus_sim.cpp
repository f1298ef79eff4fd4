/**
 * @file gus_sim.cpp
 * @brief Command-line driver for the scheduling experiments.
 *
 *   gus_sim fig2|fig4|run [--config f] [--seed n] [--trials n] [--out f]
 *                         [--mode physical|paper-literal] [--gus-variant last|set]
 *   gus_sim fig3 [--config f] [--out f]
 *   gus_sim scenario [--config f] [--seed n] [--out f]
 */
#include "gus/gus.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> threads;
  std::string out;
  std::string trials_out;
  std::string mode;
  std::string gus_variant;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON experiment config (keys overlay the preset)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Base seed; trial t uses seed + t");
  cmd->add_option("--out", o.out, "Output CSV path");
}

void add_experiment(CLI::App* cmd, Options& o) {
  add_common(cmd, o);
  cmd->add_option("--trials", o.trials, "Monte-Carlo trials per cell")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", o.threads, "Worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  cmd->add_option("--mode", o.mode, "Sum-rate noise model")->check(CLI::IsMember({"physical", "paper-literal"}));
  cmd->add_option("--gus-variant", o.gus_variant, "GUS correlation reference")->check(CLI::IsMember({"last", "set"}));
  cmd->add_option("--trials-out", o.trials_out, "Also write per-trial rows (schedules, scores) to this CSV");
}

gus::ExperimentConfig resolve(gus::ExperimentConfig c, const Options& o) {
  if (!o.config.empty()) gus::load_config_file(o.config, c);
  if (o.seed) {
    c.base_seed = *o.seed;
    c.scenario.rng_seed = *o.seed;
  }
  if (o.trials) c.trials = *o.trials;
  if (o.threads) c.threads = *o.threads;
  if (!o.out.empty()) c.output = o.out;
  if (!o.mode.empty()) c.mode = gus::noise_model_from_string(o.mode);
  if (!o.gus_variant.empty()) c.gus_variant = gus::gus_variant_from_string(o.gus_variant);
  return c;
}

int run_monte_carlo(const std::string& name, const gus::ExperimentConfig& preset, const Options& o) {
  const gus::ExperimentConfig cfg = resolve(preset, o);
  const gus::ExperimentResult r = gus::run_experiment(cfg);
  gus::write_text(cfg.output, gus::cells_csv(r));
  gus::write_text(cfg.output + ".manifest", gus::manifest_text(cfg, name, &r));
  if (!o.trials_out.empty()) gus::write_text(o.trials_out, gus::trials_csv(r));

  std::size_t flagged = 0;
  for (const auto& t : r.trials) flagged += t.failed ? 1 : 0;
  if (flagged) std::cerr << "warning: " << flagged << " trial rows flagged and excluded from cell means\n";
  if (r.gus_excluded_rows) {
    std::cerr << "warning: " << r.gus_excluded_rows << " zero-norm V rows excluded from GUS candidacy\n";
  }
  if (r.localization_fallbacks) {
    std::cerr << "warning: " << r.localization_fallbacks
              << " perturbed clusters kept their true position (infeasible inversion)\n";
  }
  std::cout << "wrote " << r.cells.size() << " cells to " << cfg.output << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometry-based user scheduling simulator"};
  app.require_subcommand(1);

  Options fig2_opts, fig4_opts, run_opts, fig3_opts, scen_opts;
  auto* fig2 = app.add_subcommand("fig2", "Sum-rate vs. total power for GUS, GWC and RANDOM");
  add_experiment(fig2, fig2_opts);
  auto* fig4 = app.add_subcommand("fig4", "Sum-rate vs. localization error scale Omega");
  add_experiment(fig4, fig4_opts);
  auto* run = app.add_subcommand("run", "Generic experiment driven entirely by --config");
  add_experiment(run, run_opts);
  auto* fig3 = app.add_subcommand("fig3", "Channel-estimation load vs. antenna count");
  add_common(fig3, fig3_opts);
  auto* scen = app.add_subcommand("scenario", "Draw one scenario and write it as JSON");
  add_common(scen, scen_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fig2) return run_monte_carlo("fig2", gus::figure2_defaults(), fig2_opts);
    if (*fig4) return run_monte_carlo("fig4", gus::figure4_defaults(), fig4_opts);
    if (*run) return run_monte_carlo("run", gus::ExperimentConfig{}, run_opts);
    if (*fig3) {
      const gus::ExperimentConfig cfg = resolve(gus::figure3_defaults(), fig3_opts);
      const auto rows = gus::figure3_load(cfg.load_sweep);
      gus::write_text(cfg.output, gus::load_csv(rows));
      gus::write_text(cfg.output + ".manifest", gus::manifest_text(cfg, "fig3"));
      std::cout << "wrote " << rows.size() << " rows to " << cfg.output << '\n';
      return 0;
    }
    if (*scen) {
      gus::ExperimentConfig cfg = resolve(gus::ExperimentConfig{}, scen_opts);
      if (scen_opts.out.empty()) cfg.output = "scenario.json";
      gus::save_scenario(gus::generate_scenario(cfg.scenario), cfg.output);
      std::cout << "wrote scenario to " << cfg.output << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

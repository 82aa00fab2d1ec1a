#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "smm/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Small Math Model: counting/addition development simulator"};
  app.require_subcommand(1);

  smm::TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "run one training experiment");
  train_cmd->add_option("--config", train.config_path, "run config JSON (defaults when omitted)");
  train_cmd->add_option("--out", train.out_dir, "output directory (overrides config)");
  std::uint64_t train_seed = 0;
  auto* train_seed_opt = train_cmd->add_option("--seed", train_seed, "seed override");
  train_cmd->add_flag("--quiet", train.quiet, "suppress the summary printout");

  smm::SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "run an onset x seed grid of experiments");
  sweep_cmd->add_option("--spec", sweep.spec_path, "sweep spec JSON (defaults when omitted)");
  sweep_cmd->add_option("--out", sweep.out_dir, "output root (overrides spec)");
  sweep_cmd->add_flag("--quiet", sweep.quiet, "suppress progress output");

  std::string plot_dir, plot_figure = "all";
  bool plot_quiet = false;
  auto* plot_cmd = app.add_subcommand("plot", "render figures from logged artifacts");
  plot_cmd->add_option("dir", plot_dir, "run or sweep directory")->required();
  plot_cmd->add_option("figure", plot_figure, "fig1a, fig1b, fig2 or all");
  plot_cmd->add_flag("--quiet", plot_quiet, "suppress output paths");

  std::string probe_checkpoint, probe_problem;
  auto* probe_cmd = app.add_subcommand("probe", "print a checkpoint's answer distribution");
  probe_cmd->add_option("checkpoint", probe_checkpoint, "checkpoint.json path")->required();
  probe_cmd->add_option("problem", probe_problem, "problem, e.g. 3+4 or 3>4")->required();

  std::uint64_t grad_seed = 1;
  long long grad_trials = 100;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of the gradients");
  grad_cmd->add_option("--seed", grad_seed, "RNG seed");
  grad_cmd->add_option("--trials", grad_trials, "number of random draws");

  std::string export_checkpoint, export_out;
  auto* export_cmd =
      app.add_subcommand("export-embeddings", "dump number embeddings and cosine similarities");
  export_cmd->add_option("checkpoint", export_checkpoint, "checkpoint.json path")->required();
  export_cmd->add_option("out", export_out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return smm::kExitUsage;
  }

  if (train_cmd->parsed()) {
    if (train_seed_opt->count() > 0) {
      train.seed = train_seed;
    }
    return smm::cmd_train(train);
  }
  if (sweep_cmd->parsed()) {
    return smm::cmd_sweep(sweep);
  }
  if (plot_cmd->parsed()) {
    return smm::cmd_plot(plot_dir, plot_figure, plot_quiet);
  }
  if (probe_cmd->parsed()) {
    return smm::cmd_probe(probe_checkpoint, probe_problem);
  }
  if (grad_cmd->parsed()) {
    return smm::cmd_gradcheck(grad_seed, grad_trials);
  }
  if (export_cmd->parsed()) {
    return smm::cmd_export_embeddings(export_checkpoint, export_out);
  }
  return smm::kExitUsage;
}

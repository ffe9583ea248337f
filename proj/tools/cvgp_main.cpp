// cvgp command-line driver: generate, train, evaluate, sweep-npod.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cvgp/experiment.hpp"

namespace {

struct CommonOpts {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--config", o.config, "Configuration file (key = value)");
  sub->add_option("--out", o.out, "Output directory (overrides out_dir)");
  sub->add_option("--seed", o.seed, "Master seed (overrides seed)");
}

cvgp::ExperimentConfig resolve(const CommonOpts& o) {
  cvgp::ExperimentConfig cfg = o.config.empty() ? cvgp::ExperimentConfig{} : cvgp::load_config(o.config);
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CVAE-GPRR surrogate modeling from noisy snapshots"};
  app.require_subcommand(1);

  CommonOpts gen_o, train_o, eval_o, sweep_o;
  auto* gen = app.add_subcommand("generate", "Write Morlet train/test snapshot files");
  add_common(gen, gen_o);
  auto* train = app.add_subcommand("train", "Fit POD, recognition GPRs and the likelihood network");
  add_common(train, train_o);
  auto* eval = app.add_subcommand("evaluate", "Score a trained bundle on the test set");
  add_common(eval, eval_o);
  std::string grid = "coarse";
  std::string bundle;
  eval->add_option("--grid", grid, "coarse or fine")->check(CLI::IsMember({"coarse", "fine"}));
  eval->add_option("--bundle", bundle, "Model bundle (default: <out>/model.bundle)");
  auto* sweep = app.add_subcommand("sweep-npod", "Train and score over the configured POD ranks");
  add_common(sweep, sweep_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      cvgp::cmd_generate(resolve(gen_o), &std::cerr);
    } else if (train->parsed()) {
      cvgp::cmd_train(resolve(train_o), &std::cerr);
    } else if (eval->parsed()) {
      auto cfg = resolve(eval_o);
      const auto path = bundle.empty() ? cvgp::ExperimentPaths::from(cfg).bundle : std::filesystem::path(bundle);
      cvgp::cmd_evaluate(cfg, path, cvgp::parse_grid_choice(grid), &std::cout);
    } else if (sweep->parsed()) {
      auto res = cvgp::cmd_sweep_npod(resolve(sweep_o), &std::cout);
      for (const auto& f : res.failures) std::cerr << "rank " << f.n_pod << " failed: " << f.message << '\n';
    }
  } catch (const cvgp::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

// mlcld: contrastive pretraining, fine-tuning, evaluation and sweeps for
// multi-label classifiers on ARFF data.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mlcld/config.hpp"
#include "mlcld/errors.hpp"
#include "mlcld/pipeline.hpp"

namespace {

enum ExitCode : int { kOk = 0, kConfig = 1, kData = 2, kNumerical = 3 };

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config_path, "key=value run configuration file");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "override the configured seed");
  cmd->add_option("overrides", c.overrides, "extra key=value settings, applied last");
}

mlcld::config::RunConfig resolve(const Common& c) {
  auto cfg = mlcld::config::parse_config(c.config_path);
  for (const auto& kv : c.overrides) mlcld::config::apply_override(cfg, kv);
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

void print_report(const mlcld::metrics::MetricsReport& r) {
  std::cout << mlcld::metrics::kCsvHeader << "\n" << mlcld::metrics::to_csv_row(r) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-label contrastive pretraining with label distributions"};
  app.require_subcommand(1);

  Common pre, fin, run, swp;
  auto* pretrain_cmd = app.add_subcommand("pretrain", "contrastive pretraining, writes pretrained.ckpt");
  add_common(pretrain_cmd, pre, true);

  std::string from;
  auto* finetune_cmd = app.add_subcommand("finetune", "BCE fine-tuning of a pretrained checkpoint");
  add_common(finetune_cmd, fin, true);
  finetune_cmd->add_option("--from", from, "pretrained checkpoint")->required();

  mlcld::pipeline::EvaluateRequest eval_req;
  std::string eval_from, eval_config, eval_out;
  double threshold = 0.0;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score a test split, write metrics.csv/.txt");
  evaluate_cmd->add_option("--from", eval_from, "checkpoint")->required();
  evaluate_cmd->add_option("--test", eval_req.test_arff, "test ARFF")->required();
  evaluate_cmd->add_option("--labels", eval_req.labels_xml, "label XML")->required();
  auto* threshold_opt = evaluate_cmd->add_option("--threshold", threshold, "decision threshold");
  evaluate_cmd->add_option("--config", eval_config, "run config (default: resolved.cfg beside the checkpoint)");
  evaluate_cmd->add_option("--out", eval_out, "output directory (default: checkpoint directory)");

  auto* run_cmd = app.add_subcommand("run", "pretrain, finetune and evaluate in one run directory");
  add_common(run_cmd, run, true);

  mlcld::pipeline::SweepRequest sweep_req;
  std::string sweep_out;
  auto* sweep_cmd = app.add_subcommand("sweep", "full pipeline per (alpha, beta, seed) cell");
  add_common(sweep_cmd, swp, true);
  sweep_cmd->add_option("--alpha", sweep_req.alphas, "alpha grid")->required()->delimiter(',')->allow_extra_args(false);
  sweep_cmd->add_option("--beta", sweep_req.betas, "beta grid")->required()->delimiter(',')->allow_extra_args(false);
  sweep_cmd->add_option("--seeds", sweep_req.seeds, "seeds")->required()->delimiter(',')->allow_extra_args(false);
  sweep_cmd->add_option("--out", sweep_out, "sweep CSV path (default: <run.out_dir>/sweep.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*pretrain_cmd) {
      const auto cfg = resolve(pre);
      std::cout << mlcld::pipeline::cmd_pretrain(cfg, &std::cerr).string() << "\n";
    } else if (*finetune_cmd) {
      const auto cfg = resolve(fin);
      std::cout << mlcld::pipeline::cmd_finetune(cfg, from, &std::cerr, &std::cerr).string() << "\n";
    } else if (*evaluate_cmd) {
      eval_req.checkpoint = eval_from;
      if (!eval_config.empty()) eval_req.config = mlcld::config::parse_config(eval_config);
      if (*threshold_opt) eval_req.threshold = threshold;
      eval_req.out_dir = eval_out;
      print_report(mlcld::pipeline::cmd_evaluate(eval_req));
    } else if (*run_cmd) {
      print_report(mlcld::pipeline::run_pipeline(resolve(run), &std::cerr));
    } else if (*sweep_cmd) {
      sweep_req.base = resolve(swp);
      sweep_req.out_csv = sweep_out;
      const auto rows = mlcld::pipeline::cmd_sweep(sweep_req, &std::cerr);
      std::cerr << rows << " sweep rows written\n";
    }
  } catch (const mlcld::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const mlcld::ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const mlcld::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const mlcld::DegenerateInputError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const mlcld::Error& e) {
    // Parse, load, dimension and remaining data problems.
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}

#include "realogic/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "realogic/config.hpp"
#include "realogic/errors.hpp"
#include "realogic/serialize.hpp"

namespace realogic {

namespace {

namespace fs = std::filesystem;

std::string config_dir(const std::string& config_path) {
  return fs::path(config_path).parent_path().string();
}

Optimizer make_optimizer(const TrainingParams& t) {
  if (t.optimizer == "sgd") return Optimizer::sgd(t.lr, t.momentum);
  return Optimizer::adam(t.lr);
}

std::string fixed6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void bind_full_datasets(Experiment& ex) {
  for (const auto& [label, data] : ex.datasets) ex.env.bind_variable(label, data);
}

void print_satisfaction_table(std::ostream& out, const Satisfaction& sat) {
  std::size_t width = 9;  // len("aggregate")
  for (const std::string& n : sat.names) width = std::max(width, n.size());
  for (std::size_t i = 0; i < sat.names.size(); ++i) {
    out << sat.names[i] << std::string(width - sat.names[i].size() + 2, ' ')
        << fixed6(sat.truths[i].value()) << "\n";
  }
  out << "aggregate" << std::string(width - 9 + 2, ' ') << fixed6(sat.aggregate.value())
      << "\n";
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed, std::ostream& out) {
  Experiment ex = build_experiment(load_config(config_path), config_dir(config_path), seed);
  BatchSampler sampler(ex.datasets, ex.config.training.batch_size,
                       ex.seed ^ 0x9e3779b97f4a7c15ULL);
  Optimizer opt = make_optimizer(ex.config.training);
  TrainLog log =
      train(ex.kb, ex.env, sampler, ex.params, opt, ex.config.semantics, ex.config.training.epochs);

  fs::create_directories(out_dir);
  std::string metrics_path = (fs::path(out_dir) / "metrics.csv").string();
  std::string bin_path = (fs::path(out_dir) / "params.bin").string();
  std::string manifest_path = (fs::path(out_dir) / "params.json").string();
  write_metrics_csv(log, metrics_path);
  save_parameters(ex.params, bin_path, manifest_path);

  bind_full_datasets(ex);
  Satisfaction sat = satisfaction(ex.kb, ex.env, ex.config.semantics);
  out << "final satisfaction over the full datasets:\n";
  print_satisfaction_table(out, sat);
  out << "wrote " << metrics_path << ", " << bin_path << ", " << manifest_path << "\n";
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& params_path,
             std::optional<std::uint64_t> seed, std::ostream& out) {
  Experiment ex = build_experiment(load_config(config_path), config_dir(config_path), seed);
  if (!params_path.empty()) {
    fs::path manifest = fs::path(params_path);
    manifest.replace_extension(".json");
    load_parameters(ex.params, params_path, manifest.string());
  }
  Satisfaction sat = satisfaction(ex.kb, ex.env, ex.config.semantics);
  print_satisfaction_table(out, sat);
  return 0;
}

int cmd_gradcheck(const std::string& config_path, std::optional<std::uint64_t> seed, double h,
                  std::ostream& out) {
  Experiment ex = build_experiment(load_config(config_path), config_dir(config_path), seed);
  GradCheckReport report = gradient_check(
      [&ex] { return loss(ex.kb, ex.env, ex.config.semantics); }, ex.params.tensors(), h);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3e", report.max_rel_err);
  out << "max relative error " << buf << " over " << report.components << " components\n";
  bool ok = report.max_rel_err < 1e-4;
  out << "gradcheck " << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"differentiable fuzzy first-order logic over tensors"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::string params_path;
  std::optional<std::uint64_t> seed;
  double step = 1e-5;

  CLI::App* train_cmd = app.add_subcommand("train", "fit the knowledge base by gradient descent");
  train_cmd->add_option("--config", config_path, "experiment JSON")->required();
  train_cmd->add_option("--out", out_dir, "output directory for metrics and parameters");
  train_cmd->add_option("--seed", seed, "override the config seed");

  CLI::App* eval_cmd = app.add_subcommand("eval", "report satisfaction over the full datasets");
  eval_cmd->add_option("--config", config_path, "experiment JSON")->required();
  eval_cmd->add_option("--params", params_path,
                       "parameter blob written by train (manifest looked up as <stem>.json)");
  eval_cmd->add_option("--seed", seed, "override the config seed");

  CLI::App* grad_cmd =
      app.add_subcommand("gradcheck", "compare analytic gradients against central differences");
  grad_cmd->add_option("--config", config_path, "experiment JSON")->required();
  grad_cmd->add_option("--seed", seed, "override the config seed");
  grad_cmd->add_option("--step", step, "finite-difference step");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "E_USAGE\n" << e.what() << "\n";
    return 64;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(config_path, out_dir, seed, out);
    if (eval_cmd->parsed()) return cmd_eval(config_path, params_path, seed, out);
    return cmd_gradcheck(config_path, seed, step, out);
  } catch (const Error& e) {
    err << error_code_name(e.code()) << "\n" << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "E_INTERNAL\n" << e.what() << "\n";
    return 70;
  }
}

int run_cli(const std::vector<std::string>& args) {
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace realogic

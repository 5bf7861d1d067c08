#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "realogic/csv.hpp"
#include "realogic/fuzzy.hpp"
#include "realogic/learn.hpp"
#include "realogic/logic.hpp"

namespace realogic {

struct DatasetBinding {
  std::string csv_path;  // relative paths resolve against the config file's directory
  std::vector<std::string> feature_columns;
  std::optional<CsvFilter> filter;
};

struct PredicateSpec {
  std::string name;
  std::size_t arity = 1;
  std::vector<std::size_t> hidden{16, 16};
};

struct FunctionSpec {
  std::string name;
  std::size_t arity = 1;
  std::size_t output_dim = 1;
  std::vector<std::size_t> hidden{16, 16};
};

// Either a fixed value (init) or a learnable vector of width dim drawn
// uniformly from [-0.1, 0.1]. A learnable constant may also carry an init.
struct ConstantSpec {
  std::string name;
  std::vector<double> init;
  std::size_t dim = 0;  // used when init is empty
  bool learnable = false;
};

struct FormulaSpec {
  std::string name;
  std::string text;
};

struct TrainingParams {
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  std::string optimizer = "adam";  // "adam" | "sgd"
  double lr = 0.001;
  double momentum = 0.0;  // sgd only
  std::uint64_t seed = 42;
};

struct ExperimentConfig {
  std::vector<std::string> variables;          // declaration order
  std::map<std::string, DatasetBinding> data;  // one binding per variable
  std::vector<ConstantSpec> constants;
  std::vector<PredicateSpec> predicates;
  std::vector<FunctionSpec> functions;
  SemanticsConfig semantics;
  TrainingParams training;
  std::vector<FormulaSpec> formulas;
};

// JSON (de)serialization. Unknown keys are rejected so typos surface early.
// Errors: ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);  // IoError, ConfigError

// A fully assembled experiment: parsed closed formulas, datasets loaded,
// models built with seeded initialization, and an environment grounding every
// symbol to the full (unbatched) datasets.
struct Experiment {
  ExperimentConfig config;
  Signature signature;
  KnowledgeBase kb;
  Environment env;
  ParamStore params;
  std::vector<std::pair<std::string, Tensor>> datasets;  // per variable, declaration order
  std::uint64_t seed = 0;
};

// Walks the formulas to infer every network's input width (sum of argument
// feature widths, which must agree across applications), loads the CSVs, and
// wires the environment. base_dir anchors relative csv paths.
// Errors: ConfigError, plus parser/csv/logic errors with context.
Experiment build_experiment(const ExperimentConfig& cfg, const std::string& base_dir,
                            std::optional<std::uint64_t> seed_override = std::nullopt);

}  // namespace realogic

#include "realogic/config.hpp"

#include <filesystem>
#include <fstream>

#include "realogic/errors.hpp"
#include "realogic/parser.hpp"

namespace realogic {

namespace {

using nlohmann::json;

[[noreturn]] void bad_config(const std::string& detail) {
  raise(ErrorCode::ConfigError, detail);
}

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& context) {
  if (!j.is_object()) bad_config(context + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const std::string& a : allowed) ok = ok || key == a;
    if (!ok) bad_config(context + " has unknown key '" + key + "'");
  }
}

template <typename T>
T get_as(const json& j, const std::string& key, const std::string& context) {
  if (!j.contains(key)) bad_config(context + " is missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad_config(context + " has an invalid value for '" + key + "'");
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& context) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad_config(context + " has an invalid value for '" + key + "'");
  }
}

DatasetBinding binding_from_json(const json& j, const std::string& context) {
  check_keys(j, {"csv", "features", "filter"}, context);
  DatasetBinding b;
  b.csv_path = get_as<std::string>(j, "csv", context);
  b.feature_columns = get_as<std::vector<std::string>>(j, "features", context);
  if (b.feature_columns.empty()) bad_config(context + " lists no feature columns");
  if (j.contains("filter")) {
    const json& f = j.at("filter");
    check_keys(f, {"column", "value"}, context + ".filter");
    b.filter = CsvFilter{get_as<std::string>(f, "column", context + ".filter"),
                         get_as<std::string>(f, "value", context + ".filter")};
  }
  return b;
}

json binding_to_json(const DatasetBinding& b) {
  json j;
  j["csv"] = b.csv_path;
  j["features"] = b.feature_columns;
  if (b.filter) j["filter"] = {{"column", b.filter->column}, {"value", b.filter->value}};
  return j;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  check_keys(j,
             {"variables", "data", "constants", "predicates", "functions", "semantics",
              "training", "formulas"},
             "config");
  ExperimentConfig cfg;

  cfg.variables = get_or<std::vector<std::string>>(j, "variables", {}, "config");

  if (j.contains("data")) {
    const json& data = j.at("data");
    if (!data.is_object()) bad_config("config.data must map variable names to bindings");
    for (const auto& [label, binding] : data.items()) {
      cfg.data[label] = binding_from_json(binding, "config.data." + label);
    }
  }

  for (const json& c : get_or<std::vector<json>>(j, "constants", {}, "config")) {
    std::string ctx = "config.constants entry";
    check_keys(c, {"name", "init", "dim", "learnable"}, ctx);
    ConstantSpec spec;
    spec.name = get_as<std::string>(c, "name", ctx);
    ctx = "constant '" + spec.name + "'";
    spec.init = get_or<std::vector<double>>(c, "init", {}, ctx);
    spec.dim = get_or<std::size_t>(c, "dim", spec.init.size(), ctx);
    spec.learnable = get_or<bool>(c, "learnable", false, ctx);
    if (spec.init.empty() && !spec.learnable) {
      bad_config(ctx + " has no init values and is not learnable");
    }
    if (!spec.init.empty() && spec.dim != spec.init.size()) {
      bad_config(ctx + " declares dim " + std::to_string(spec.dim) + " but has " +
                 std::to_string(spec.init.size()) + " init values");
    }
    if (spec.dim == 0) bad_config(ctx + " needs a positive dim or init values");
    cfg.constants.push_back(std::move(spec));
  }

  for (const json& p : get_or<std::vector<json>>(j, "predicates", {}, "config")) {
    std::string ctx = "config.predicates entry";
    check_keys(p, {"name", "arity", "hidden"}, ctx);
    PredicateSpec spec;
    spec.name = get_as<std::string>(p, "name", ctx);
    ctx = "predicate '" + spec.name + "'";
    spec.arity = get_or<std::size_t>(p, "arity", 1, ctx);
    spec.hidden = get_or<std::vector<std::size_t>>(p, "hidden", spec.hidden, ctx);
    cfg.predicates.push_back(std::move(spec));
  }

  for (const json& fjson : get_or<std::vector<json>>(j, "functions", {}, "config")) {
    std::string ctx = "config.functions entry";
    check_keys(fjson, {"name", "arity", "output_dim", "hidden"}, ctx);
    FunctionSpec spec;
    spec.name = get_as<std::string>(fjson, "name", ctx);
    ctx = "function '" + spec.name + "'";
    spec.arity = get_or<std::size_t>(fjson, "arity", 1, ctx);
    spec.output_dim = get_or<std::size_t>(fjson, "output_dim", 1, ctx);
    spec.hidden = get_or<std::vector<std::size_t>>(fjson, "hidden", spec.hidden, ctx);
    cfg.functions.push_back(std::move(spec));
  }

  if (j.contains("semantics")) {
    const json& s = j.at("semantics");
    check_keys(s, {"family", "p_exists", "p_forall", "p_satagg", "epsilon"}, "config.semantics");
    cfg.semantics.family =
        family_from_name(get_or<std::string>(s, "family", "product", "config.semantics"));
    cfg.semantics.p_exists = get_or<double>(s, "p_exists", 2.0, "config.semantics");
    cfg.semantics.p_forall = get_or<double>(s, "p_forall", 2.0, "config.semantics");
    cfg.semantics.p_satagg = get_or<double>(s, "p_satagg", 2.0, "config.semantics");
    cfg.semantics.epsilon = get_or<double>(s, "epsilon", 1e-7, "config.semantics");
  }
  cfg.semantics.validate();

  if (j.contains("training")) {
    const json& t = j.at("training");
    check_keys(t, {"epochs", "batch_size", "optimizer", "lr", "momentum", "seed"},
               "config.training");
    cfg.training.epochs = get_or<std::size_t>(t, "epochs", cfg.training.epochs, "config.training");
    cfg.training.batch_size =
        get_or<std::size_t>(t, "batch_size", cfg.training.batch_size, "config.training");
    cfg.training.optimizer =
        get_or<std::string>(t, "optimizer", cfg.training.optimizer, "config.training");
    cfg.training.lr = get_or<double>(t, "lr", cfg.training.lr, "config.training");
    cfg.training.momentum = get_or<double>(t, "momentum", cfg.training.momentum, "config.training");
    cfg.training.seed = get_or<std::uint64_t>(t, "seed", cfg.training.seed, "config.training");
  }
  if (cfg.training.optimizer != "adam" && cfg.training.optimizer != "sgd") {
    bad_config("config.training.optimizer must be 'adam' or 'sgd', got '" +
               cfg.training.optimizer + "'");
  }
  if (cfg.training.batch_size == 0) bad_config("config.training.batch_size must be at least 1");

  for (const json& f : get_or<std::vector<json>>(j, "formulas", {}, "config")) {
    std::string ctx = "config.formulas entry";
    check_keys(f, {"name", "text"}, ctx);
    FormulaSpec spec;
    spec.name = get_as<std::string>(f, "name", ctx);
    spec.text = get_as<std::string>(f, "text", "formula '" + spec.name + "'");
    cfg.formulas.push_back(std::move(spec));
  }
  if (cfg.formulas.empty()) bad_config("config lists no formulas");

  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["variables"] = cfg.variables;
  j["data"] = json::object();
  for (const auto& [label, binding] : cfg.data) j["data"][label] = binding_to_json(binding);
  j["constants"] = json::array();
  for (const ConstantSpec& c : cfg.constants) {
    json e;
    e["name"] = c.name;
    if (!c.init.empty()) e["init"] = c.init;
    e["dim"] = c.dim;
    e["learnable"] = c.learnable;
    j["constants"].push_back(std::move(e));
  }
  j["predicates"] = json::array();
  for (const PredicateSpec& p : cfg.predicates) {
    j["predicates"].push_back({{"name", p.name}, {"arity", p.arity}, {"hidden", p.hidden}});
  }
  j["functions"] = json::array();
  for (const FunctionSpec& f : cfg.functions) {
    j["functions"].push_back({{"name", f.name},
                              {"arity", f.arity},
                              {"output_dim", f.output_dim},
                              {"hidden", f.hidden}});
  }
  j["semantics"] = {{"family", family_name(cfg.semantics.family)},
                    {"p_exists", cfg.semantics.p_exists},
                    {"p_forall", cfg.semantics.p_forall},
                    {"p_satagg", cfg.semantics.p_satagg},
                    {"epsilon", cfg.semantics.epsilon}};
  j["training"] = {{"epochs", cfg.training.epochs},
                   {"batch_size", cfg.training.batch_size},
                   {"optimizer", cfg.training.optimizer},
                   {"lr", cfg.training.lr},
                   {"momentum", cfg.training.momentum},
                   {"seed", cfg.training.seed}};
  j["formulas"] = json::array();
  for (const FormulaSpec& f : cfg.formulas) {
    j["formulas"].push_back({{"name", f.name}, {"text", f.text}});
  }
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) raise(ErrorCode::IoError, "cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    raise(ErrorCode::ConfigError, "config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

namespace {

// Feature widths flow bottom-up through terms; every application of a network
// must see the same total input width.
class WidthInference {
 public:
  WidthInference(const ExperimentConfig& cfg) : cfg_(cfg) {
    for (const auto& [label, binding] : cfg.data) {
      var_width_[label] = binding.feature_columns.size();
    }
    for (const ConstantSpec& c : cfg.constants) const_width_[c.name] = c.dim;
    for (const FunctionSpec& f : cfg.functions) func_out_[f.name] = f.output_dim;
  }

  void walk_formula(const FormulaAst& f) {
    if (const auto* atom = std::get_if<FormulaAst::Atom>(&f.node)) {
      std::size_t width = 0;
      for (const TermAst& a : atom->args) width += term_width(a);
      record(atom->pred, width, "predicate");
      return;
    }
    if (const auto* n = std::get_if<FormulaAst::Not>(&f.node)) {
      walk_formula(*n->child);
      return;
    }
    if (const auto* b = std::get_if<FormulaAst::Binary>(&f.node)) {
      walk_formula(*b->lhs);
      walk_formula(*b->rhs);
      return;
    }
    walk_formula(*std::get<FormulaAst::Quant>(f.node).body);
  }

  std::size_t input_width(const std::string& name, const char* kind) const {
    auto it = input_width_.find(name);
    if (it == input_width_.end()) {
      bad_config(std::string(kind) + " '" + name +
                 "' is never applied in any formula, so its input width is unknown");
    }
    return it->second;
  }

 private:
  std::size_t term_width(const TermAst& t) {
    if (const auto* v = std::get_if<TermAst::Var>(&t.node)) {
      auto it = var_width_.find(v->label);
      if (it == var_width_.end()) {
        bad_config("variable '" + v->label + "' has no data binding");
      }
      return it->second;
    }
    if (const auto* c = std::get_if<TermAst::Const>(&t.node)) {
      return const_width_.at(c->label);
    }
    const auto& fn = std::get<TermAst::Func>(t.node);
    std::size_t width = 0;
    for (const TermAst& a : fn.args) width += term_width(a);
    record(fn.name, width, "function");
    return func_out_.at(fn.name);
  }

  void record(const std::string& name, std::size_t width, const char* kind) {
    auto [it, inserted] = input_width_.emplace(name, width);
    if (!inserted && it->second != width) {
      bad_config(std::string(kind) + " '" + name + "' is applied with total feature width " +
                 std::to_string(it->second) + " and " + std::to_string(width));
    }
  }

  const ExperimentConfig& cfg_;
  std::map<std::string, std::size_t> var_width_;
  std::map<std::string, std::size_t> const_width_;
  std::map<std::string, std::size_t> func_out_;
  std::map<std::string, std::size_t> input_width_;
};

}  // namespace

Experiment build_experiment(const ExperimentConfig& cfg, const std::string& base_dir,
                            std::optional<std::uint64_t> seed_override) {
  cfg.semantics.validate();

  Experiment ex;
  ex.config = cfg;
  ex.seed = seed_override.value_or(cfg.training.seed);

  for (const std::string& v : cfg.variables) ex.signature.add_variable(v);
  for (const ConstantSpec& c : cfg.constants) ex.signature.add_constant(c.name);
  for (const FunctionSpec& f : cfg.functions) ex.signature.add_function(f.name, f.arity);
  for (const PredicateSpec& p : cfg.predicates) ex.signature.add_predicate(p.name, p.arity);

  for (const auto& [label, _] : cfg.data) {
    if (!ex.signature.has_variable(label)) {
      bad_config("config.data binds '" + label + "', which is not a declared variable");
    }
  }
  for (const std::string& v : cfg.variables) {
    if (cfg.data.count(v) == 0) bad_config("variable '" + v + "' has no data binding");
  }

  std::vector<FormulaAst> parsed;
  for (const FormulaSpec& f : cfg.formulas) {
    try {
      parsed.push_back(parse_formula(f.text, ex.signature));
    } catch (const SyntaxError& e) {
      throw SyntaxError(e.code(), "formula '" + f.name + "': " + e.what(), e.offset(), e.line(),
                        e.column());
    } catch (const Error& e) {
      raise(e.code(), "formula '" + f.name + "': " + e.what());
    }
  }
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    ex.kb.add_formula(cfg.formulas[i].name, parsed[i]);
  }

  WidthInference widths(cfg);
  for (const FormulaAst& f : parsed) widths.walk_formula(f);

  ex.env.semantics = cfg.semantics;

  std::mt19937_64 rng(ex.seed);
  for (const PredicateSpec& p : cfg.predicates) {
    std::vector<std::size_t> layout{widths.input_width(p.name, "predicate")};
    layout.insert(layout.end(), p.hidden.begin(), p.hidden.end());
    layout.push_back(1);
    auto net = std::make_shared<MlpModel>(p.name, layout, OutputSquash::Sigmoid, ex.params, rng);
    ex.env.bind_predicate(p.name, p.arity, predicate_model(net));
  }
  for (const FunctionSpec& f : cfg.functions) {
    std::vector<std::size_t> layout{widths.input_width(f.name, "function")};
    layout.insert(layout.end(), f.hidden.begin(), f.hidden.end());
    layout.push_back(f.output_dim);
    auto net = std::make_shared<MlpModel>(f.name, layout, OutputSquash::None, ex.params, rng);
    ex.env.bind_function(f.name, f.arity, function_model(net), Shape{f.output_dim});
  }
  for (const ConstantSpec& c : cfg.constants) {
    Tensor value = c.init.empty() ? init_learnable_constant({c.dim}, rng)
                                  : Tensor::from_values({c.init.size()}, c.init);
    if (c.learnable) value = ex.params.register_parameter("const." + c.name, value);
    ex.env.bind_constant(c.name, value, c.learnable);
  }

  namespace fs = std::filesystem;
  for (const std::string& label : cfg.variables) {
    const DatasetBinding& binding = cfg.data.at(label);
    fs::path p(binding.csv_path);
    if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
    Tensor data = load_csv(p.string(), binding.feature_columns, binding.filter);
    ex.env.bind_variable(label, data);
    ex.datasets.emplace_back(label, data);
  }

  return ex;
}

}  // namespace realogic

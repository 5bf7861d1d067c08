#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "realogic/ast.hpp"
#include "realogic/fuzzy.hpp"
#include "realogic/tensor.hpp"

namespace realogic {

// A grounded expression: a tensor whose leading dimensions correspond
// positionally to the free variables. Formulas carry truth values and no
// feature dimensions; terms carry feature dimensions after the variable grid.
struct LtnObject {
  Tensor value;
  std::vector<std::string> free_vars;

  std::size_t feature_rank() const { return value.rank() - free_vars.size(); }
};

// A variable grounded to a sequence of n >= 1 individuals, shape [n, feat...].
struct VariableGrounding {
  std::string label;
  Tensor individuals;
};

struct ConstantGrounding {
  std::string label;
  Tensor value;  // feature dims only
  bool learnable = false;
};

// Grounded predicate/function body: takes one batched feature tensor per
// argument ([batch, feat...]) and returns [batch] truths (predicates) or
// [batch, out_feat...] features (functions).
using GroundModel = std::function<Tensor(const std::vector<Tensor>&)>;

struct PredicateSymbol {
  std::string name;
  std::size_t arity = 1;
  GroundModel model;
};

struct FunctionSymbol {
  std::string name;
  std::size_t arity = 1;
  GroundModel model;
  Shape output_feature_shape;
};

// Symbol bindings plus the active fuzzy semantics. Copies are shallow: tensor
// and model handles are shared.
class Environment {
 public:
  SemanticsConfig semantics;

  void bind_variable(const std::string& label, Tensor individuals);
  void bind_constant(const std::string& label, Tensor value, bool learnable = false);
  void bind_predicate(const std::string& name, std::size_t arity, GroundModel model);
  void bind_function(const std::string& name, std::size_t arity, GroundModel model,
                     Shape output_feature_shape);

  const VariableGrounding& variable(const std::string& label) const;
  const ConstantGrounding& constant(const std::string& label) const;
  const PredicateSymbol& predicate(const std::string& name) const;
  const FunctionSymbol& function(const std::string& name) const;

  bool has_variable(const std::string& label) const { return variables_.count(label) > 0; }

 private:
  std::map<std::string, VariableGrounding> variables_;
  std::map<std::string, ConstantGrounding> constants_;
  std::map<std::string, PredicateSymbol> predicates_;
  std::map<std::string, FunctionSymbol> functions_;
};

// Result of aligning several grounded objects onto one variable grid.
struct AlignedObjects {
  std::vector<Tensor> tensors;           // [merged grid (1 where absent), own feat...]
  std::vector<std::string> merged_vars;  // ordered union by first appearance
  std::vector<std::size_t> extents;      // grid extent per merged variable
};

// Merges free variables by first appearance (left to right) and permutes /
// expands every tensor so dimension i corresponds to merged_vars[i].
// Errors: DuplicateVariableConflict when one label has two extents.
AlignedObjects align_broadcast(const std::vector<LtnObject>& objs);

// Grounds a term / formula in the environment. Function and predicate models
// see the variable grid flattened into one batch dimension and their outputs
// are reshaped back onto the grid.
// Errors: UnboundSymbol, ArityMismatch, OutOfRangeTruth (predicate output),
// QuantifyingAbsentVariable.
LtnObject eval_term(const TermAst& term, const Environment& env);
LtnObject eval_formula(const FormulaAst& formula, const Environment& env);

// Aggregates the dimension of `body` that corresponds to `var`; the result's
// free variables keep their relative order.
LtnObject quantify(Quantifier kind, const std::string& var, const LtnObject& body,
                   const SemanticsConfig& cfg);

// Free variables ordered by first appearance in a left-to-right traversal.
std::vector<std::string> free_vars_of(const FormulaAst& formula);

}  // namespace realogic

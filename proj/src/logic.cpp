#include "realogic/logic.hpp"

#include <algorithm>
#include <set>

#include "realogic/errors.hpp"

namespace realogic {

namespace {

std::size_t product(const Shape& s) {
  std::size_t p = 1;
  for (std::size_t e : s) p *= e;
  return p;
}

}  // namespace

void Environment::bind_variable(const std::string& label, Tensor individuals) {
  if (constants_.count(label) > 0) {
    raise(ErrorCode::DuplicateName, "'" + label + "' is already bound as a constant");
  }
  if (individuals.rank() < 1 || individuals.shape()[0] < 1) {
    raise(ErrorCode::EmptyVariableSequence,
          "variable '" + label + "' must be grounded to a non-empty sequence of individuals");
  }
  variables_[label] = VariableGrounding{label, std::move(individuals)};
}

void Environment::bind_constant(const std::string& label, Tensor value, bool learnable) {
  if (variables_.count(label) > 0) {
    raise(ErrorCode::DuplicateName, "'" + label + "' is already bound as a variable");
  }
  constants_[label] = ConstantGrounding{label, std::move(value), learnable};
}

void Environment::bind_predicate(const std::string& name, std::size_t arity, GroundModel model) {
  if (functions_.count(name) > 0) {
    raise(ErrorCode::DuplicateName, "'" + name + "' is already bound as a function");
  }
  if (arity < 1) raise(ErrorCode::ArityMismatch, "predicate '" + name + "' must have arity >= 1");
  predicates_[name] = PredicateSymbol{name, arity, std::move(model)};
}

void Environment::bind_function(const std::string& name, std::size_t arity, GroundModel model,
                                Shape output_feature_shape) {
  if (predicates_.count(name) > 0) {
    raise(ErrorCode::DuplicateName, "'" + name + "' is already bound as a predicate");
  }
  if (arity < 1) raise(ErrorCode::ArityMismatch, "function '" + name + "' must have arity >= 1");
  functions_[name] = FunctionSymbol{name, arity, std::move(model), std::move(output_feature_shape)};
}

const VariableGrounding& Environment::variable(const std::string& label) const {
  auto it = variables_.find(label);
  if (it == variables_.end()) {
    raise(ErrorCode::UnboundSymbol, "variable '" + label + "' has no grounding");
  }
  return it->second;
}

const ConstantGrounding& Environment::constant(const std::string& label) const {
  auto it = constants_.find(label);
  if (it == constants_.end()) {
    raise(ErrorCode::UnboundSymbol, "constant '" + label + "' has no grounding");
  }
  return it->second;
}

const PredicateSymbol& Environment::predicate(const std::string& name) const {
  auto it = predicates_.find(name);
  if (it == predicates_.end()) {
    raise(ErrorCode::UnboundSymbol, "predicate '" + name + "' has no grounding");
  }
  return it->second;
}

const FunctionSymbol& Environment::function(const std::string& name) const {
  auto it = functions_.find(name);
  if (it == functions_.end()) {
    raise(ErrorCode::UnboundSymbol, "function '" + name + "' has no grounding");
  }
  return it->second;
}

AlignedObjects align_broadcast(const std::vector<LtnObject>& objs) {
  AlignedObjects out;
  for (const LtnObject& o : objs) {
    for (std::size_t i = 0; i < o.free_vars.size(); ++i) {
      const std::string& v = o.free_vars[i];
      std::size_t extent = o.value.shape()[i];
      auto it = std::find(out.merged_vars.begin(), out.merged_vars.end(), v);
      if (it == out.merged_vars.end()) {
        out.merged_vars.push_back(v);
        out.extents.push_back(extent);
      } else {
        std::size_t k = static_cast<std::size_t>(it - out.merged_vars.begin());
        if (out.extents[k] != extent) {
          raise(ErrorCode::DuplicateVariableConflict,
                "variable '" + v + "' is grounded with " + std::to_string(out.extents[k]) +
                    " and " + std::to_string(extent) + " individuals in the same expression");
        }
      }
    }
  }

  for (const LtnObject& o : objs) {
    std::size_t nvars = o.free_vars.size();
    Shape feat(o.value.shape().begin() + static_cast<std::ptrdiff_t>(nvars), o.value.shape().end());

    std::vector<std::size_t> axes;
    for (const std::string& v : out.merged_vars) {
      auto it = std::find(o.free_vars.begin(), o.free_vars.end(), v);
      if (it != o.free_vars.end()) {
        axes.push_back(static_cast<std::size_t>(it - o.free_vars.begin()));
      }
    }
    for (std::size_t d = nvars; d < o.value.rank(); ++d) axes.push_back(d);

    bool identity = true;
    for (std::size_t i = 0; i < axes.size(); ++i) identity = identity && axes[i] == i;
    Tensor t = identity ? o.value : permute(o.value, axes);

    Shape target;
    for (std::size_t k = 0; k < out.merged_vars.size(); ++k) {
      auto it = std::find(o.free_vars.begin(), o.free_vars.end(), out.merged_vars[k]);
      target.push_back(it != o.free_vars.end() ? out.extents[k] : 1);
    }
    target.insert(target.end(), feat.begin(), feat.end());
    out.tensors.push_back(reshape(t, target));
  }
  return out;
}

namespace {

// Applies a grounded model over the merged variable grid: every aligned
// argument is expanded to the full grid, flattened to one batch dimension,
// and the model output is folded back onto the grid.
Tensor apply_on_grid(const GroundModel& model, const AlignedObjects& aligned,
                     const std::string& symbol_name) {
  std::size_t batch = product(aligned.extents);
  std::vector<Tensor> batched;
  batched.reserve(aligned.tensors.size());
  for (const Tensor& t : aligned.tensors) {
    Shape feat(t.shape().begin() + static_cast<std::ptrdiff_t>(aligned.merged_vars.size()),
               t.shape().end());
    Shape full = aligned.extents;
    full.insert(full.end(), feat.begin(), feat.end());
    Shape flat{batch};
    flat.insert(flat.end(), feat.begin(), feat.end());
    batched.push_back(reshape(broadcast_to(t, full), flat));
  }
  Tensor out = model(batched);
  if (out.rank() < 1 || out.shape()[0] != batch) {
    raise(ErrorCode::ShapeMismatch,
          "model for '" + symbol_name + "' returned batch " +
              (out.rank() < 1 ? std::string("<scalar>") : std::to_string(out.shape()[0])) +
              ", expected " + std::to_string(batch));
  }
  Shape result = aligned.extents;
  result.insert(result.end(), out.shape().begin() + 1, out.shape().end());
  return reshape(out, result);
}

void check_truth_output(const Tensor& t, const std::string& pred_name) {
  constexpr double tol = 1e-9;
  for (double v : t.values()) {
    if (!(v >= -tol && v <= 1.0 + tol)) {
      raise(ErrorCode::OutOfRangeTruth,
            "predicate '" + pred_name + "' produced " + std::to_string(v) +
                ", outside [0, 1]");
    }
  }
}

std::vector<LtnObject> eval_args(const std::vector<TermAst>& args, const Environment& env) {
  std::vector<LtnObject> out;
  out.reserve(args.size());
  for (const TermAst& a : args) out.push_back(eval_term(a, env));
  return out;
}

}  // namespace

LtnObject eval_term(const TermAst& term, const Environment& env) {
  if (const auto* v = std::get_if<TermAst::Var>(&term.node)) {
    const VariableGrounding& g = env.variable(v->label);
    return LtnObject{g.individuals, {v->label}};
  }
  if (const auto* c = std::get_if<TermAst::Const>(&term.node)) {
    return LtnObject{env.constant(c->label).value, {}};
  }
  const auto& f = std::get<TermAst::Func>(term.node);
  const FunctionSymbol& sym = env.function(f.name);
  if (f.args.size() != sym.arity) {
    raise(ErrorCode::ArityMismatch, "function '" + f.name + "' expects " +
                                        std::to_string(sym.arity) + " arguments, got " +
                                        std::to_string(f.args.size()));
  }
  AlignedObjects aligned = align_broadcast(eval_args(f.args, env));
  Tensor out = apply_on_grid(sym.model, aligned, f.name);
  Shape feat(out.shape().begin() + static_cast<std::ptrdiff_t>(aligned.merged_vars.size()),
             out.shape().end());
  if (feat != sym.output_feature_shape) {
    raise(ErrorCode::ShapeMismatch,
          "function '" + f.name + "' returned feature shape " + shape_to_string(feat) +
              ", declared " + shape_to_string(sym.output_feature_shape));
  }
  return LtnObject{out, aligned.merged_vars};
}

LtnObject eval_formula(const FormulaAst& formula, const Environment& env) {
  const SemanticsConfig& cfg = env.semantics;

  if (const auto* atom = std::get_if<FormulaAst::Atom>(&formula.node)) {
    const PredicateSymbol& sym = env.predicate(atom->pred);
    if (atom->args.size() != sym.arity) {
      raise(ErrorCode::ArityMismatch, "predicate '" + atom->pred + "' expects " +
                                          std::to_string(sym.arity) + " arguments, got " +
                                          std::to_string(atom->args.size()));
    }
    AlignedObjects aligned = align_broadcast(eval_args(atom->args, env));
    Tensor out = apply_on_grid(sym.model, aligned, atom->pred);
    if (out.rank() != aligned.merged_vars.size()) {
      raise(ErrorCode::ShapeMismatch,
            "predicate '" + atom->pred + "' must return one truth per batch element");
    }
    check_truth_output(out, atom->pred);
    return LtnObject{out, aligned.merged_vars};
  }

  if (const auto* n = std::get_if<FormulaAst::Not>(&formula.node)) {
    LtnObject child = eval_formula(*n->child, env);
    return LtnObject{neg(cfg, child.value), child.free_vars};
  }

  if (const auto* b = std::get_if<FormulaAst::Binary>(&formula.node)) {
    LtnObject lhs = eval_formula(*b->lhs, env);
    LtnObject rhs = eval_formula(*b->rhs, env);
    AlignedObjects aligned = align_broadcast({lhs, rhs});
    const Tensor& u = aligned.tensors[0];
    const Tensor& v = aligned.tensors[1];
    Tensor out;
    switch (b->kind) {
      case Connective::And: out = conj(cfg, u, v); break;
      case Connective::Or: out = disj(cfg, u, v); break;
      case Connective::Implies: out = implies(cfg, u, v); break;
      case Connective::Iff: out = iff(cfg, u, v); break;
    }
    // Elementwise broadcasting of the two aligned grids yields the full grid.
    Shape grid = aligned.extents;
    if (out.shape() != grid) out = broadcast_to(out, grid);
    return LtnObject{out, aligned.merged_vars};
  }

  const auto& q = std::get<FormulaAst::Quant>(formula.node);
  LtnObject body = eval_formula(*q.body, env);
  return quantify(q.kind, q.var, body, cfg);
}

LtnObject quantify(Quantifier kind, const std::string& var, const LtnObject& body,
                   const SemanticsConfig& cfg) {
  auto it = std::find(body.free_vars.begin(), body.free_vars.end(), var);
  if (it == body.free_vars.end()) {
    raise(ErrorCode::QuantifyingAbsentVariable,
          "quantifier binds '" + var + "' but it is not free in the body");
  }
  std::size_t dim = static_cast<std::size_t>(it - body.free_vars.begin());
  Tensor out = kind == Quantifier::Forall ? forall_agg(cfg, body.value, dim)
                                          : exists_agg(cfg, body.value, dim);
  std::vector<std::string> fv = body.free_vars;
  fv.erase(fv.begin() + static_cast<std::ptrdiff_t>(dim));
  return LtnObject{out, fv};
}

namespace {

void collect_term_vars(const TermAst& term, const std::set<std::string>& bound,
                       std::vector<std::string>& out) {
  if (const auto* v = std::get_if<TermAst::Var>(&term.node)) {
    if (bound.count(v->label) == 0 &&
        std::find(out.begin(), out.end(), v->label) == out.end()) {
      out.push_back(v->label);
    }
    return;
  }
  if (const auto* f = std::get_if<TermAst::Func>(&term.node)) {
    for (const TermAst& a : f->args) collect_term_vars(a, bound, out);
  }
}

void collect_formula_vars(const FormulaAst& formula, std::set<std::string> bound,
                          std::vector<std::string>& out) {
  if (const auto* atom = std::get_if<FormulaAst::Atom>(&formula.node)) {
    for (const TermAst& a : atom->args) collect_term_vars(a, bound, out);
    return;
  }
  if (const auto* n = std::get_if<FormulaAst::Not>(&formula.node)) {
    collect_formula_vars(*n->child, std::move(bound), out);
    return;
  }
  if (const auto* b = std::get_if<FormulaAst::Binary>(&formula.node)) {
    collect_formula_vars(*b->lhs, bound, out);
    collect_formula_vars(*b->rhs, std::move(bound), out);
    return;
  }
  const auto& q = std::get<FormulaAst::Quant>(formula.node);
  bound.insert(q.var);
  collect_formula_vars(*q.body, std::move(bound), out);
}

}  // namespace

std::vector<std::string> free_vars_of(const FormulaAst& formula) {
  std::vector<std::string> out;
  collect_formula_vars(formula, {}, out);
  return out;
}

}  // namespace realogic

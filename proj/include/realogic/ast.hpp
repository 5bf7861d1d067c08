#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "realogic/errors.hpp"

namespace realogic {

// Value-semantic heap box for recursive AST nodes.
template <typename T>
class Box {
 public:
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}
  Box(const Box& other) : ptr_(std::make_unique<T>(*other.ptr_)) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    ptr_ = std::make_unique<T>(*other.ptr_);
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;

  T& operator*() { return *ptr_; }
  const T& operator*() const { return *ptr_; }
  T* operator->() { return ptr_.get(); }
  const T* operator->() const { return ptr_.get(); }

 private:
  std::unique_ptr<T> ptr_;
};

struct TermAst {
  struct Var {
    std::string label;
  };
  struct Const {
    std::string label;
  };
  struct Func {
    std::string name;
    std::vector<TermAst> args;
  };

  std::variant<Var, Const, Func> node;
};

enum class Connective { And, Or, Implies, Iff };
enum class Quantifier { Forall, Exists };

struct FormulaAst {
  struct Atom {
    std::string pred;
    std::vector<TermAst> args;
  };
  struct Not {
    Box<FormulaAst> child;
  };
  struct Binary {
    Connective kind;
    Box<FormulaAst> lhs;
    Box<FormulaAst> rhs;
  };
  struct Quant {
    Quantifier kind;
    std::string var;
    Box<FormulaAst> body;
  };

  std::variant<Atom, Not, Binary, Quant> node;
};

bool operator==(const TermAst& a, const TermAst& b);
inline bool operator!=(const TermAst& a, const TermAst& b) { return !(a == b); }
bool operator==(const FormulaAst& a, const FormulaAst& b);
inline bool operator!=(const FormulaAst& a, const FormulaAst& b) { return !(a == b); }

// Construction helpers.
namespace ast {

inline TermAst var(std::string label) { return {TermAst::Var{std::move(label)}}; }
inline TermAst constant(std::string label) { return {TermAst::Const{std::move(label)}}; }
inline TermAst func(std::string name, std::vector<TermAst> args) {
  return {TermAst::Func{std::move(name), std::move(args)}};
}

inline FormulaAst atom(std::string pred, std::vector<TermAst> args) {
  return {FormulaAst::Atom{std::move(pred), std::move(args)}};
}
inline FormulaAst not_(FormulaAst f) { return {FormulaAst::Not{Box(std::move(f))}}; }
inline FormulaAst binary(Connective kind, FormulaAst lhs, FormulaAst rhs) {
  return {FormulaAst::Binary{kind, Box(std::move(lhs)), Box(std::move(rhs))}};
}
inline FormulaAst and_(FormulaAst a, FormulaAst b) {
  return binary(Connective::And, std::move(a), std::move(b));
}
inline FormulaAst or_(FormulaAst a, FormulaAst b) {
  return binary(Connective::Or, std::move(a), std::move(b));
}
inline FormulaAst implies_(FormulaAst a, FormulaAst b) {
  return binary(Connective::Implies, std::move(a), std::move(b));
}
inline FormulaAst iff_(FormulaAst a, FormulaAst b) {
  return binary(Connective::Iff, std::move(a), std::move(b));
}
inline FormulaAst quant(Quantifier kind, std::string var, FormulaAst body) {
  return {FormulaAst::Quant{kind, std::move(var), Box(std::move(body))}};
}
inline FormulaAst forall(std::string var, FormulaAst body) {
  return quant(Quantifier::Forall, std::move(var), std::move(body));
}
inline FormulaAst exists(std::string var, FormulaAst body) {
  return quant(Quantifier::Exists, std::move(var), std::move(body));
}

}  // namespace ast

enum class SymbolKind { Variable, Constant, Function, Predicate, Unknown };

const char* symbol_kind_name(SymbolKind kind);

// Declared symbols; the four name sets are pairwise disjoint.
class Signature {
 public:
  void add_variable(const std::string& label);
  void add_constant(const std::string& label);
  void add_function(const std::string& name, std::size_t arity);
  void add_predicate(const std::string& name, std::size_t arity);

  SymbolKind kind_of(const std::string& name) const;
  bool has_variable(const std::string& label) const { return variables_.count(label) > 0; }
  bool has_constant(const std::string& label) const { return constants_.count(label) > 0; }
  // Errors: UnknownSymbol.
  std::size_t function_arity(const std::string& name) const;
  std::size_t predicate_arity(const std::string& name) const;

  const std::set<std::string>& variables() const { return variables_; }
  const std::set<std::string>& constants() const { return constants_; }
  const std::map<std::string, std::size_t>& functions() const { return functions_; }
  const std::map<std::string, std::size_t>& predicates() const { return predicates_; }

 private:
  void require_fresh(const std::string& name) const;

  std::set<std::string> variables_;
  std::set<std::string> constants_;
  std::map<std::string, std::size_t> functions_;
  std::map<std::string, std::size_t> predicates_;
};

}  // namespace realogic

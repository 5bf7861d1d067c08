#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "realogic/ast.hpp"

namespace realogic {

enum class TokenKind {
  Ident,
  KwForall,
  KwExists,
  KwAnd,
  KwOr,
  KwNot,
  KwImplies,
  KwIff,
  LParen,
  RParen,
  Comma,
  Colon,
  End,
};

struct Token {
  TokenKind kind;
  std::string text;
  std::size_t offset = 0;  // byte offset into the input
  std::size_t line = 1;
  std::size_t column = 1;
};

// Splits the input into tokens. Keywords may be written as words (forall,
// exists, and, or, not, implies, iff) or as the aliases ∀ ∃ ∧ ∨ ¬ -> <->.
// Errors: LexError with the byte offset of the offending character.
std::vector<Token> tokenize(std::string_view input);

// Recursive-descent parse with precedence not > and > or > implies > iff;
// implies/iff right-associative, and/or left-associative; quantifiers scope
// maximally to the right. Symbols are validated against the signature.
// Errors: ParseError, ArityError, UnknownSymbol, KindError.
FormulaAst parse_formula(const std::vector<Token>& tokens, const Signature& sig);
FormulaAst parse_formula(std::string_view input, const Signature& sig);

// Canonical minimal-parentheses form; parse(pretty_print(f)) == f.
std::string pretty_print(const FormulaAst& formula);
std::string pretty_print(const TermAst& term);

// Free variables of the formula, ordered by first appearance (empty iff the
// formula is closed).
std::vector<std::string> validate_closed(const FormulaAst& formula, const Signature& sig);

}  // namespace realogic

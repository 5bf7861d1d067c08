#include "realogic/parser.hpp"

#include <sstream>

#include "realogic/logic.hpp"

namespace realogic {

// --- AST equality -------------------------------------------------------------

bool operator==(const TermAst& a, const TermAst& b) {
  if (a.node.index() != b.node.index()) return false;
  if (const auto* v = std::get_if<TermAst::Var>(&a.node)) {
    return v->label == std::get<TermAst::Var>(b.node).label;
  }
  if (const auto* c = std::get_if<TermAst::Const>(&a.node)) {
    return c->label == std::get<TermAst::Const>(b.node).label;
  }
  const auto& fa = std::get<TermAst::Func>(a.node);
  const auto& fb = std::get<TermAst::Func>(b.node);
  return fa.name == fb.name && fa.args == fb.args;
}

bool operator==(const FormulaAst& a, const FormulaAst& b) {
  if (a.node.index() != b.node.index()) return false;
  if (const auto* at = std::get_if<FormulaAst::Atom>(&a.node)) {
    const auto& bt = std::get<FormulaAst::Atom>(b.node);
    return at->pred == bt.pred && at->args == bt.args;
  }
  if (const auto* an = std::get_if<FormulaAst::Not>(&a.node)) {
    return *an->child == *std::get<FormulaAst::Not>(b.node).child;
  }
  if (const auto* ab = std::get_if<FormulaAst::Binary>(&a.node)) {
    const auto& bb = std::get<FormulaAst::Binary>(b.node);
    return ab->kind == bb.kind && *ab->lhs == *bb.lhs && *ab->rhs == *bb.rhs;
  }
  const auto& aq = std::get<FormulaAst::Quant>(a.node);
  const auto& bq = std::get<FormulaAst::Quant>(b.node);
  return aq.kind == bq.kind && aq.var == bq.var && *aq.body == *bq.body;
}

// --- Signature -----------------------------------------------------------------

const char* symbol_kind_name(SymbolKind kind) {
  switch (kind) {
    case SymbolKind::Variable: return "variable";
    case SymbolKind::Constant: return "constant";
    case SymbolKind::Function: return "function";
    case SymbolKind::Predicate: return "predicate";
    case SymbolKind::Unknown: return "unknown";
  }
  return "?";
}

void Signature::require_fresh(const std::string& name) const {
  const SymbolKind existing = kind_of(name);
  if (existing != SymbolKind::Unknown) {
    raise(ErrorCode::DuplicateName,
          "symbol '" + name + "' already declared as " + symbol_kind_name(existing));
  }
}

void Signature::add_variable(const std::string& label) {
  require_fresh(label);
  variables_.insert(label);
}

void Signature::add_constant(const std::string& label) {
  require_fresh(label);
  constants_.insert(label);
}

void Signature::add_function(const std::string& name, std::size_t arity) {
  require_fresh(name);
  if (arity == 0) raise(ErrorCode::ArityError, "function '" + name + "' must have arity >= 1");
  functions_[name] = arity;
}

void Signature::add_predicate(const std::string& name, std::size_t arity) {
  require_fresh(name);
  if (arity == 0) raise(ErrorCode::ArityError, "predicate '" + name + "' must have arity >= 1");
  predicates_[name] = arity;
}

SymbolKind Signature::kind_of(const std::string& name) const {
  if (variables_.count(name)) return SymbolKind::Variable;
  if (constants_.count(name)) return SymbolKind::Constant;
  if (functions_.count(name)) return SymbolKind::Function;
  if (predicates_.count(name)) return SymbolKind::Predicate;
  return SymbolKind::Unknown;
}

std::size_t Signature::function_arity(const std::string& name) const {
  auto it = functions_.find(name);
  if (it == functions_.end()) raise(ErrorCode::UnknownSymbol, "unknown function '" + name + "'");
  return it->second;
}

std::size_t Signature::predicate_arity(const std::string& name) const {
  auto it = predicates_.find(name);
  if (it == predicates_.end()) raise(ErrorCode::UnknownSymbol, "unknown predicate '" + name + "'");
  return it->second;
}

// --- tokenizer --------------------------------------------------------------------

namespace {

bool is_ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_ident_char(char c) {
  return is_ident_start(c) || (c >= '0' && c <= '9') || c == '_';
}

TokenKind keyword_kind(std::string_view word) {
  if (word == "forall") return TokenKind::KwForall;
  if (word == "exists") return TokenKind::KwExists;
  if (word == "and") return TokenKind::KwAnd;
  if (word == "or") return TokenKind::KwOr;
  if (word == "not") return TokenKind::KwNot;
  if (word == "implies") return TokenKind::KwImplies;
  if (word == "iff") return TokenKind::KwIff;
  return TokenKind::Ident;
}

struct Alias {
  std::string_view bytes;
  TokenKind kind;
};

// UTF-8 operator aliases; "<->" is checked before "->".
constexpr Alias kAliases[] = {
    {"∀", TokenKind::KwForall},   // ∀
    {"∃", TokenKind::KwExists},   // ∃
    {"∧", TokenKind::KwAnd},      // ∧
    {"∨", TokenKind::KwOr},       // ∨
    {"¬", TokenKind::KwNot},      // ¬
    {"<->", TokenKind::KwIff},
    {"->", TokenKind::KwImplies},
};

}  // namespace

std::vector<Token> tokenize(std::string_view input) {
  std::vector<Token> tokens;
  std::size_t i = 0, line = 1, col = 1;

  auto push = [&](TokenKind kind, std::size_t start, std::size_t start_col,
                  std::string text) {
    tokens.push_back({kind, std::move(text), start, line, start_col});
  };

  while (i < input.size()) {
    const char c = input[i];
    if (c == '\n') {
      ++i;
      ++line;
      col = 1;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      ++col;
      continue;
    }
    const std::size_t start = i, start_col = col;
    if (c == '(') {
      push(TokenKind::LParen, start, start_col, "(");
      ++i, ++col;
      continue;
    }
    if (c == ')') {
      push(TokenKind::RParen, start, start_col, ")");
      ++i, ++col;
      continue;
    }
    if (c == ',') {
      push(TokenKind::Comma, start, start_col, ",");
      ++i, ++col;
      continue;
    }
    if (c == ':') {
      push(TokenKind::Colon, start, start_col, ":");
      ++i, ++col;
      continue;
    }
    if (is_ident_start(c)) {
      std::size_t j = i + 1;
      while (j < input.size() && is_ident_char(input[j])) ++j;
      std::string word(input.substr(i, j - i));
      const TokenKind kind = keyword_kind(word);
      push(kind, start, start_col, std::move(word));
      col += j - i;
      i = j;
      continue;
    }
    bool matched = false;
    for (const Alias& alias : kAliases) {
      if (input.substr(i).starts_with(alias.bytes)) {
        push(alias.kind, start, start_col, std::string(alias.bytes));
        i += alias.bytes.size();
        ++col;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    throw SyntaxError(ErrorCode::LexError,
                      "unexpected character at offset " + std::to_string(i), i, line, col);
  }
  tokens.push_back({TokenKind::End, "", input.size(), line, col});
  return tokens;
}

// --- parser --------------------------------------------------------------------------

namespace {

class Parser {
 public:
  Parser(const std::vector<Token>& tokens, const Signature& sig)
      : tokens_(tokens), sig_(sig) {}

  FormulaAst parse() {
    FormulaAst f = parse_iff();
    expect(TokenKind::End, "end of input");
    return f;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& advance() { return tokens_[pos_++]; }
  bool accept(TokenKind kind) {
    if (peek().kind == kind) {
      ++pos_;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(ErrorCode code, const std::string& message, const Token& at) {
    throw SyntaxError(code,
                      message + " (line " + std::to_string(at.line) + ", column " +
                          std::to_string(at.column) + ")",
                      at.offset, at.line, at.column);
  }

  const Token& expect(TokenKind kind, const std::string& what) {
    if (peek().kind != kind) {
      fail(ErrorCode::ParseError,
           "expected " + what + ", got '" + describe(peek()) + "'", peek());
    }
    return advance();
  }

  static std::string describe(const Token& t) {
    return t.kind == TokenKind::End ? "end of input" : t.text;
  }

  FormulaAst parse_iff() {
    FormulaAst lhs = parse_implies();
    if (accept(TokenKind::KwIff)) {
      return ast::iff_(std::move(lhs), parse_iff());  // right-associative
    }
    return lhs;
  }

  FormulaAst parse_implies() {
    FormulaAst lhs = parse_or();
    if (accept(TokenKind::KwImplies)) {
      return ast::implies_(std::move(lhs), parse_implies());  // right-associative
    }
    return lhs;
  }

  FormulaAst parse_or() {
    FormulaAst lhs = parse_and();
    while (accept(TokenKind::KwOr)) {
      lhs = ast::or_(std::move(lhs), parse_and());
    }
    return lhs;
  }

  FormulaAst parse_and() {
    FormulaAst lhs = parse_unary();
    while (accept(TokenKind::KwAnd)) {
      lhs = ast::and_(std::move(lhs), parse_unary());
    }
    return lhs;
  }

  FormulaAst parse_unary() {
    if (accept(TokenKind::KwNot)) {
      return ast::not_(parse_unary());
    }
    if (peek().kind == TokenKind::KwForall || peek().kind == TokenKind::KwExists) {
      return parse_quantified();
    }
    return parse_primary();
  }

  FormulaAst parse_quantified() {
    const Token& kw = advance();
    const Quantifier kind =
        kw.kind == TokenKind::KwForall ? Quantifier::Forall : Quantifier::Exists;
    const Token& name = expect(TokenKind::Ident, "a variable name");
    const SymbolKind sk = sig_.kind_of(name.text);
    if (sk == SymbolKind::Unknown) {
      fail(ErrorCode::UnknownSymbol, "unknown variable '" + name.text + "'", name);
    }
    if (sk != SymbolKind::Variable) {
      fail(ErrorCode::KindError,
           "'" + name.text + "' is a " + symbol_kind_name(sk) +
               ", expected a variable after a quantifier",
           name);
    }
    expect(TokenKind::Colon, "':'");
    return ast::quant(kind, name.text, parse_iff());  // maximal scope to the right
  }

  FormulaAst parse_primary() {
    if (accept(TokenKind::LParen)) {
      FormulaAst f = parse_iff();
      expect(TokenKind::RParen, "')'");
      return f;
    }
    if (peek().kind != TokenKind::Ident) {
      fail(ErrorCode::ParseError, "expected a formula, got '" + describe(peek()) + "'",
           peek());
    }
    const Token& name = advance();
    const SymbolKind sk = sig_.kind_of(name.text);
    if (sk == SymbolKind::Unknown) {
      fail(ErrorCode::UnknownSymbol, "unknown predicate '" + name.text + "'", name);
    }
    if (sk != SymbolKind::Predicate) {
      fail(ErrorCode::KindError,
           "'" + name.text + "' is a " + symbol_kind_name(sk) + ", used as a predicate",
           name);
    }
    std::vector<TermAst> args = parse_arg_list(name);
    const std::size_t arity = sig_.predicate_arity(name.text);
    if (args.size() != arity) {
      fail(ErrorCode::ArityError,
           "predicate '" + name.text + "' expects " + std::to_string(arity) +
               " arguments, got " + std::to_string(args.size()),
           name);
    }
    return ast::atom(name.text, std::move(args));
  }

  std::vector<TermAst> parse_arg_list(const Token& owner) {
    if (peek().kind != TokenKind::LParen) {
      fail(ErrorCode::ParseError, "expected '(' after '" + owner.text + "'", peek());
    }
    advance();
    std::vector<TermAst> args;
    args.push_back(parse_term());
    while (accept(TokenKind::Comma)) {
      args.push_back(parse_term());
    }
    expect(TokenKind::RParen, "')'");
    return args;
  }

  TermAst parse_term() {
    if (peek().kind != TokenKind::Ident) {
      fail(ErrorCode::ParseError, "expected a term, got '" + describe(peek()) + "'",
           peek());
    }
    const Token& name = advance();
    const SymbolKind sk = sig_.kind_of(name.text);
    if (peek().kind == TokenKind::LParen) {
      if (sk == SymbolKind::Unknown) {
        fail(ErrorCode::UnknownSymbol, "unknown function '" + name.text + "'", name);
      }
      if (sk != SymbolKind::Function) {
        fail(ErrorCode::KindError,
             "'" + name.text + "' is a " + symbol_kind_name(sk) + ", used as a function",
             name);
      }
      std::vector<TermAst> args = parse_arg_list(name);
      const std::size_t arity = sig_.function_arity(name.text);
      if (args.size() != arity) {
        fail(ErrorCode::ArityError,
             "function '" + name.text + "' expects " + std::to_string(arity) +
                 " arguments, got " + std::to_string(args.size()),
             name);
      }
      return ast::func(name.text, std::move(args));
    }
    if (sk == SymbolKind::Variable) return ast::var(name.text);
    if (sk == SymbolKind::Constant) return ast::constant(name.text);
    if (sk == SymbolKind::Unknown) {
      fail(ErrorCode::UnknownSymbol, "unknown symbol '" + name.text + "'", name);
    }
    fail(ErrorCode::KindError,
         "'" + name.text + "' is a " + symbol_kind_name(sk) +
             ", expected a variable or constant",
         name);
  }

  const std::vector<Token>& tokens_;
  const Signature& sig_;
  std::size_t pos_ = 0;
};

}  // namespace

FormulaAst parse_formula(const std::vector<Token>& tokens, const Signature& sig) {
  return Parser(tokens, sig).parse();
}

FormulaAst parse_formula(std::string_view input, const Signature& sig) {
  return parse_formula(tokenize(input), sig);
}

// --- pretty printer ----------------------------------------------------------------

namespace {

// Precedence levels, loosest first: iff=1 < implies=2 < or=3 < and=4 < not=5.
// Quantifiers scope maximally to the right and print without parentheses only
// in rightmost positions.
int connective_prec(Connective kind) {
  switch (kind) {
    case Connective::Iff: return 1;
    case Connective::Implies: return 2;
    case Connective::Or: return 3;
    case Connective::And: return 4;
  }
  return 0;
}

const char* connective_word(Connective kind) {
  switch (kind) {
    case Connective::Iff: return "iff";
    case Connective::Implies: return "implies";
    case Connective::Or: return "or";
    case Connective::And: return "and";
  }
  return "?";
}

void print_term(const TermAst& term, std::string& out) {
  if (const auto* v = std::get_if<TermAst::Var>(&term.node)) {
    out += v->label;
  } else if (const auto* c = std::get_if<TermAst::Const>(&term.node)) {
    out += c->label;
  } else {
    const auto& f = std::get<TermAst::Func>(term.node);
    out += f.name;
    out += '(';
    for (std::size_t i = 0; i < f.args.size(); ++i) {
      if (i) out += ',';
      print_term(f.args[i], out);
    }
    out += ')';
  }
}

void print_formula(const FormulaAst& f, int ctx, bool rightmost, std::string& out);

void print_wrapped(const FormulaAst& f, std::string& out) {
  out += '(';
  print_formula(f, 1, true, out);
  out += ')';
}

void print_formula(const FormulaAst& f, int ctx, bool rightmost, std::string& out) {
  if (const auto* a = std::get_if<FormulaAst::Atom>(&f.node)) {
    out += a->pred;
    out += '(';
    for (std::size_t i = 0; i < a->args.size(); ++i) {
      if (i) out += ',';
      print_term(a->args[i], out);
    }
    out += ')';
    return;
  }
  if (const auto* n = std::get_if<FormulaAst::Not>(&f.node)) {
    out += "not ";
    print_formula(*n->child, 5, rightmost, out);
    return;
  }
  if (const auto* b = std::get_if<FormulaAst::Binary>(&f.node)) {
    const int prec = connective_prec(b->kind);
    if (prec < ctx) {
      print_wrapped(f, out);
      return;
    }
    const bool right_assoc = b->kind == Connective::Implies || b->kind == Connective::Iff;
    print_formula(*b->lhs, prec + (right_assoc ? 1 : 0), false, out);
    out += ' ';
    out += connective_word(b->kind);
    out += ' ';
    print_formula(*b->rhs, prec + (right_assoc ? 0 : 1), rightmost, out);
    return;
  }
  const auto& q = std::get<FormulaAst::Quant>(f.node);
  if (!rightmost) {
    print_wrapped(f, out);
    return;
  }
  out += q.kind == Quantifier::Forall ? "forall " : "exists ";
  out += q.var;
  out += ": ";
  print_formula(*q.body, 1, true, out);
}

}  // namespace

std::string pretty_print(const FormulaAst& formula) {
  std::string out;
  print_formula(formula, 1, true, out);
  return out;
}

std::string pretty_print(const TermAst& term) {
  std::string out;
  print_term(term, out);
  return out;
}

std::vector<std::string> validate_closed(const FormulaAst& formula, const Signature&) {
  return free_vars_of(formula);
}

}  // namespace realogic

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracle.hpp"
#include "realogic/logic.hpp"
#include "realogic/parser.hpp"
#include "testutil.hpp"

using namespace realogic;

namespace {

// x_i = i scaled, 1-d features; predicates read off the feature directly so
// expected grids are computable by hand.
Environment toy_env() {
  Environment env;
  env.bind_variable("x", Tensor::from_values({3, 1}, {0.0, 1.0, 2.0}));
  env.bind_variable("y", Tensor::from_values({2, 1}, {10.0, 20.0}));
  // P(a, b) = sigmoid(a + b) over 1-d features
  env.bind_predicate("P", 2, [](const std::vector<Tensor>& args) {
    return sigmoid(reshape(add(args[0], args[1]), {args[0].shape()[0]}));
  });
  // Q(a) = sigmoid(a - 15)
  env.bind_predicate("Q", 1, [](const std::vector<Tensor>& args) {
    return sigmoid(reshape(affine_scalar(args[0], 1.0, -15.0), {args[0].shape()[0]}));
  });
  // f(a) = a + 1, feature shape [1]
  env.bind_function(
      "f", 1,
      [](const std::vector<Tensor>& args) { return affine_scalar(args[0], 1.0, 1.0); }, {1});
  // g(a, b) = a + b element-wise, feature shape [1]
  env.bind_function(
      "g", 2, [](const std::vector<Tensor>& args) { return add(args[0], args[1]); }, {1});
  env.bind_constant("c", Tensor::from_values({1}, {5.0}));
  return env;
}

Signature toy_sig() {
  Signature sig;
  sig.add_variable("x");
  sig.add_variable("y");
  sig.add_constant("c");
  sig.add_predicate("P", 2);
  sig.add_predicate("Q", 1);
  sig.add_function("f", 1);
  sig.add_function("g", 2);
  return sig;
}

FormulaAst parse_toy(const std::string& text) { return parse_formula(text, toy_sig()); }

double sig_at(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

TEST_CASE("environment binding rules") {
  Environment env;
  env.bind_variable("x", Tensor::from_values({2, 1}, {1.0, 2.0}));
  CHECK(env.has_variable("x"));
  CHECK(env.variable("x").individuals.shape() == Shape{2, 1});

  // cross-kind name reuse is rejected
  CHECK_THROWS_AS(env.bind_constant("x", Tensor::from_values({1}, {0.0})), Error);
  env.bind_predicate("P", 1, [](const std::vector<Tensor>& args) { return args[0]; });
  CHECK_THROWS_AS(
      env.bind_function("P", 1, [](const std::vector<Tensor>& args) { return args[0]; }, {1}),
      Error);

  // rebinding the same kind replaces the grounding
  env.bind_variable("x", Tensor::from_values({3, 1}, {1.0, 2.0, 3.0}));
  CHECK(env.variable("x").individuals.shape() == Shape{3, 1});

  CHECK_THROWS_AS(env.variable("missing"), Error);
  CHECK_THROWS_AS(env.predicate("missing"), Error);
  try {
    env.constant("missing");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnboundSymbol);
  }

  // variables must ground to at least one individual with rank >= 1
  CHECK_THROWS_AS(env.bind_variable("bad", Tensor::scalar(1.0)), Error);
  try {
    env.bind_variable("bad", Tensor::scalar(1.0));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyVariableSequence);
  }

  // arity must be >= 1
  CHECK_THROWS_AS(
      env.bind_predicate("Z", 0, [](const std::vector<Tensor>& args) { return args[0]; }),
      Error);
}

TEST_CASE("align_broadcast merges by first appearance") {
  LtnObject pxy{Tensor::from_values({3, 2}, {1, 2, 3, 4, 5, 6}), {"x", "y"}};
  LtnObject qy{Tensor::from_values({2}, {7, 8}), {"y"}};
  AlignedObjects aligned = align_broadcast({pxy, qy});
  CHECK(aligned.merged_vars == std::vector<std::string>{"x", "y"});
  CHECK(aligned.extents == std::vector<std::size_t>{3, 2});
  REQUIRE(aligned.tensors.size() == 2);
  CHECK(aligned.tensors[0].shape() == Shape{3, 2});
  CHECK(aligned.tensors[1].shape() == Shape{1, 2});
  CHECK(aligned.tensors[1].at(0) == 7.0);
  CHECK(aligned.tensors[1].at(1) == 8.0);

  // single object is unchanged
  AlignedObjects single = align_broadcast({pxy});
  CHECK(single.merged_vars == std::vector<std::string>{"x", "y"});
  CHECK(single.tensors[0].shape() == Shape{3, 2});
  for (std::size_t i = 0; i < 6; ++i) CHECK(single.tensors[0].at(i) == pxy.value.at(i));

  // disjoint variables expand with extent-1 dimensions
  LtnObject ax{Tensor::from_values({3}, {1, 2, 3}), {"x"}};
  LtnObject by{Tensor::from_values({2}, {4, 5}), {"y"}};
  AlignedObjects ab = align_broadcast({ax, by});
  CHECK(ab.merged_vars == std::vector<std::string>{"x", "y"});
  CHECK(ab.tensors[0].shape() == Shape{3, 1});
  CHECK(ab.tensors[1].shape() == Shape{1, 2});

  // first-appearance order follows argument order
  AlignedObjects ba = align_broadcast({by, ax});
  CHECK(ba.merged_vars == std::vector<std::string>{"y", "x"});

  // axes permute so dimension i matches merged_vars[i]
  LtnObject ryx{Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6}), {"y", "x"}};
  AlignedObjects mixed = align_broadcast({pxy, ryx});
  CHECK(mixed.merged_vars == std::vector<std::string>{"x", "y"});
  CHECK(mixed.tensors[1].shape() == Shape{3, 2});
  CHECK(mixed.tensors[1].at(0) == 1.0);  // ryx[y=0,x=0]
  CHECK(mixed.tensors[1].at(1) == 4.0);  // ryx[y=1,x=0]

  // conflicting extents for one label
  LtnObject qy4{Tensor::from_values({4}, {1, 2, 3, 4}), {"y"}};
  CHECK_THROWS_AS(align_broadcast({pxy, qy4}), Error);
  try {
    align_broadcast({pxy, qy4});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateVariableConflict);
  }
}

TEST_CASE("eval_term leaves") {
  Environment env = toy_env();
  LtnObject x = eval_term(ast::var("x"), env);
  CHECK(x.value.shape() == Shape{3, 1});
  CHECK(x.free_vars == std::vector<std::string>{"x"});
  CHECK(x.feature_rank() == 1);

  LtnObject c = eval_term(ast::constant("c"), env);
  CHECK(c.value.shape() == Shape{1});
  CHECK(c.free_vars.empty());
  CHECK(c.value.at(0) == 5.0);

  CHECK_THROWS_AS(eval_term(ast::var("w"), env), Error);
}

TEST_CASE("eval_term function applications") {
  Environment env = toy_env();
  LtnObject fx = eval_term(ast::func("f", {ast::var("x")}), env);
  CHECK(fx.value.shape() == Shape{3, 1});
  CHECK(fx.free_vars == std::vector<std::string>{"x"});
  CHECK(fx.value.at(0) == 1.0);
  CHECK(fx.value.at(2) == 3.0);

  // g(x, y) grids over both variables: cell (i,j) = x_i + y_j
  LtnObject gxy = eval_term(ast::func("g", {ast::var("x"), ast::var("y")}), env);
  CHECK(gxy.value.shape() == Shape{3, 2, 1});
  CHECK(gxy.free_vars == std::vector<std::string>{"x", "y"});
  CHECK(gxy.value.at(0) == 10.0);
  CHECK(gxy.value.at(1) == 20.0);
  CHECK(gxy.value.at(4) == 12.0);
  CHECK(gxy.value.at(5) == 22.0);

  // constants broadcast across the grid: g(x, c) = x_i + 5
  LtnObject gxc = eval_term(ast::func("g", {ast::var("x"), ast::constant("c")}), env);
  CHECK(gxc.value.shape() == Shape{3, 1});
  CHECK(gxc.value.at(1) == 6.0);

  // nested application f(g(x,y)) keeps the grid
  LtnObject nested =
      eval_term(ast::func("f", {ast::func("g", {ast::var("x"), ast::var("y")})}), env);
  CHECK(nested.value.shape() == Shape{3, 2, 1});
  CHECK(nested.value.at(0) == 11.0);

  CHECK_THROWS_AS(eval_term(ast::func("f", {ast::var("x"), ast::var("y")}), env), Error);
  try {
    eval_term(ast::func("f", {ast::var("x"), ast::var("y")}), env);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ArityMismatch);
  }
}

TEST_CASE("atom evaluation grids over free variables") {
  Environment env = toy_env();
  LtnObject pxy = eval_formula(parse_toy("P(x,y)"), env);
  CHECK(pxy.value.shape() == Shape{3, 2});
  CHECK(pxy.free_vars == std::vector<std::string>{"x", "y"});
  CHECK(pxy.feature_rank() == 0);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const double expect = sig_at(static_cast<double>(i) + (j == 0 ? 10.0 : 20.0));
      CHECK(pxy.value.at(i * 2 + j) == doctest::Approx(expect).epsilon(1e-12));
    }
  }

  LtnObject qy = eval_formula(parse_toy("Q(y)"), env);
  CHECK(qy.value.shape() == Shape{2});
  CHECK(qy.value.at(0) == doctest::Approx(sig_at(-5.0)).epsilon(1e-12));
  CHECK(qy.value.at(1) == doctest::Approx(sig_at(5.0)).epsilon(1e-12));

  // closed atom over constants only -> scalar
  LtnObject qc = eval_formula(parse_toy("Q(c)"), env);
  CHECK(qc.value.is_scalar());
  CHECK(qc.free_vars.empty());
  CHECK(qc.value.value() == doctest::Approx(sig_at(-10.0)).epsilon(1e-12));
}

TEST_CASE("repeated variable in one atom evaluates on the diagonal") {
  Environment env = toy_env();
  LtnObject pxx = eval_formula(parse_toy("P(x,x)"), env);
  CHECK(pxx.value.shape() == Shape{3});
  CHECK(pxx.free_vars == std::vector<std::string>{"x"});
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(pxx.value.at(i) ==
          doctest::Approx(sig_at(2.0 * static_cast<double>(i))).epsilon(1e-12));
  }
}

TEST_CASE("connectives align and broadcast children") {
  Environment env = toy_env();
  LtnObject both = eval_formula(parse_toy("P(x,y) and Q(y)"), env);
  CHECK(both.value.shape() == Shape{3, 2});
  CHECK(both.free_vars == std::vector<std::string>{"x", "y"});
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const double p = sig_at(static_cast<double>(i) + (j == 0 ? 10.0 : 20.0));
      const double q = sig_at(j == 0 ? -5.0 : 5.0);
      CHECK(both.value.at(i * 2 + j) == doctest::Approx(p * q).epsilon(1e-12));
    }
  }

  // swapped operand order changes the free-var order, values follow suit
  LtnObject swapped = eval_formula(parse_toy("Q(y) and P(x,y)"), env);
  CHECK(swapped.free_vars == std::vector<std::string>{"y", "x"});
  CHECK(swapped.value.shape() == Shape{2, 3});
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(swapped.value.at(j * 3 + i) ==
            doctest::Approx(both.value.at(i * 2 + j)).epsilon(1e-15));
    }
  }

  LtnObject negated = eval_formula(parse_toy("not Q(y)"), env);
  CHECK(negated.value.at(0) == doctest::Approx(1.0 - sig_at(-5.0)).epsilon(1e-12));

  // disjunction with a closed operand broadcasts the scalar over the grid
  LtnObject mixed = eval_formula(parse_toy("Q(c) or Q(y)"), env);
  CHECK(mixed.value.shape() == Shape{2});
  const double qc = sig_at(-10.0);
  const double q0 = sig_at(-5.0);
  CHECK(mixed.value.at(0) == doctest::Approx(qc + q0 - qc * q0).epsilon(1e-12));
}

TEST_CASE("quantify reduces the right dimension") {
  Environment env = toy_env();
  LtnObject pxy = eval_formula(parse_toy("P(x,y)"), env);

  LtnObject ex_y = quantify(Quantifier::Exists, "y", pxy, env.semantics);
  CHECK(ex_y.value.shape() == Shape{3});
  CHECK(ex_y.free_vars == std::vector<std::string>{"x"});
  // row-wise p-mean with p_exists = 2
  for (std::size_t i = 0; i < 3; ++i) {
    const std::vector<double> row{pxy.value.at(i * 2), pxy.value.at(i * 2 + 1)};
    CHECK(ex_y.value.at(i) ==
          doctest::Approx(oracle::o_pmean(row, 2.0, env.semantics.epsilon)).epsilon(1e-12));
  }

  LtnObject fa_x = quantify(Quantifier::Forall, "x", pxy, env.semantics);
  CHECK(fa_x.value.shape() == Shape{2});
  CHECK(fa_x.free_vars == std::vector<std::string>{"y"});

  // quantifying the remaining variable yields a scalar
  LtnObject closed = quantify(Quantifier::Forall, "x", ex_y, env.semantics);
  CHECK(closed.value.is_scalar());
  CHECK(closed.free_vars.empty());

  CHECK_THROWS_AS(quantify(Quantifier::Exists, "z", pxy, env.semantics), Error);
  try {
    quantify(Quantifier::Exists, "z", pxy, env.semantics);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::QuantifyingAbsentVariable);
  }
}

TEST_CASE("forall over all-ones is one") {
  Environment env;
  env.semantics = SemanticsConfig{};
  env.bind_variable("x", Tensor::from_values({3, 1}, {1.0, 2.0, 3.0}));
  env.bind_predicate("T", 1, [](const std::vector<Tensor>& args) {
    return Tensor::full({args[0].shape()[0]}, 1.0);
  });
  Signature sig;
  sig.add_variable("x");
  sig.add_predicate("T", 1);
  LtnObject ones = eval_formula(parse_formula("T(x)", sig), env);
  for (std::size_t i = 0; i < 3; ++i) CHECK(ones.value.at(i) == 1.0);
  LtnObject all = eval_formula(parse_formula("forall x: T(x)", sig), env);
  // stability clamp keeps the aggregate within epsilon of exact truth
  CHECK(all.value.value() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("quantifier order matters but both match the axis oracle") {
  std::mt19937_64 rng(211);
  SemanticsConfig cfg;
  Environment env;
  env.semantics = cfg;
  env.bind_variable("x", Tensor::from_values({3, 1}, {0.0, 1.0, 2.0}));
  env.bind_variable("y", Tensor::from_values({2, 1}, {0.0, 1.0}));
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  std::vector<double> grid(6);
  for (double& v : grid) v = unit(rng);
  // table-lookup predicate: reads the truth for (x_i, y_j) from `grid`
  env.bind_predicate("W", 2, [grid](const std::vector<Tensor>& args) {
    const std::size_t batch = args[0].shape()[0];
    std::vector<double> out(batch);
    for (std::size_t k = 0; k < batch; ++k) {
      const std::size_t i = static_cast<std::size_t>(args[0].at(k));
      const std::size_t j = static_cast<std::size_t>(args[1].at(k));
      out[k] = grid[i * 2 + j];
    }
    return Tensor::from_values({batch}, out);
  });
  Signature sig;
  sig.add_variable("x");
  sig.add_variable("y");
  sig.add_predicate("W", 2);

  const double fa_ex =
      eval_formula(parse_formula("forall x: exists y: W(x,y)", sig), env).value.value();
  const double ex_fa =
      eval_formula(parse_formula("exists x: forall y: W(x,y)", sig), env).value.value();

  // oracle: aggregate axis by axis
  const double eps = cfg.epsilon;
  std::vector<double> per_x;
  for (std::size_t i = 0; i < 3; ++i) {
    per_x.push_back(oracle::o_pmean({grid[i * 2], grid[i * 2 + 1]}, cfg.p_exists, eps));
  }
  const double want_fa_ex = 1.0 - oracle::o_pmean({1.0 - per_x[0], 1.0 - per_x[1],
                                                   1.0 - per_x[2]},
                                                  cfg.p_forall, eps);
  std::vector<double> per_x2;
  for (std::size_t i = 0; i < 3; ++i) {
    per_x2.push_back(1.0 - oracle::o_pmean({1.0 - grid[i * 2], 1.0 - grid[i * 2 + 1]},
                                           cfg.p_forall, eps));
  }
  const double want_ex_fa = oracle::o_pmean(per_x2, cfg.p_exists, eps);

  CHECK(fa_ex == doctest::Approx(want_fa_ex).epsilon(1e-12));
  CHECK(ex_fa == doctest::Approx(want_ex_fa).epsilon(1e-12));
  CHECK(std::fabs(fa_ex - ex_fa) > 1e-6);  // generally different
}

TEST_CASE("free_vars_of") {
  const Signature sig = toy_sig();
  CHECK(free_vars_of(parse_formula("P(x,y)", sig)) == std::vector<std::string>{"x", "y"});
  CHECK(free_vars_of(parse_formula("forall x: P(x,y)", sig)) ==
        std::vector<std::string>{"y"});
  CHECK(free_vars_of(parse_formula("forall x: exists y: P(x,y) and Q(y)", sig)).empty());
  CHECK(free_vars_of(parse_formula("Q(y) and P(x,y)", sig)) ==
        std::vector<std::string>{"y", "x"});
  CHECK(free_vars_of(parse_formula("Q(f(y))", sig)) == std::vector<std::string>{"y"});
  // a quantifier only captures inside its own scope
  CHECK(free_vars_of(parse_formula("(forall x: Q(x)) and Q(x)", sig)) ==
        std::vector<std::string>{"x"});
}

TEST_CASE("rank bookkeeping") {
  Environment env = toy_env();
  for (const char* text : {"P(x,y)", "Q(y)", "P(x,y) and Q(y)", "not P(x,y)",
                           "P(x,y) implies Q(y)", "Q(c)"}) {
    LtnObject r = eval_formula(parse_toy(text), env);
    CHECK(r.value.rank() == r.free_vars.size());
  }
  LtnObject pxy = eval_formula(parse_toy("P(x,y)"), env);
  LtnObject q = quantify(Quantifier::Exists, "y", pxy, env.semantics);
  CHECK(q.value.rank() == pxy.value.rank() - 1);
}

TEST_CASE("canonical pipeline produces the expected scalar") {
  Environment env = toy_env();
  const double got =
      eval_formula(parse_toy("forall x: exists y: P(x,y) and Q(y)"), env).value.value();

  // oracle: per (i,j) conj, p-mean over j, error p-mean over i
  const SemanticsConfig cfg = env.semantics;
  std::vector<double> per_x;
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<double> per_y;
    for (std::size_t j = 0; j < 2; ++j) {
      const double p = sig_at(static_cast<double>(i) + (j == 0 ? 10.0 : 20.0));
      const double q = sig_at(j == 0 ? -5.0 : 5.0);
      per_y.push_back(p * q);
    }
    per_x.push_back(oracle::o_pmean(per_y, cfg.p_exists, cfg.epsilon));
  }
  const double want = 1.0 - oracle::o_pmean({1.0 - per_x[0], 1.0 - per_x[1], 1.0 - per_x[2]},
                                            cfg.p_forall, cfg.epsilon);
  CHECK(got == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("predicate output contract is enforced") {
  Environment env;
  env.bind_variable("x", Tensor::from_values({2, 1}, {1.0, 2.0}));
  env.bind_predicate("Bad", 1, [](const std::vector<Tensor>& args) {
    return Tensor::full({args[0].shape()[0]}, 1.5);
  });
  Signature sig;
  sig.add_variable("x");
  sig.add_predicate("Bad", 1);
  CHECK_THROWS_AS(eval_formula(parse_formula("Bad(x)", sig), env), Error);
  try {
    eval_formula(parse_formula("Bad(x)", sig), env);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfRangeTruth);
  }

  // wrong batch shape from the model is a shape error
  env.bind_predicate("Wrong", 1, [](const std::vector<Tensor>&) {
    return Tensor::from_values({3}, {0.5, 0.5, 0.5});
  });
  sig.add_predicate("Wrong", 1);
  CHECK_THROWS_AS(eval_formula(parse_formula("Wrong(x)", sig), env), Error);
}

TEST_CASE("function output feature shape is validated") {
  Environment env = toy_env();
  env.bind_function(
      "h", 1, [](const std::vector<Tensor>& args) { return concat_last({args[0], args[0]}); },
      {3});  // model actually yields feature width 2
  Signature sig = toy_sig();
  sig.add_function("h", 1);
  CHECK_THROWS_AS(eval_formula(parse_formula("Q(h(x))", sig), env), Error);
}

TEST_CASE("random formulas match the scalar oracle per family") {
  std::mt19937_64 rng(401);
  int checked = 0;
  for (int trial = 0; trial < 150; ++trial) {
    SemanticsConfig cfg;
    switch (trial % 3) {
      case 0: cfg.family = Family::Product; break;
      case 1: cfg.family = Family::Godel; break;
      default: cfg.family = Family::Lukasiewicz; break;
    }
    std::uniform_int_distribution<std::size_t> nv(1, 3);
    oracle::PairedWorld pw = oracle::make_paired_world(rng, 2, nv(rng), 4, cfg);
    std::uniform_int_distribution<std::size_t> depth(1, 4);
    FormulaAst f = oracle::random_formula(rng, pw.var_labels, depth(rng));
    CAPTURE(pretty_print(f));
    const double diff = oracle::compare_groundings(pw, f);
    REQUIRE(diff < 1e-9);
    ++checked;
  }
  CHECK(checked == 150);
}

TEST_CASE("gradients flow through grounding to model parameters") {
  // predicate with explicit weight tensors; check d(scalar truth)/d(param)
  std::mt19937_64 rng(419);
  std::uniform_real_distribution<double> unit(-0.8, 0.8);
  std::vector<double> wv(2), bv(1);
  for (double& v : wv) v = unit(rng);
  for (double& v : bv) v = unit(rng);
  Tensor w = Tensor::from_values({1, 2}, wv, true);
  Tensor b = Tensor::from_values({1}, bv, true);

  Environment env;
  env.bind_variable("x", Tensor::from_values({3, 2}, {0.1, -0.2, 0.4, 0.3, -0.5, 0.2}));
  env.bind_variable("y", Tensor::from_values({2, 2}, {0.6, -0.1, -0.3, 0.7}));
  env.bind_predicate("P", 2, [w, b](const std::vector<Tensor>& args) {
    Tensor joint = add(args[0], args[1]);  // [batch, 2]
    Tensor out = sigmoid(affine(w, joint, b));
    return reshape(out, {args[0].shape()[0]});
  });
  Signature sig;
  sig.add_variable("x");
  sig.add_variable("y");
  sig.add_predicate("P", 2);
  const FormulaAst f = parse_formula("forall x: exists y: P(x,y)", sig);

  auto value = [&] { return eval_formula(f, env).value.value(); };
  {
    Tape tape;
    tape.backward_from(eval_formula(f, env).value);
  }
  for (Tensor t : {w, b}) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double fd = testutil::central_diff(value, t.values_mut()[i]);
      REQUIRE(testutil::rel_err(t.grad()[i], fd) < 1e-4);
    }
  }
}

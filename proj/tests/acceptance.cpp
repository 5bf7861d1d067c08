// Acceptance gate: one line per criterion, exit code = number of failures.
// Run from the repository root (configs/ and data/ are resolved relatively).
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "realogic/config.hpp"
#include "realogic/learn.hpp"
#include "realogic/logic.hpp"
#include "realogic/parser.hpp"
#include "realogic/serialize.hpp"
#include "testutil.hpp"

using namespace realogic;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& why) {
    if (!cond && ok) {
      ok = false;
      detail = why;
    }
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// ---- criterion 1: grounding pipeline on hand-coded truth tables --------------

void pipeline_shapes(Check& c) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  std::vector<double> p_table(6), q_table(2);
  for (double& v : p_table) v = unit(rng);
  for (double& v : q_table) v = unit(rng);

  Environment env;
  env.bind_variable("x", Tensor::from_values({3, 1}, {0.0, 1.0, 2.0}));
  env.bind_variable("y", Tensor::from_values({2, 1}, {0.0, 1.0}));
  env.bind_predicate("P", 2, [p_table](const std::vector<Tensor>& args) {
    const std::size_t batch = args[0].shape()[0];
    std::vector<double> out(batch);
    for (std::size_t k = 0; k < batch; ++k) {
      out[k] = p_table[static_cast<std::size_t>(args[0].at(k)) * 2 +
                       static_cast<std::size_t>(args[1].at(k))];
    }
    return Tensor::from_values({batch}, out);
  });
  env.bind_predicate("Q", 1, [q_table](const std::vector<Tensor>& args) {
    const std::size_t batch = args[0].shape()[0];
    std::vector<double> out(batch);
    for (std::size_t k = 0; k < batch; ++k) {
      out[k] = q_table[static_cast<std::size_t>(args[0].at(k))];
    }
    return Tensor::from_values({batch}, out);
  });

  Signature sig;
  sig.add_variable("x");
  sig.add_variable("y");
  sig.add_predicate("P", 2);
  sig.add_predicate("Q", 1);

  const SemanticsConfig cfg = env.semantics;

  LtnObject p = eval_formula(parse_formula("P(x,y)", sig), env);
  c.expect(p.value.shape() == Shape{3, 2}, "P grid shape");
  LtnObject q = eval_formula(parse_formula("Q(y)", sig), env);
  c.expect(q.value.shape() == Shape{2}, "Q vector shape");
  LtnObject both = eval_formula(parse_formula("P(x,y) and Q(y)", sig), env);
  c.expect(both.value.shape() == Shape{3, 2}, "conjunction grid shape");
  LtnObject some = quantify(Quantifier::Exists, "y", both, cfg);
  c.expect(some.value.shape() == Shape{3}, "exists-reduced shape");
  LtnObject all = quantify(Quantifier::Forall, "x", some, cfg);
  c.expect(all.value.is_scalar(), "fully quantified scalar");

  // nested-loop oracle over the same tables
  double max_diff = 0.0;
  std::vector<double> per_x;
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<double> per_y;
    for (std::size_t j = 0; j < 2; ++j) {
      max_diff = std::max(max_diff, std::fabs(p.value.at(i * 2 + j) - p_table[i * 2 + j]));
      max_diff = std::max(max_diff, std::fabs(q.value.at(j) - q_table[j]));
      const double want =
          oracle::o_conj(cfg.family, p_table[i * 2 + j], q_table[j]);
      max_diff = std::max(max_diff, std::fabs(both.value.at(i * 2 + j) - want));
      per_y.push_back(want);
    }
    const double want_some = oracle::o_exists(cfg, per_y);
    max_diff = std::max(max_diff, std::fabs(some.value.at(i) - want_some));
    per_x.push_back(want_some);
  }
  max_diff = std::max(max_diff, std::fabs(all.value.value() - oracle::o_forall(cfg, per_x)));
  c.expect(max_diff <= 1e-12, "values vs oracle, max diff " + fmt(max_diff));
}

// ---- criterion 2: operator algebra --------------------------------------------

void operator_algebra(Check& c) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<Family> families{Family::Product, Family::Godel, Family::Lukasiewicz};
  const int n = 10000;

  for (Family fam : families) {
    SemanticsConfig cfg;
    cfg.family = fam;
    auto s = [](double v) { return Tensor::scalar(v); };
    for (int i = 0; i < n && c.ok; ++i) {
      const double u = unit(rng), v = unit(rng), w = unit(rng);
      const double cu = conj(cfg, s(u), s(v)).value();
      const double du = disj(cfg, s(u), s(v)).value();
      const double iu = implies(cfg, s(u), s(v)).value();
      const double fu = iff(cfg, s(u), s(v)).value();
      const double nu = neg(cfg, s(u)).value();
      for (double r : {cu, du, iu, fu, nu}) {
        c.expect(r >= 0.0 && r <= 1.0, "range closure");
      }
      c.expect(std::fabs(cu - conj(cfg, s(v), s(u)).value()) <= 1e-12, "conj commutativity");
      c.expect(std::fabs(du - disj(cfg, s(v), s(u)).value()) <= 1e-12, "disj commutativity");
      const double assoc_l = conj(cfg, s(cu), s(w)).value();
      const double assoc_r = conj(cfg, s(u), conj(cfg, s(v), s(w))).value();
      c.expect(std::fabs(assoc_l - assoc_r) <= 1e-12, "conj associativity");
      const double dassoc_l = disj(cfg, s(du), s(w)).value();
      const double dassoc_r = disj(cfg, s(u), disj(cfg, s(v), s(w))).value();
      c.expect(std::fabs(dassoc_l - dassoc_r) <= 1e-12, "disj associativity");
      const double lo = std::min(v, w), hi = std::max(v, w);
      c.expect(conj(cfg, s(u), s(lo)).value() <= conj(cfg, s(u), s(hi)).value() + 1e-12,
               "conj monotonicity");
      c.expect(disj(cfg, s(u), s(lo)).value() <= disj(cfg, s(u), s(hi)).value() + 1e-12,
               "disj monotonicity");
      c.expect(std::fabs(conj(cfg, s(u), s(1.0)).value() - u) <= 1e-12, "neutral element");
      c.expect(std::fabs(conj(cfg, s(u), s(0.0)).value()) <= 1e-12, "annihilator");
      c.expect(std::fabs(neg(cfg, s(nu)).value() - u) <= 1e-12, "double negation");
      if (fam == Family::Product) {
        const double dm_l = neg(cfg, conj(cfg, s(u), s(v))).value();
        const double dm_r = disj(cfg, s(1.0 - u), s(1.0 - v)).value();
        c.expect(std::fabs(dm_l - dm_r) <= 1e-12, "De Morgan");
        const double dec = disj(cfg, s(1.0 - u), s(v)).value();
        c.expect(std::fabs(iu - dec) <= 1e-12, "implication decomposition");
      }
      if (fam == Family::Godel) {
        c.expect(conj(cfg, s(u), s(u)).value() == u, "conj idempotence");
        c.expect(disj(cfg, s(u), s(u)).value() == u, "disj idempotence");
      }
    }
  }
}

// ---- criterion 3: quantifier aggregation properties ---------------------------

void quantifier_properties(Check& c) {
  std::mt19937_64 rng(131);
  for (int trial = 0; trial < 1000 && c.ok; ++trial) {
    std::vector<double> v = testutil::random_truths(rng, 8, 1e-6, 1.0 - 1e-6);
    Tensor body = Tensor::from_values({v.size()}, std::vector<double>(v));
    const double mn = *std::min_element(v.begin(), v.end());
    const double mx = *std::max_element(v.begin(), v.end());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());

    double prev = 0.0;
    for (double p : {1.0, 2.0, 6.0}) {
      SemanticsConfig cfg;
      cfg.p_exists = p;
      cfg.p_forall = p;
      const double ex = exists_agg(cfg, body, 0).value();
      const double fa = forall_agg(cfg, body, 0).value();
      c.expect(prev <= ex + 1e-12, "exists p-monotonicity");
      c.expect(ex <= mx + 1e-12, "exists below max");
      prev = ex;
      c.expect(mn <= fa + 1e-12 && fa <= mean + 1e-12, "forall squeeze");
      c.expect(mean <= ex + 1e-12, "exists squeeze");

      // complement identity: forall(u) == 1 - exists-style p-mean of (1 - u)
      std::vector<double> comp(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) comp[i] = 1.0 - v[i];
      const std::size_t n = comp.size();
      Tensor comp_t = Tensor::from_values({n}, std::move(comp));
      const double via_exists = 1.0 - reduce_pmean(comp_t, 0, cfg.p_forall).value();
      c.expect(std::fabs(fa - via_exists) <= 1e-12,
               "complement identity, diff " + fmt(std::fabs(fa - via_exists)));
    }
  }
}

// ---- criterion 4: gradient correctness -----------------------------------------

void gradient_correctness(Check& c) {
  std::mt19937_64 rng(577);
  std::uniform_real_distribution<double> interior(0.05, 0.95);
  const double h = 1e-5;

  // (a) every fuzzy operator at 20+ random points per family
  const std::vector<Family> families{Family::Product, Family::Godel, Family::Lukasiewicz};
  for (Family fam : families) {
    SemanticsConfig cfg;
    cfg.family = fam;
    for (int point = 0; point < 20 && c.ok; ++point) {
      double uv = interior(rng), vv = interior(rng);
      while (std::fabs(uv - vv) < 1e-3 || std::fabs(uv + vv - 1.0) < 1e-3) {
        vv = interior(rng);
      }
      Tensor u = Tensor::scalar(uv, true);
      Tensor v = Tensor::scalar(vv, true);
      auto probe = [&](const char* label, auto&& op, bool binary) {
        auto value = [&] { return op().value(); };
        u.zero_grad();
        v.zero_grad();
        {
          Tape tape;
          tape.backward_from(op());
        }
        const double fd_u = testutil::central_diff(value, u.values_mut()[0], h);
        c.expect(testutil::rel_err(u.grad()[0], fd_u) < 1e-4, std::string(label) + " d/du");
        if (binary) {
          const double fd_v = testutil::central_diff(value, v.values_mut()[0], h);
          c.expect(testutil::rel_err(v.grad()[0], fd_v) < 1e-4, std::string(label) + " d/dv");
        }
      };
      probe("conj", [&] { return conj(cfg, u, v); }, true);
      probe("disj", [&] { return disj(cfg, u, v); }, true);
      probe("implies", [&] { return implies(cfg, u, v); }, true);
      probe("iff", [&] { return iff(cfg, u, v); }, true);
      probe("neg", [&] { return neg(cfg, u); }, false);
    }
    // aggregators on tie-free vectors
    for (int point = 0; point < 20 && c.ok; ++point) {
      std::vector<double> vals = testutil::random_truths(rng, 5, 0.05, 0.95);
      std::sort(vals.begin(), vals.end());
      bool distinct = true;
      for (std::size_t k = 1; k < vals.size(); ++k) {
        distinct &= vals[k] - vals[k - 1] > 1e-3;
      }
      if (!distinct) continue;
      Tensor body = Tensor::from_values({vals.size()}, std::vector<double>(vals), true);
      for (int which = 0; which < 2; ++which) {
        auto op = [&] {
          return which == 0 ? exists_agg(cfg, body, 0) : forall_agg(cfg, body, 0);
        };
        auto value = [&] { return op().value(); };
        body.zero_grad();
        {
          Tape tape;
          tape.backward_from(op());
        }
        for (std::size_t k = 0; k < vals.size(); ++k) {
          const double fd = testutil::central_diff(value, body.values_mut()[k], h);
          c.expect(testutil::rel_err(body.grad()[k], fd) < 1e-4,
                   which == 0 ? "exists_agg gradient" : "forall_agg gradient");
        }
      }
    }
  }
  if (!c.ok) return;

  // (b) the canonical two-variable formula w.r.t. predicate parameters
  Signature sig;
  sig.add_variable("x");
  sig.add_variable("y");
  sig.add_predicate("P", 2);
  sig.add_predicate("Q", 1);
  const FormulaAst formula = parse_formula("forall x: exists y: P(x,y) and Q(y)", sig);
  std::uniform_real_distribution<double> weight(-1.0, 1.0);
  for (int point = 0; point < 20 && c.ok; ++point) {
    std::vector<double> xv(6), yv(4), wv(4), bv(1), vv(2), cv(1);
    for (double& t : xv) t = weight(rng);
    for (double& t : yv) t = weight(rng);
    for (double& t : wv) t = weight(rng);
    for (double& t : bv) t = weight(rng);
    for (double& t : vv) t = weight(rng);
    for (double& t : cv) t = weight(rng);
    Tensor w = Tensor::from_values({1, 4}, wv, true);
    Tensor b = Tensor::from_values({1}, bv, true);
    Tensor v2 = Tensor::from_values({1, 2}, vv, true);
    Tensor c2 = Tensor::from_values({1}, cv, true);

    Environment env;
    env.bind_variable("x", Tensor::from_values({3, 2}, xv));
    env.bind_variable("y", Tensor::from_values({2, 2}, yv));
    env.bind_predicate("P", 2, [w, b](const std::vector<Tensor>& args) {
      Tensor joint = concat_last({args[0], args[1]});
      return reshape(sigmoid(affine(w, joint, b)), {args[0].shape()[0]});
    });
    env.bind_predicate("Q", 1, [v2, c2](const std::vector<Tensor>& args) {
      return reshape(sigmoid(affine(v2, args[0], c2)), {args[0].shape()[0]});
    });

    auto value = [&] { return eval_formula(formula, env).value.value(); };
    {
      Tape tape;
      tape.backward_from(eval_formula(formula, env).value);
    }
    for (Tensor t : {w, b, v2, c2}) {
      for (std::size_t i = 0; i < t.size(); ++i) {
        const double fd = testutil::central_diff(value, t.values_mut()[i], h);
        c.expect(testutil::rel_err(t.grad()[i], fd) < 1e-4, "formula gradient");
      }
    }
  }
  if (!c.ok) return;

  // (c) knowledge-base loss w.r.t. a two-hidden-layer network, 20 inits
  for (int point = 0; point < 20 && c.ok; ++point) {
    Signature bsig;
    bsig.add_variable("dog");
    bsig.add_variable("cat");
    bsig.add_predicate("Dog", 1);
    std::mt19937_64 init_rng(9000 + point);
    ParamStore params;
    auto net = std::make_shared<MlpModel>("Dog", std::vector<std::size_t>{2, 16, 16, 1},
                                          OutputSquash::Sigmoid, params, init_rng);
    Environment env;
    std::vector<double> dog_rows(8 * 2), cat_rows(8 * 2);
    std::normal_distribution<double> dog_dist(0.0, 1.0), cat_dist(4.0, 1.0);
    for (double& t : dog_rows) t = dog_dist(init_rng);
    for (double& t : cat_rows) t = cat_dist(init_rng);
    env.bind_variable("dog", Tensor::from_values({8, 2}, dog_rows));
    env.bind_variable("cat", Tensor::from_values({8, 2}, cat_rows));
    env.bind_predicate("Dog", 1, predicate_model(net));
    KnowledgeBase kb;
    kb.add_formula("all_dogs", parse_formula("forall dog: Dog(dog)", bsig));
    kb.add_formula("no_cat_dogs", parse_formula("forall cat: not Dog(cat)", bsig));
    const SemanticsConfig cfg;
    GradCheckReport report =
        gradient_check([&] { return loss(kb, env, cfg); }, params.tensors(), h);
    c.expect(report.components == params.total_size(),
             "gradient check did not cover every parameter component");
    c.expect(report.max_rel_err < 1e-4,
             "loss gradient, max rel err " + fmt(report.max_rel_err));
  }
}

// ---- criterion 5: grounding equivalence ----------------------------------------

void grounding_equivalence(Check& c) {
  std::mt19937_64 rng(811);
  for (int trial = 0; trial < 500 && c.ok; ++trial) {
    SemanticsConfig cfg;
    switch (trial % 3) {
      case 0: cfg.family = Family::Product; break;
      case 1: cfg.family = Family::Godel; break;
      default: cfg.family = Family::Lukasiewicz; break;
    }
    std::uniform_int_distribution<std::size_t> nv(1, 3), depth(1, 4);
    const std::size_t n_vars = nv(rng);
    const std::size_t max_depth = depth(rng);
    oracle::PairedWorld pw = oracle::make_paired_world(rng, 2, n_vars, 4, cfg);
    FormulaAst f =
        oracle::close_formula(oracle::random_formula(rng, pw.var_labels, max_depth), rng);
    const double diff = oracle::compare_groundings(pw, f);
    c.expect(diff < 1e-9,
             "formula '" + pretty_print(f) + "' diff " + fmt(diff));
  }
}

// ---- criterion 6: end-to-end training on the bundled dataset -------------------

std::string train_once(Check& c) {
  ExperimentConfig cfg = load_config("configs/blobs.json");
  Experiment ex = build_experiment(cfg, "configs");
  BatchSampler sampler(ex.datasets, ex.config.training.batch_size,
                       ex.seed ^ 0x9e3779b97f4a7c15ULL);
  Optimizer opt = Optimizer::adam(ex.config.training.lr);
  TrainLog log = train(ex.kb, ex.env, sampler, ex.params, opt, ex.config.semantics,
                       ex.config.training.epochs);
  for (const auto& [label, data] : ex.datasets) ex.env.bind_variable(label, data);
  Satisfaction sat = satisfaction(ex.kb, ex.env, ex.config.semantics);
  c.expect(sat.aggregate.value() >= 0.9,
           "final aggregate " + fmt(sat.aggregate.value()) + " < 0.9");
  return metrics_csv_string(log);
}

void training_endtoend(Check& c) {
  const std::string first = train_once(c);
  if (!c.ok) return;
  const std::string second = train_once(c);
  c.expect(first == second, "training log not reproducible under the fixed seed");
}

// ---- criterion 7: parser round-trip and precedence -----------------------------

void parser_suite(Check& c) {
  Signature sig;
  for (const char* v : {"x", "y", "z"}) sig.add_variable(v);
  for (const char* k : {"c", "d"}) sig.add_constant(k);
  sig.add_predicate("P", 2);
  sig.add_predicate("Q", 1);
  sig.add_predicate("R", 1);
  sig.add_function("f", 1);
  sig.add_function("g", 2);

  // canonical formula parses to the expected structure
  const FormulaAst want = ast::forall(
      "x", ast::exists("y", ast::and_(ast::atom("P", {ast::var("x"), ast::var("y")}),
                                      ast::atom("Q", {ast::var("y")}))));
  c.expect(parse_formula("forall x: exists y: P(x,y) and Q(y)", sig) == want,
           "canonical formula structure");

  // documented precedence table, adjacent pairs
  auto differs = [&](const std::string& a, const std::string& b) {
    return !(parse_formula(a, sig) == parse_formula(b, sig));
  };
  c.expect(differs("not Q(x) and R(x)", "not (Q(x) and R(x))"), "not vs and");
  c.expect(differs("Q(x) or R(x) and Q(y)", "(Q(x) or R(x)) and Q(y)"), "and vs or");
  c.expect(differs("Q(x) implies R(x) or Q(y)", "(Q(x) implies R(x)) or Q(y)"),
           "or vs implies");
  c.expect(differs("Q(x) iff R(x) implies Q(y)", "(Q(x) iff R(x)) implies Q(y)"),
           "implies vs iff");
  c.expect(parse_formula("Q(x) implies R(x) implies Q(y)", sig) ==
               ast::implies_(ast::atom("Q", {ast::var("x")}),
                             ast::implies_(ast::atom("R", {ast::var("x")}),
                                           ast::atom("Q", {ast::var("y")}))),
           "implies right associativity");
  c.expect(parse_formula("Q(x) and R(x) and Q(y)", sig) ==
               ast::and_(ast::and_(ast::atom("Q", {ast::var("x")}),
                                   ast::atom("R", {ast::var("x")})),
                         ast::atom("Q", {ast::var("y")})),
           "and left associativity");

  // 1000 round-trips over random valid trees
  std::mt19937_64 rng(4242);
  const std::vector<std::string> vars{"x", "y", "z"};
  std::function<TermAst(std::size_t)> term = [&](std::size_t d) -> TermAst {
    switch (rng() % (d > 0 ? 4 : 2)) {
      case 0: return ast::var(vars[rng() % vars.size()]);
      case 1: return ast::constant(rng() % 2 ? "c" : "d");
      case 2: return ast::func("f", {term(d - 1)});
      default: return ast::func("g", {term(d - 1), term(d - 1)});
    }
  };
  std::function<FormulaAst(std::size_t)> gen = [&](std::size_t d) -> FormulaAst {
    switch (rng() % (d > 0 ? 8 : 2)) {
      case 0: return ast::atom("Q", {term(1)});
      case 1: return ast::atom("P", {term(1), term(1)});
      case 2: return ast::not_(gen(d - 1));
      case 3: return ast::and_(gen(d - 1), gen(d - 1));
      case 4: return ast::or_(gen(d - 1), gen(d - 1));
      case 5: return ast::implies_(gen(d - 1), gen(d - 1));
      case 6: return ast::iff_(gen(d - 1), gen(d - 1));
      default:
        return ast::quant(rng() % 2 ? Quantifier::Forall : Quantifier::Exists,
                          vars[rng() % vars.size()], gen(d - 1));
    }
  };
  for (int i = 0; i < 1000 && c.ok; ++i) {
    const FormulaAst f = gen(6);
    const std::string text = pretty_print(f);
    c.expect(parse_formula(text, sig) == f, "round-trip failed for: " + text);
  }
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Check&)> run;
    double limit_s;
  };
  const std::vector<Criterion> criteria{
      {1, "grounding pipeline shapes and values vs nested-loop oracle", pipeline_shapes, 1.0},
      {2, "operator algebra over 10^4 samples per family", operator_algebra, 10.0},
      {3, "quantifier aggregation properties over 10^3 vectors", quantifier_properties, 0.0},
      {4, "analytic gradients vs central differences", gradient_correctness, 30.0},
      {5, "500 random formulas vs brute-force evaluator", grounding_equivalence, 0.0},
      {6, "two-blob training reaches 0.9 satisfaction, reproducibly", training_endtoend, 30.0},
      {7, "parser round-trip and precedence table", parser_suite, 0.0},
  };

  int failures = 0;
  for (const Criterion& cr : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.run(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (cr.limit_s > 0.0 && elapsed > cr.limit_s) {
      check.expect(false, "runtime " + fmt(elapsed) + " s exceeds " + fmt(cr.limit_s) + " s");
    }
    std::printf("criterion %d [%s] %.3f s: %s%s\n", cr.id, check.ok ? "PASS" : "FAIL",
                elapsed, cr.name, check.ok ? "" : (" -- " + check.detail).c_str());
    failures += check.ok ? 0 : 1;
  }
  return failures;
}

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "realogic/ast.hpp"
#include "realogic/fuzzy.hpp"
#include "realogic/logic.hpp"
#include "realogic/tensor.hpp"

namespace realogic {

// Named learnable tensors, kept in registration order. Entries share storage
// with the tensors held by the models that registered them.
class ParamStore {
 public:
  // Marks the tensor requires_grad and returns the shared handle.
  // Errors: DuplicateName.
  Tensor register_parameter(const std::string& name, Tensor t);

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  Tensor* find(const std::string& name);
  std::vector<Tensor> tensors() const;

  void zero_grad();
  std::size_t total_size() const;
  std::size_t count() const { return entries_.size(); }

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

enum class OutputSquash { Sigmoid, None };

// Fully connected network: affine layers with elu between them, optional
// sigmoid on the output. widths = [input, hidden..., output]. Weights use a
// fan-balanced uniform init drawn from rng; biases start at zero.
class MlpModel {
 public:
  MlpModel(const std::string& name, std::vector<std::size_t> widths, OutputSquash squash,
           ParamStore& params, std::mt19937_64& rng);

  Tensor forward(const Tensor& input) const;  // [..., in] -> [..., out]

  std::size_t input_dim() const { return widths_.front(); }
  std::size_t output_dim() const { return widths_.back(); }

 private:
  std::vector<std::size_t> widths_;
  std::vector<Tensor> weights_;
  std::vector<Tensor> biases_;
  OutputSquash squash_;
};

// Wraps a network as a grounded symbol body; argument features are
// concatenated along the last axis. Predicate mode requires output width 1
// and squeezes [batch, 1] down to [batch].
GroundModel predicate_model(std::shared_ptr<MlpModel> net);
GroundModel function_model(std::shared_ptr<MlpModel> net);

// Learnable constant init, uniform in [-0.1, 0.1].
Tensor init_learnable_constant(Shape shape, std::mt19937_64& rng);

struct NamedFormula {
  std::string name;
  FormulaAst formula;
};

// Named closed formulas. Admission rejects open formulas and duplicate names.
class KnowledgeBase {
 public:
  // Errors: FormulaNotClosed, DuplicateName.
  void add_formula(const std::string& name, FormulaAst formula);

  const std::vector<NamedFormula>& formulas() const { return formulas_; }
  bool empty() const { return formulas_.empty(); }
  std::size_t size() const { return formulas_.size(); }

 private:
  std::vector<NamedFormula> formulas_;
};

struct Satisfaction {
  std::vector<std::string> names;
  std::vector<Tensor> truths;  // scalar per formula, graph-connected
  Tensor aggregate;            // scalar
};

// Evaluates every formula to a scalar truth and aggregates them.
// Errors: EmptyKnowledgeBase plus anything the grounding raises.
Satisfaction satisfaction(const KnowledgeBase& kb, const Environment& env,
                          const SemanticsConfig& cfg);

// 1 - aggregate satisfaction; scalar in [0,1], differentiable w.r.t. params.
Tensor loss(const KnowledgeBase& kb, const Environment& env, const SemanticsConfig& cfg);

// sgd (optional momentum) and adam (bias-corrected). step() consumes the
// gradients and clears them.
class Optimizer {
 public:
  static Optimizer sgd(double lr, double momentum = 0.0);
  static Optimizer adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                        double eps = 1e-8);

  void step(ParamStore& params);
  std::size_t steps_taken() const { return step_count_; }

 private:
  enum class Kind { Sgd, Adam };
  Optimizer(Kind kind) : kind_(kind) {}

  Kind kind_;
  double lr_ = 0.0;
  double momentum_ = 0.0;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::size_t step_count_ = 0;
  std::map<std::string, std::vector<double>> velocity_;
  std::map<std::string, std::vector<double>> m_;
  std::map<std::string, std::vector<double>> v_;
};

// One dataset per variable label ([n, feat...]). Every epoch reshuffles each
// dataset independently (deterministic given the seed) and the datasets are
// walked in parallel, so steps_per_epoch is the smallest ceil(n/B) across
// datasets. With no datasets there is one step per epoch and empty batches.
class BatchSampler {
 public:
  // Errors: EmptyBatch (batch_size == 0), ShapeMismatch (rank-0 dataset).
  BatchSampler(std::vector<std::pair<std::string, Tensor>> datasets,
               std::size_t batch_size, std::uint64_t seed);

  std::size_t steps_per_epoch() const;
  void start_epoch();
  std::vector<std::pair<std::string, Tensor>> batch(std::size_t step) const;

 private:
  struct Entry {
    std::string label;
    Tensor data;
    std::vector<std::size_t> order;
  };

  std::vector<Entry> entries_;
  std::size_t batch_size_;
  std::mt19937_64 rng_;
};

struct EpochRecord {
  std::size_t epoch = 0;            // 1-based
  double mean_loss = 0.0;           // arithmetic mean over the epoch's batches
  double sat_aggregate = 0.0;       // mean over batches
  std::vector<double> formula_sat;  // per formula, mean over batches
};

struct TrainLog {
  std::vector<std::string> formula_names;
  std::vector<EpochRecord> epochs;
};

// Gradient descent on loss = 1 - sat_agg. Each step rebinds the sampled
// variables in env, builds the graph on a fresh tape, backpropagates and
// applies one optimizer step. Deterministic given the sampler seed.
// Errors: NonFiniteLoss (fatal, with epoch/step context).
TrainLog train(const KnowledgeBase& kb, Environment& env, BatchSampler& sampler,
               ParamStore& params, Optimizer& opt, const SemanticsConfig& cfg,
               std::size_t epochs);

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t components = 0;
};

// Central-difference check of d(loss)/d(component) for every component of
// every parameter: rel_err = |analytic - fd| / max(1e-8, |analytic|, |fd|).
// loss_fn must rebuild the value from scratch on every call and must not open
// a tape of its own.
GradCheckReport gradient_check(const std::function<Tensor()>& loss_fn,
                               const std::vector<Tensor>& params, double h = 1e-5);

}  // namespace realogic

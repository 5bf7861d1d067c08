#include "realogic/learn.hpp"

#include <algorithm>
#include <cmath>

#include "realogic/errors.hpp"

namespace realogic {

Tensor ParamStore::register_parameter(const std::string& name, Tensor t) {
  for (const auto& [n, _] : entries_) {
    if (n == name) raise(ErrorCode::DuplicateName, "parameter '" + name + "' already registered");
  }
  t.set_requires_grad(true);
  entries_.emplace_back(name, t);
  return t;
}

Tensor* ParamStore::find(const std::string& name) {
  for (auto& [n, t] : entries_) {
    if (n == name) return &t;
  }
  return nullptr;
}

std::vector<Tensor> ParamStore::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& [_, t] : entries_) out.push_back(t);
  return out;
}

void ParamStore::zero_grad() {
  for (auto& [_, t] : entries_) t.zero_grad();
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.size();
  return n;
}

MlpModel::MlpModel(const std::string& name, std::vector<std::size_t> widths,
                   OutputSquash squash, ParamStore& params, std::mt19937_64& rng)
    : widths_(std::move(widths)), squash_(squash) {
  if (widths_.size() < 2) {
    raise(ErrorCode::ConfigError, "network '" + name + "' needs at least input and output widths");
  }
  for (std::size_t w : widths_) {
    if (w == 0) raise(ErrorCode::ConfigError, "network '" + name + "' has a zero-width layer");
  }
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    std::size_t fan_in = widths_[l];
    std::size_t fan_out = widths_[l + 1];
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    std::vector<double> w(fan_out * fan_in);
    for (double& x : w) x = dist(rng);
    std::string suffix = std::to_string(l);
    weights_.push_back(params.register_parameter(
        name + ".w" + suffix, Tensor::from_values({fan_out, fan_in}, std::move(w))));
    biases_.push_back(params.register_parameter(
        name + ".b" + suffix, Tensor::zeros({fan_out})));
  }
}

Tensor MlpModel::forward(const Tensor& input) const {
  if (input.rank() < 1 || input.shape().back() != widths_.front()) {
    raise(ErrorCode::ShapeMismatch,
          "network expects trailing feature dim " + std::to_string(widths_.front()) +
              ", got input shape " + shape_to_string(input.shape()));
  }
  Tensor h = input;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = affine(weights_[l], h, biases_[l]);
    if (l + 1 < weights_.size()) h = elu(h);
  }
  if (squash_ == OutputSquash::Sigmoid) h = sigmoid(h);
  return h;
}

namespace {

Tensor concat_args(const std::vector<Tensor>& args) {
  if (args.empty()) raise(ErrorCode::ArityMismatch, "model applied to zero arguments");
  std::vector<Tensor> feats;
  feats.reserve(args.size());
  for (const Tensor& a : args) {
    // Arguments arrive as [batch, feat...]; flatten features to one axis.
    if (a.rank() < 1) raise(ErrorCode::ShapeMismatch, "model argument must have a batch dim");
    std::size_t batch = a.shape()[0];
    std::size_t feat = a.size() / batch;
    feats.push_back(a.rank() == 2 ? a : reshape(a, {batch, feat}));
  }
  return feats.size() == 1 ? feats[0] : concat_last(feats);
}

}  // namespace

GroundModel predicate_model(std::shared_ptr<MlpModel> net) {
  if (net->output_dim() != 1) {
    raise(ErrorCode::ConfigError, "predicate network must have output width 1, got " +
                                      std::to_string(net->output_dim()));
  }
  return [net](const std::vector<Tensor>& args) {
    Tensor x = concat_args(args);
    Tensor out = net->forward(x);
    return reshape(out, {out.shape()[0]});
  };
}

GroundModel function_model(std::shared_ptr<MlpModel> net) {
  return [net](const std::vector<Tensor>& args) { return net->forward(concat_args(args)); };
}

Tensor init_learnable_constant(Shape shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-0.1, 0.1);
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = dist(rng);
  return Tensor::from_values(std::move(shape), std::move(v));
}

void KnowledgeBase::add_formula(const std::string& name, FormulaAst formula) {
  for (const NamedFormula& f : formulas_) {
    if (f.name == name) raise(ErrorCode::DuplicateName, "formula '" + name + "' already present");
  }
  std::vector<std::string> fv = free_vars_of(formula);
  if (!fv.empty()) {
    std::string detail = "formula '" + name + "' is not closed: free variable";
    if (fv.size() > 1) detail += "s";
    for (std::size_t i = 0; i < fv.size(); ++i) detail += (i == 0 ? " " : ", ") + fv[i];
    raise(ErrorCode::FormulaNotClosed, detail);
  }
  formulas_.push_back(NamedFormula{name, std::move(formula)});
}

Satisfaction satisfaction(const KnowledgeBase& kb, const Environment& env,
                          const SemanticsConfig& cfg) {
  if (kb.empty()) raise(ErrorCode::EmptyKnowledgeBase, "knowledge base has no formulas");
  Environment scoped = env;
  scoped.semantics = cfg;
  Satisfaction out;
  for (const NamedFormula& f : kb.formulas()) {
    LtnObject r = eval_formula(f.formula, scoped);
    if (!r.free_vars.empty()) {
      raise(ErrorCode::FormulaNotClosed,
            "formula '" + f.name + "' is not closed: free variable " + r.free_vars[0]);
    }
    out.names.push_back(f.name);
    out.truths.push_back(r.value);
  }
  out.aggregate = sat_agg(cfg, out.truths);
  return out;
}

Tensor loss(const KnowledgeBase& kb, const Environment& env, const SemanticsConfig& cfg) {
  return neg_complement(satisfaction(kb, env, cfg).aggregate);
}

Optimizer Optimizer::sgd(double lr, double momentum) {
  Optimizer o(Kind::Sgd);
  o.lr_ = lr;
  o.momentum_ = momentum;
  return o;
}

Optimizer Optimizer::adam(double lr, double beta1, double beta2, double eps) {
  Optimizer o(Kind::Adam);
  o.lr_ = lr;
  o.beta1_ = beta1;
  o.beta2_ = beta2;
  o.eps_ = eps;
  return o;
}

void Optimizer::step(ParamStore& params) {
  ++step_count_;
  double t = static_cast<double>(step_count_);
  for (const auto& [name, entry] : params.entries()) {
    Tensor tensor = entry;  // shared storage
    std::span<const double> g = tensor.grad();
    std::span<double> x = tensor.values_mut();
    if (kind_ == Kind::Sgd) {
      std::vector<double>& vel = velocity_[name];
      if (vel.size() != g.size()) vel.assign(g.size(), 0.0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        vel[i] = momentum_ * vel[i] + g[i];
        x[i] -= lr_ * vel[i];
      }
    } else {
      std::vector<double>& m = m_[name];
      std::vector<double>& v = v_[name];
      if (m.size() != g.size()) m.assign(g.size(), 0.0);
      if (v.size() != g.size()) v.assign(g.size(), 0.0);
      double bc1 = 1.0 - std::pow(beta1_, t);
      double bc2 = 1.0 - std::pow(beta2_, t);
      for (std::size_t i = 0; i < g.size(); ++i) {
        m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
        v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
        double mhat = m[i] / bc1;
        double vhat = v[i] / bc2;
        x[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }
  params.zero_grad();
}

BatchSampler::BatchSampler(std::vector<std::pair<std::string, Tensor>> datasets,
                           std::size_t batch_size, std::uint64_t seed)
    : batch_size_(batch_size), rng_(seed) {
  if (batch_size_ == 0) raise(ErrorCode::EmptyBatch, "batch size must be at least 1");
  for (auto& [label, data] : datasets) {
    if (data.rank() < 1) {
      raise(ErrorCode::ShapeMismatch,
            "dataset for '" + label + "' must have a leading individuals dimension");
    }
    Entry e{label, data, {}};
    e.order.resize(data.shape()[0]);
    for (std::size_t i = 0; i < e.order.size(); ++i) e.order[i] = i;
    entries_.push_back(std::move(e));
  }
}

std::size_t BatchSampler::steps_per_epoch() const {
  if (entries_.empty()) return 1;
  std::size_t steps = SIZE_MAX;
  for (const Entry& e : entries_) {
    std::size_t n = e.data.shape()[0];
    steps = std::min(steps, (n + batch_size_ - 1) / batch_size_);
  }
  return steps;
}

void BatchSampler::start_epoch() {
  for (Entry& e : entries_) {
    // Portable Fisher-Yates so logs are byte-stable across standard libraries.
    for (std::size_t i = e.order.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(rng_() % i);
      std::swap(e.order[i - 1], e.order[j]);
    }
  }
}

std::vector<std::pair<std::string, Tensor>> BatchSampler::batch(std::size_t step) const {
  if (step >= steps_per_epoch()) {
    raise(ErrorCode::EmptyBatch, "step " + std::to_string(step) + " is past the epoch's " +
                                     std::to_string(steps_per_epoch()) + " steps");
  }
  std::vector<std::pair<std::string, Tensor>> out;
  for (const Entry& e : entries_) {
    std::size_t n = e.data.shape()[0];
    std::size_t lo = step * batch_size_;
    std::size_t hi = std::min(lo + batch_size_, n);
    std::size_t rows = hi - lo;
    std::size_t row_size = e.data.size() / n;
    std::vector<double> vals(rows * row_size);
    for (std::size_t r = 0; r < rows; ++r) {
      std::size_t src = e.order[lo + r];
      std::copy_n(e.data.values().data() + src * row_size, row_size,
                  vals.data() + r * row_size);
    }
    Shape shape = e.data.shape();
    shape[0] = rows;
    out.emplace_back(e.label, Tensor::from_values(std::move(shape), std::move(vals)));
  }
  return out;
}

TrainLog train(const KnowledgeBase& kb, Environment& env, BatchSampler& sampler,
               ParamStore& params, Optimizer& opt, const SemanticsConfig& cfg,
               std::size_t epochs) {
  TrainLog log;
  for (const NamedFormula& f : kb.formulas()) log.formula_names.push_back(f.name);

  for (std::size_t e = 0; e < epochs; ++e) {
    sampler.start_epoch();
    std::size_t steps = sampler.steps_per_epoch();
    double loss_sum = 0.0;
    double sat_sum = 0.0;
    std::vector<double> formula_sum(kb.size(), 0.0);

    for (std::size_t s = 0; s < steps; ++s) {
      for (auto& [label, data] : sampler.batch(s)) env.bind_variable(label, data);
      Tape tape;
      Satisfaction sat = satisfaction(kb, env, cfg);
      Tensor l = neg_complement(sat.aggregate);
      double lv = l.value();
      if (!std::isfinite(lv)) {
        raise(ErrorCode::NonFiniteLoss, "loss is " + std::to_string(lv) + " at epoch " +
                                            std::to_string(e + 1) + ", step " +
                                            std::to_string(s + 1));
      }
      tape.backward_from(l);
      opt.step(params);

      loss_sum += lv;
      sat_sum += sat.aggregate.value();
      for (std::size_t i = 0; i < sat.truths.size(); ++i) {
        formula_sum[i] += sat.truths[i].value();
      }
    }

    EpochRecord rec;
    rec.epoch = e + 1;
    rec.mean_loss = loss_sum / static_cast<double>(steps);
    rec.sat_aggregate = sat_sum / static_cast<double>(steps);
    rec.formula_sat.resize(kb.size());
    for (std::size_t i = 0; i < kb.size(); ++i) {
      rec.formula_sat[i] = formula_sum[i] / static_cast<double>(steps);
    }
    log.epochs.push_back(std::move(rec));
  }
  return log;
}

GradCheckReport gradient_check(const std::function<Tensor()>& loss_fn,
                               const std::vector<Tensor>& params, double h) {
  GradCheckReport report;

  std::vector<std::vector<double>> analytic;
  {
    for (Tensor p : params) p.zero_grad();
    Tape tape;
    Tensor l = loss_fn();
    tape.backward_from(l);
    for (const Tensor& p : params) {
      std::span<const double> g = p.grad();
      analytic.emplace_back(g.begin(), g.end());
    }
  }
  for (Tensor p : params) p.zero_grad();

  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor p = params[k];
    std::span<double> x = p.values_mut();
    for (std::size_t i = 0; i < x.size(); ++i) {
      double keep = x[i];
      x[i] = keep + h;
      double up = loss_fn().value();
      x[i] = keep - h;
      double down = loss_fn().value();
      x[i] = keep;
      double fd = (up - down) / (2.0 * h);
      double a = analytic[k][i];
      double rel = std::fabs(a - fd) / std::max({1e-8, std::fabs(a), std::fabs(fd)});
      report.max_rel_err = std::max(report.max_rel_err, rel);
      ++report.components;
    }
  }
  return report;
}

}  // namespace realogic

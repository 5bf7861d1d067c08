#include "realogic/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace realogic {

namespace {

thread_local Tape* g_active_tape = nullptr;

void ensure_grad(detail::TensorData& d) {
  if (d.grad.empty()) d.grad.assign(d.values.size(), 0.0);
}

// Per-output-dimension strides into a tensor of shape `in` broadcast to
// shape `out` (0 where the input dimension is stretched or missing).
std::vector<std::size_t> broadcast_strides(const Shape& in, const Shape& out) {
  const auto in_strides = row_major_strides(in);
  std::vector<std::size_t> result(out.size(), 0);
  for (std::size_t i = 0; i < in.size(); ++i) {
    const std::size_t out_dim = out.size() - in.size() + i;
    result[out_dim] = (in[i] == 1 && out[out_dim] != 1) ? 0 : in_strides[i];
  }
  return result;
}

std::size_t map_offset(std::size_t flat, const std::vector<std::size_t>& out_strides,
                       const Shape& out_shape, const std::vector<std::size_t>& in_strides) {
  std::size_t off = 0;
  for (std::size_t d = 0; d < out_shape.size(); ++d) {
    const std::size_t idx = (flat / out_strides[d]) % out_shape[d];
    off += idx * in_strides[d];
  }
  return off;
}

struct BroadcastPlan {
  Shape out_shape;
  std::vector<std::size_t> out_strides;
  std::vector<std::size_t> a_strides;
  std::vector<std::size_t> b_strides;
  std::size_t size = 0;

  std::size_t a_offset(std::size_t flat) const {
    return map_offset(flat, out_strides, out_shape, a_strides);
  }
  std::size_t b_offset(std::size_t flat) const {
    return map_offset(flat, out_strides, out_shape, b_strides);
  }
};

BroadcastPlan make_broadcast_plan(const Shape& a, const Shape& b) {
  BroadcastPlan plan;
  plan.out_shape = broadcast_shapes(a, b);
  plan.out_strides = row_major_strides(plan.out_shape);
  plan.a_strides = broadcast_strides(a, plan.out_shape);
  plan.b_strides = broadcast_strides(b, plan.out_shape);
  plan.size = shape_size(plan.out_shape);
  return plan;
}

using DataPtr = std::shared_ptr<detail::TensorData>;

// Records a binary element-wise op whose input gradients are
//   ga += gout * da(flat),  gb += gout * db(flat)
// with gradients summed over broadcast dimensions by the offset mapping.
template <typename DaFn, typename DbFn>
void record_binary(const Tensor& a, const Tensor& b, Tensor& out,
                   const BroadcastPlan& plan, DaFn da, DbFn db) {
  Tape* tape = Tape::active();
  if (!tape || !(a.requires_grad() || b.requires_grad())) return;
  out.set_requires_grad(true);
  DataPtr ad = a.data(), bd = b.data(), od = out.data();
  std::vector<std::size_t> inputs{tape->node_of(a), tape->node_of(b)};
  tape->record_op(std::move(inputs), tape->node_of(out),
                  [ad, bd, od, plan, da, db]() {
                    if (od->grad.empty()) return;
                    const bool need_a = ad->requires_grad;
                    const bool need_b = bd->requires_grad;
                    if (need_a) ensure_grad(*ad);
                    if (need_b) ensure_grad(*bd);
                    for (std::size_t k = 0; k < plan.size; ++k) {
                      const double g = od->grad[k];
                      if (g == 0.0) continue;
                      const std::size_t ao = plan.a_offset(k);
                      const std::size_t bo = plan.b_offset(k);
                      if (need_a) ad->grad[ao] += g * da(ad->values[ao], bd->values[bo]);
                      if (need_b) bd->grad[bo] += g * db(ad->values[ao], bd->values[bo]);
                    }
                  });
}

template <typename Fn>
Tensor binary_op(const Tensor& a, const Tensor& b, Fn fn) {
  const BroadcastPlan plan = make_broadcast_plan(a.shape(), b.shape());
  std::vector<double> values(plan.size);
  for (std::size_t k = 0; k < plan.size; ++k) {
    values[k] = fn(a.at(plan.a_offset(k)), b.at(plan.b_offset(k)));
  }
  return Tensor::from_values(plan.out_shape, std::move(values));
}

// Unary op with derivative expressed from (input, output).
template <typename Fn, typename DFn>
Tensor unary_op(const Tensor& a, Fn fn, DFn dfn) {
  std::vector<double> values(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) values[k] = fn(a.at(k));
  Tensor out = Tensor::from_values(a.shape(), std::move(values));
  Tape* tape = Tape::active();
  if (tape && a.requires_grad()) {
    out.set_requires_grad(true);
    DataPtr ad = a.data(), od = out.data();
    tape->record_op({tape->node_of(a)}, tape->node_of(out), [ad, od, dfn]() {
      if (od->grad.empty()) return;
      ensure_grad(*ad);
      for (std::size_t k = 0; k < ad->values.size(); ++k) {
        ad->grad[k] += od->grad[k] * dfn(ad->values[k], od->values[k]);
      }
    });
  }
  return out;
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::vector<std::size_t> row_major_strides(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) {
    strides[i - 1] = strides[i] * shape[i];
  }
  return strides;
}

Shape broadcast_shapes(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank, 1);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t ea = i < a.size() ? a[a.size() - 1 - i] : 1;
    const std::size_t eb = i < b.size() ? b[b.size() - 1 - i] : 1;
    if (ea != eb && ea != 1 && eb != 1) {
      raise(ErrorCode::IncompatibleShapes,
            "cannot broadcast " + shape_to_string(a) + " with " + shape_to_string(b));
    }
    out[rank - 1 - i] = std::max(ea, eb);
  }
  return out;
}

// --- Tensor -----------------------------------------------------------------

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from_values({}, {v}, requires_grad);
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values, bool requires_grad) {
  for (std::size_t d : shape) {
    if (d == 0) {
      raise(ErrorCode::ShapeMismatch, "zero extent in shape " + shape_to_string(shape));
    }
  }
  if (shape_size(shape) != values.size()) {
    raise(ErrorCode::ShapeMismatch,
          "shape " + shape_to_string(shape) + " does not match " +
              std::to_string(values.size()) + " values");
  }
  auto data = std::make_shared<detail::TensorData>();
  data->shape = std::move(shape);
  data->values = std::move(values);
  data->requires_grad = requires_grad;
  return Tensor(std::move(data));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  std::vector<double> values(shape_size(shape), v);
  return from_values(std::move(shape), std::move(values), requires_grad);
}

double Tensor::value() const {
  if (!is_scalar()) {
    raise(ErrorCode::ShapeMismatch,
          "value() requires a scalar, got shape " + shape_to_string(shape()));
  }
  return data_->values[0];
}

Tensor& Tensor::set_requires_grad(bool on) {
  data_->requires_grad = on;
  return *this;
}

std::span<const double> Tensor::grad() const {
  ensure_grad(*data_);
  return data_->grad;
}

std::span<double> Tensor::grad_mut() {
  ensure_grad(*data_);
  return data_->grad;
}

void Tensor::zero_grad() {
  std::fill(data_->grad.begin(), data_->grad.end(), 0.0);
}

// --- Tape -------------------------------------------------------------------

Tape::Tape() : previous_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() { g_active_tape = previous_; }

Tape* Tape::active() noexcept { return g_active_tape; }

std::size_t Tape::node_of(const Tensor& t) {
  detail::TensorData& d = *t.data();
  if (d.tape != this) {
    d.tape = this;
    d.node_id = next_node_++;
    nodes_.push_back(t.data());
  }
  return d.node_id;
}

void Tape::record_op(std::vector<std::size_t> input_ids, std::size_t output_id,
                     std::function<void()> backward) {
  ops_.push_back({std::move(input_ids), output_id, std::move(backward)});
}

void Tape::backward_from(const Tensor& root) {
  if (!root.is_scalar()) {
    raise(ErrorCode::NonScalarRoot,
          "backward requires a scalar root, got shape " + shape_to_string(root.shape()));
  }
  if (root.data()->tape != this) {
    raise(ErrorCode::NonScalarRoot, "backward root is not recorded on the active tape");
  }
  ensure_grad(*root.data());
  // Each call must add a fresh d(root)/dt to every node. Stash the grads
  // already held, replay from zero, then add the stash back; otherwise grads
  // left on interior nodes by an earlier call would feed the replay again.
  std::vector<std::vector<double>> stash(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    std::vector<double>& g = nodes_[i]->grad;
    if (!g.empty()) {
      stash[i].assign(g.begin(), g.end());
      std::fill(g.begin(), g.end(), 0.0);
    }
  }
  root.data()->grad[0] += 1.0;
  for (std::size_t i = ops_.size(); i-- > 0;) {
    ops_[i].backward();
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (stash[i].empty()) continue;
    std::vector<double>& g = nodes_[i]->grad;
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += stash[i][j];
  }
}

void backward(const Tensor& root) {
  Tape* tape = root.data()->tape;
  if (!tape) {
    raise(ErrorCode::NonScalarRoot, "backward root is not recorded on any tape");
  }
  tape->backward_from(root);
}

// --- element-wise binary ----------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  const BroadcastPlan plan = make_broadcast_plan(a.shape(), b.shape());
  Tensor out = binary_op(a, b, [](double x, double y) { return x + y; });
  record_binary(a, b, out, plan, [](double, double) { return 1.0; },
                [](double, double) { return 1.0; });
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const BroadcastPlan plan = make_broadcast_plan(a.shape(), b.shape());
  Tensor out = binary_op(a, b, [](double x, double y) { return x - y; });
  record_binary(a, b, out, plan, [](double, double) { return 1.0; },
                [](double, double) { return -1.0; });
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const BroadcastPlan plan = make_broadcast_plan(a.shape(), b.shape());
  Tensor out = binary_op(a, b, [](double x, double y) { return x * y; });
  record_binary(a, b, out, plan, [](double, double y) { return y; },
                [](double x, double) { return x; });
  return out;
}

Tensor ew_min(const Tensor& a, const Tensor& b) {
  const BroadcastPlan plan = make_broadcast_plan(a.shape(), b.shape());
  Tensor out = binary_op(a, b, [](double x, double y) { return x <= y ? x : y; });
  record_binary(a, b, out, plan,
                [](double x, double y) { return x <= y ? 1.0 : 0.0; },
                [](double x, double y) { return x <= y ? 0.0 : 1.0; });
  return out;
}

Tensor ew_max(const Tensor& a, const Tensor& b) {
  const BroadcastPlan plan = make_broadcast_plan(a.shape(), b.shape());
  Tensor out = binary_op(a, b, [](double x, double y) { return x >= y ? x : y; });
  record_binary(a, b, out, plan,
                [](double x, double y) { return x >= y ? 1.0 : 0.0; },
                [](double x, double y) { return x >= y ? 0.0 : 1.0; });
  return out;
}

Tensor le_mask(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, [](double x, double y) { return x <= y ? 1.0 : 0.0; });
}

// --- element-wise unary -------------------------------------------------------

Tensor neg_complement(const Tensor& a) {
  return unary_op(a, [](double u) { return 1.0 - u; },
                  [](double, double) { return -1.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(a,
                  [](double x) {
                    // split by sign so exp never overflows
                    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
                    const double e = std::exp(x);
                    return e / (1.0 + e);
                  },
                  [](double, double y) { return y * (1.0 - y); });
}

Tensor affine_scalar(const Tensor& a, double scale, double shift) {
  return unary_op(a, [scale, shift](double x) { return scale * x + shift; },
                  [scale](double, double) { return scale; });
}

Tensor elu(const Tensor& a) {
  return unary_op(a, [](double x) { return x > 0.0 ? x : std::expm1(x); },
                  [](double x, double y) { return x > 0.0 ? 1.0 : y + 1.0; });
}

// --- reductions ---------------------------------------------------------------

namespace {

struct AxisPlan {
  std::size_t outer = 1;
  std::size_t n = 1;      // extent of the reduced axis
  std::size_t inner = 1;
  Shape out_shape;
};

AxisPlan make_axis_plan(const Shape& shape, std::size_t dim) {
  if (dim >= shape.size()) {
    raise(ErrorCode::InvalidAxis, "axis " + std::to_string(dim) +
                                      " out of range for shape " + shape_to_string(shape));
  }
  AxisPlan plan;
  for (std::size_t i = 0; i < dim; ++i) plan.outer *= shape[i];
  plan.n = shape[dim];
  for (std::size_t i = dim + 1; i < shape.size(); ++i) plan.inner *= shape[i];
  plan.out_shape = shape;
  plan.out_shape.erase(plan.out_shape.begin() + static_cast<std::ptrdiff_t>(dim));
  return plan;
}

}  // namespace

Tensor reduce_pmean(const Tensor& a, std::size_t dim, double p, bool stabilize,
                    double eps) {
  if (!(p >= 1.0)) {
    raise(ErrorCode::InvalidExponent, "p-mean exponent must be >= 1, got " + std::to_string(p));
  }
  const AxisPlan plan = make_axis_plan(a.shape(), dim);
  const double lo = stabilize ? eps : 0.0;
  const double hi = stabilize ? 1.0 - eps : 1.0;

  // Clamped inputs are shared by forward and backward.
  std::vector<double> clamped(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double u = a.at(k);
    clamped[k] = stabilize ? std::min(std::max(u, lo), hi) : u;
  }

  std::vector<double> values(plan.outer * plan.inner);
  for (std::size_t o = 0; o < plan.outer; ++o) {
    for (std::size_t j = 0; j < plan.inner; ++j) {
      double sum = 0.0;
      for (std::size_t i = 0; i < plan.n; ++i) {
        sum += std::pow(clamped[(o * plan.n + i) * plan.inner + j], p);
      }
      values[o * plan.inner + j] = std::pow(sum / static_cast<double>(plan.n), 1.0 / p);
    }
  }
  Tensor out = Tensor::from_values(plan.out_shape, std::move(values));

  Tape* tape = Tape::active();
  if (tape && a.requires_grad()) {
    out.set_requires_grad(true);
    DataPtr ad = a.data(), od = out.data();
    tape->record_op(
        {tape->node_of(a)}, tape->node_of(out),
        [ad, od, plan, p, stabilize, lo, hi, clamped = std::move(clamped)]() {
          if (od->grad.empty()) return;
          ensure_grad(*ad);
          const double inv_n = 1.0 / static_cast<double>(plan.n);
          for (std::size_t o = 0; o < plan.outer; ++o) {
            for (std::size_t j = 0; j < plan.inner; ++j) {
              const double g = od->grad[o * plan.inner + j];
              if (g == 0.0) continue;
              // d out / d u_i = (1/n) u_i^(p-1) out^(1-p) inside the clamp
              const double out_pow = std::pow(od->values[o * plan.inner + j], 1.0 - p);
              for (std::size_t i = 0; i < plan.n; ++i) {
                const std::size_t k = (o * plan.n + i) * plan.inner + j;
                const double u = ad->values[k];
                if (stabilize && (u < lo || u > hi)) continue;
                ad->grad[k] += g * inv_n * std::pow(clamped[k], p - 1.0) * out_pow;
              }
            }
          }
        });
  }
  return out;
}

Tensor reduce_pmean_error(const Tensor& a, std::size_t dim, double p,
                          bool stabilize, double eps) {
  return neg_complement(reduce_pmean(neg_complement(a), dim, p, stabilize, eps));
}

namespace {

Tensor reduce_extremum(const Tensor& a, std::size_t dim, bool take_min) {
  const AxisPlan plan = make_axis_plan(a.shape(), dim);
  std::vector<double> values(plan.outer * plan.inner);
  std::vector<std::size_t> arg(plan.outer * plan.inner);
  for (std::size_t o = 0; o < plan.outer; ++o) {
    for (std::size_t j = 0; j < plan.inner; ++j) {
      std::size_t best = (o * plan.n) * plan.inner + j;
      for (std::size_t i = 1; i < plan.n; ++i) {
        const std::size_t k = (o * plan.n + i) * plan.inner + j;
        const bool better = take_min ? a.at(k) < a.at(best) : a.at(k) > a.at(best);
        if (better) best = k;  // ties keep the lowest flat index
      }
      values[o * plan.inner + j] = a.at(best);
      arg[o * plan.inner + j] = best;
    }
  }
  Tensor out = Tensor::from_values(plan.out_shape, std::move(values));

  Tape* tape = Tape::active();
  if (tape && a.requires_grad()) {
    out.set_requires_grad(true);
    DataPtr ad = a.data(), od = out.data();
    tape->record_op({tape->node_of(a)}, tape->node_of(out),
                    [ad, od, arg = std::move(arg)]() {
                      if (od->grad.empty()) return;
                      ensure_grad(*ad);
                      for (std::size_t k = 0; k < arg.size(); ++k) {
                        ad->grad[arg[k]] += od->grad[k];
                      }
                    });
  }
  return out;
}

}  // namespace

Tensor reduce_min(const Tensor& a, std::size_t dim) { return reduce_extremum(a, dim, true); }

Tensor reduce_max(const Tensor& a, std::size_t dim) { return reduce_extremum(a, dim, false); }

// --- shape ops ------------------------------------------------------------------

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    raise(ErrorCode::ShapeMismatch, "cannot reshape " + shape_to_string(a.shape()) +
                                        " to " + shape_to_string(shape));
  }
  std::vector<double> values(a.values().begin(), a.values().end());
  Tensor out = Tensor::from_values(std::move(shape), std::move(values));
  Tape* tape = Tape::active();
  if (tape && a.requires_grad()) {
    out.set_requires_grad(true);
    DataPtr ad = a.data(), od = out.data();
    tape->record_op({tape->node_of(a)}, tape->node_of(out), [ad, od]() {
      if (od->grad.empty()) return;
      ensure_grad(*ad);
      for (std::size_t k = 0; k < ad->grad.size(); ++k) ad->grad[k] += od->grad[k];
    });
  }
  return out;
}

Tensor permute(const Tensor& a, const std::vector<std::size_t>& axes) {
  if (axes.size() != a.rank()) {
    raise(ErrorCode::InvalidAxis, "permutation rank mismatch");
  }
  std::vector<bool> seen(axes.size(), false);
  for (std::size_t ax : axes) {
    if (ax >= axes.size() || seen[ax]) {
      raise(ErrorCode::InvalidAxis, "invalid axis permutation");
    }
    seen[ax] = true;
  }
  Shape out_shape(a.rank());
  for (std::size_t i = 0; i < axes.size(); ++i) out_shape[i] = a.shape()[axes[i]];
  const auto out_strides = row_major_strides(out_shape);
  const auto in_strides = row_major_strides(a.shape());

  // mapping[d] = stride in the input for output dimension d
  std::vector<std::size_t> mapping(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) mapping[i] = in_strides[axes[i]];

  const std::size_t n = a.size();
  std::vector<double> values(n);
  std::vector<std::size_t> src(n);
  for (std::size_t k = 0; k < n; ++k) {
    src[k] = map_offset(k, out_strides, out_shape, mapping);
    values[k] = a.at(src[k]);
  }
  Tensor out = Tensor::from_values(std::move(out_shape), std::move(values));

  Tape* tape = Tape::active();
  if (tape && a.requires_grad()) {
    out.set_requires_grad(true);
    DataPtr ad = a.data(), od = out.data();
    tape->record_op({tape->node_of(a)}, tape->node_of(out),
                    [ad, od, src = std::move(src)]() {
                      if (od->grad.empty()) return;
                      ensure_grad(*ad);
                      for (std::size_t k = 0; k < src.size(); ++k) {
                        ad->grad[src[k]] += od->grad[k];
                      }
                    });
  }
  return out;
}

Tensor broadcast_to(const Tensor& a, const Shape& shape) {
  if (broadcast_shapes(a.shape(), shape) != shape) {
    raise(ErrorCode::IncompatibleShapes, "cannot broadcast " + shape_to_string(a.shape()) +
                                             " to " + shape_to_string(shape));
  }
  const auto out_strides = row_major_strides(shape);
  const auto in_strides = broadcast_strides(a.shape(), shape);
  const std::size_t n = shape_size(shape);
  std::vector<double> values(n);
  std::vector<std::size_t> src(n);
  for (std::size_t k = 0; k < n; ++k) {
    src[k] = map_offset(k, out_strides, shape, in_strides);
    values[k] = a.at(src[k]);
  }
  Tensor out = Tensor::from_values(shape, std::move(values));

  Tape* tape = Tape::active();
  if (tape && a.requires_grad()) {
    out.set_requires_grad(true);
    DataPtr ad = a.data(), od = out.data();
    tape->record_op({tape->node_of(a)}, tape->node_of(out),
                    [ad, od, src = std::move(src)]() {
                      if (od->grad.empty()) return;
                      ensure_grad(*ad);
                      for (std::size_t k = 0; k < src.size(); ++k) {
                        ad->grad[src[k]] += od->grad[k];
                      }
                    });
  }
  return out;
}

Tensor stack(const std::vector<Tensor>& parts) {
  if (parts.empty()) {
    raise(ErrorCode::ShapeMismatch, "stack of zero tensors");
  }
  const Shape& part_shape = parts.front().shape();
  for (const Tensor& t : parts) {
    if (t.shape() != part_shape) {
      raise(ErrorCode::ShapeMismatch, "stack requires equal shapes");
    }
  }
  const std::size_t part_size = parts.front().size();
  Shape out_shape;
  out_shape.push_back(parts.size());
  out_shape.insert(out_shape.end(), part_shape.begin(), part_shape.end());
  std::vector<double> values;
  values.reserve(parts.size() * part_size);
  for (const Tensor& t : parts) {
    values.insert(values.end(), t.values().begin(), t.values().end());
  }
  Tensor out = Tensor::from_values(std::move(out_shape), std::move(values));

  Tape* tape = Tape::active();
  bool any_grad = false;
  for (const Tensor& t : parts) any_grad = any_grad || t.requires_grad();
  if (tape && any_grad) {
    out.set_requires_grad(true);
    std::vector<DataPtr> pds;
    std::vector<std::size_t> input_ids;
    for (const Tensor& t : parts) {
      pds.push_back(t.data());
      input_ids.push_back(tape->node_of(t));
    }
    DataPtr od = out.data();
    tape->record_op(std::move(input_ids), tape->node_of(out),
                    [pds = std::move(pds), od, part_size]() {
                      if (od->grad.empty()) return;
                      for (std::size_t p = 0; p < pds.size(); ++p) {
                        if (!pds[p]->requires_grad) continue;
                        ensure_grad(*pds[p]);
                        for (std::size_t k = 0; k < part_size; ++k) {
                          pds[p]->grad[k] += od->grad[p * part_size + k];
                        }
                      }
                    });
  }
  return out;
}

Tensor concat_last(const std::vector<Tensor>& parts) {
  if (parts.empty()) {
    raise(ErrorCode::ShapeMismatch, "concat of zero tensors");
  }
  const Shape& first = parts.front().shape();
  if (first.empty()) {
    raise(ErrorCode::ShapeMismatch, "concat requires rank >= 1");
  }
  std::size_t last_total = 0;
  for (const Tensor& t : parts) {
    if (t.rank() != first.size() ||
        !std::equal(first.begin(), first.end() - 1, t.shape().begin())) {
      raise(ErrorCode::ShapeMismatch, "concat requires matching leading extents");
    }
    last_total += t.shape().back();
  }
  Shape out_shape = first;
  out_shape.back() = last_total;
  const std::size_t rows = shape_size(Shape(first.begin(), first.end() - 1));

  std::vector<double> values(rows * last_total);
  std::size_t col = 0;
  for (const Tensor& t : parts) {
    const std::size_t w = t.shape().back();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        values[r * last_total + col + c] = t.at(r * w + c);
      }
    }
    col += w;
  }
  Tensor out = Tensor::from_values(std::move(out_shape), std::move(values));

  Tape* tape = Tape::active();
  bool any_grad = false;
  for (const Tensor& t : parts) any_grad = any_grad || t.requires_grad();
  if (tape && any_grad) {
    out.set_requires_grad(true);
    std::vector<DataPtr> pds;
    std::vector<std::size_t> input_ids;
    std::vector<std::size_t> widths;
    for (const Tensor& t : parts) {
      pds.push_back(t.data());
      input_ids.push_back(tape->node_of(t));
      widths.push_back(t.shape().back());
    }
    DataPtr od = out.data();
    tape->record_op(std::move(input_ids), tape->node_of(out),
                    [pds = std::move(pds), od, widths = std::move(widths), rows,
                     last_total]() {
                      if (od->grad.empty()) return;
                      std::size_t base = 0;
                      for (std::size_t p = 0; p < pds.size(); ++p) {
                        const std::size_t w = widths[p];
                        if (pds[p]->requires_grad) {
                          ensure_grad(*pds[p]);
                          for (std::size_t r = 0; r < rows; ++r) {
                            for (std::size_t c = 0; c < w; ++c) {
                              pds[p]->grad[r * w + c] += od->grad[r * last_total + base + c];
                            }
                          }
                        }
                        base += w;
                      }
                    });
  }
  return out;
}

// --- linear layer ------------------------------------------------------------------

Tensor affine(const Tensor& w, const Tensor& x, const Tensor& b) {
  if (w.rank() != 2) {
    raise(ErrorCode::ShapeMismatch, "affine weight must be rank 2, got " +
                                        shape_to_string(w.shape()));
  }
  const std::size_t out_dim = w.shape()[0];
  const std::size_t in_dim = w.shape()[1];
  if (x.rank() < 1 || x.shape().back() != in_dim) {
    raise(ErrorCode::ShapeMismatch, "affine input " + shape_to_string(x.shape()) +
                                        " does not end in " + std::to_string(in_dim));
  }
  if (b.rank() != 1 || b.shape()[0] != out_dim) {
    raise(ErrorCode::ShapeMismatch, "affine bias must have shape [" +
                                        std::to_string(out_dim) + "]");
  }
  const std::size_t batch = x.size() / in_dim;
  Shape out_shape = x.shape();
  out_shape.back() = out_dim;

  std::vector<double> values(batch * out_dim);
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t o = 0; o < out_dim; ++o) {
      double sum = b.at(o);
      for (std::size_t i = 0; i < in_dim; ++i) {
        sum += w.at(o * in_dim + i) * x.at(r * in_dim + i);
      }
      values[r * out_dim + o] = sum;
    }
  }
  Tensor out = Tensor::from_values(std::move(out_shape), std::move(values));

  Tape* tape = Tape::active();
  if (tape && (w.requires_grad() || x.requires_grad() || b.requires_grad())) {
    out.set_requires_grad(true);
    DataPtr wd = w.data(), xd = x.data(), bd = b.data(), od = out.data();
    std::vector<std::size_t> inputs{tape->node_of(w), tape->node_of(x), tape->node_of(b)};
    tape->record_op(std::move(inputs), tape->node_of(out),
                    [wd, xd, bd, od, batch, out_dim, in_dim]() {
                      if (od->grad.empty()) return;
                      const bool need_w = wd->requires_grad;
                      const bool need_x = xd->requires_grad;
                      const bool need_b = bd->requires_grad;
                      if (need_w) ensure_grad(*wd);
                      if (need_x) ensure_grad(*xd);
                      if (need_b) ensure_grad(*bd);
                      for (std::size_t r = 0; r < batch; ++r) {
                        for (std::size_t o = 0; o < out_dim; ++o) {
                          const double g = od->grad[r * out_dim + o];
                          if (g == 0.0) continue;
                          if (need_b) bd->grad[o] += g;
                          for (std::size_t i = 0; i < in_dim; ++i) {
                            if (need_w) wd->grad[o * in_dim + i] += g * xd->values[r * in_dim + i];
                            if (need_x) xd->grad[r * in_dim + i] += g * wd->values[o * in_dim + i];
                          }
                        }
                      }
                    });
  }
  return out;
}

}  // namespace realogic

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "realogic/errors.hpp"

namespace realogic {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);
std::vector<std::size_t> row_major_strides(const Shape& shape);

// Trailing-dimension broadcast: extents aligned from the right, each pair
// equal or one of them 1; missing leading dims count as 1.
Shape broadcast_shapes(const Shape& a, const Shape& b);

class Tape;

namespace detail {

struct TensorData {
  Shape shape;
  std::vector<double> values;
  bool requires_grad = false;
  std::vector<double> grad;  // empty until first accumulation
  Tape* tape = nullptr;      // tape this node is currently bound to
  std::size_t node_id = 0;
};

}  // namespace detail

// Shared-state handle to an N-dimensional row-major array of doubles.
// Copies alias the same storage, so gradients written by backward() are
// visible through every handle to the same tensor.
class Tensor {
 public:
  Tensor() : Tensor(scalar(0.0)) {}

  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);

  const Shape& shape() const { return data_->shape; }
  std::size_t rank() const { return data_->shape.size(); }
  std::size_t size() const { return data_->values.size(); }
  bool is_scalar() const { return data_->shape.empty(); }

  // Scalar read; errors when the tensor is not rank 0.
  double value() const;
  double at(std::size_t flat_index) const { return data_->values[flat_index]; }

  std::span<const double> values() const { return data_->values; }
  std::span<double> values_mut() { return data_->values; }

  bool requires_grad() const { return data_->requires_grad; }
  Tensor& set_requires_grad(bool on);

  // Gradient buffer, allocated (zero) on first access.
  std::span<const double> grad() const;
  std::span<double> grad_mut();
  void zero_grad();

  std::shared_ptr<detail::TensorData> data() const { return data_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorData> data)
      : data_(std::move(data)) {}

  std::shared_ptr<detail::TensorData> data_;

  friend class Tape;
};

// Reverse-mode tape. Construction pushes the tape as the active one for this
// thread; destruction pops it. Operations record themselves onto the active
// tape whenever at least one input requires grad. Replaying the recorded
// backward rules in reverse order from a scalar root accumulates d(root)/dt
// into the grad buffer of every requires_grad tensor reachable from the root.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active() noexcept;

  // Binds the tensor to this tape (fresh node id when it was last seen by a
  // different tape) and returns its id.
  std::size_t node_of(const Tensor& t);

  void record_op(std::vector<std::size_t> input_ids, std::size_t output_id,
                 std::function<void()> backward);

  // Seeds d(root)/d(root) = 1 and replays backward rules in reverse order.
  // Repeated calls accumulate. Errors: NonScalarRoot.
  void backward_from(const Tensor& root);

  std::size_t num_ops() const { return ops_.size(); }

 private:
  struct OpRecord {
    std::vector<std::size_t> inputs;
    std::size_t output;
    std::function<void()> backward;
  };

  std::vector<OpRecord> ops_;
  std::vector<std::shared_ptr<detail::TensorData>> nodes_;
  std::size_t next_node_ = 0;
  Tape* previous_ = nullptr;
};

// Convenience wrapper over Tape::backward_from on the tape the root is bound
// to. Errors: NonScalarRoot (also when the root is not on any tape).
void backward(const Tensor& root);

// --- element-wise binary ops (trailing-dimension broadcasting) -------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// min/max route gradient to the selected operand; ties select the left one.
Tensor ew_min(const Tensor& a, const Tensor& b);
Tensor ew_max(const Tensor& a, const Tensor& b);
// 0/1 indicator of a <= b (element-wise, broadcast); never carries gradient.
Tensor le_mask(const Tensor& a, const Tensor& b);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

// --- element-wise unary ops -------------------------------------------------

Tensor neg_complement(const Tensor& a);  // 1 - u
Tensor sigmoid(const Tensor& a);
Tensor affine_scalar(const Tensor& a, double scale, double shift);
Tensor elu(const Tensor& a);  // x > 0 ? x : exp(x) - 1

// --- reductions ------------------------------------------------------------

// Generalized p-mean ((1/n) sum u_i^p)^(1/p) along `dim` (dimension removed).
// With stabilize, inputs are clamped to [eps, 1-eps] before the power so the
// backward pass stays finite at u = 0. Errors: InvalidAxis, InvalidExponent.
Tensor reduce_pmean(const Tensor& a, std::size_t dim, double p,
                    bool stabilize = true, double eps = 1e-7);

// 1 - pmean(1 - a): the complement identity holds bit-exactly because this is
// implemented as exactly that composition.
Tensor reduce_pmean_error(const Tensor& a, std::size_t dim, double p,
                          bool stabilize = true, double eps = 1e-7);

// Extremum along `dim`; gradient routes to the lowest flat index among ties.
Tensor reduce_min(const Tensor& a, std::size_t dim);
Tensor reduce_max(const Tensor& a, std::size_t dim);

// --- shape ops ---------------------------------------------------------------

Tensor reshape(const Tensor& a, Shape shape);
Tensor permute(const Tensor& a, const std::vector<std::size_t>& axes);
Tensor broadcast_to(const Tensor& a, const Shape& shape);
// Stacks equal-shaped tensors along a new leading dimension.
Tensor stack(const std::vector<Tensor>& parts);
// Concatenates along the last axis; all other extents must match.
Tensor concat_last(const std::vector<Tensor>& parts);

// --- linear layer ------------------------------------------------------------

// Batched W x + b with W [out,in], x [...,in], b [out] -> [...,out].
// Errors: ShapeMismatch.
Tensor affine(const Tensor& w, const Tensor& x, const Tensor& b);

}  // namespace realogic

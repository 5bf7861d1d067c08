#include "realogic/fuzzy.hpp"

#include <cmath>

namespace realogic {

namespace {

constexpr double kRangeTolerance = 1e-9;

void require_truth_range(const Tensor& t, const char* op) {
  for (double v : t.values()) {
    if (!(v >= -kRangeTolerance && v <= 1.0 + kRangeTolerance)) {
      raise(ErrorCode::OutOfRangeTruth,
            std::string(op) + " input outside [0,1]: " + std::to_string(v));
    }
  }
}

}  // namespace

const char* family_name(Family family) {
  switch (family) {
    case Family::Product: return "product";
    case Family::Godel: return "godel";
    case Family::Lukasiewicz: return "lukasiewicz";
  }
  return "?";
}

Family family_from_name(const std::string& name) {
  if (name == "product") return Family::Product;
  if (name == "godel") return Family::Godel;
  if (name == "lukasiewicz") return Family::Lukasiewicz;
  raise(ErrorCode::ConfigError, "unknown semantics family '" + name +
                                    "' (expected product, godel, or lukasiewicz)");
}

void SemanticsConfig::validate() const {
  for (double p : {p_exists, p_forall, p_satagg}) {
    if (!(p >= 1.0)) {
      raise(ErrorCode::InvalidExponent,
            "quantifier exponent must be >= 1, got " + std::to_string(p));
    }
  }
  if (!(epsilon > 0.0 && epsilon < 0.01)) {
    raise(ErrorCode::ConfigError,
          "epsilon must be in (0, 0.01), got " + std::to_string(epsilon));
  }
}

Tensor conj(const SemanticsConfig& cfg, const Tensor& u, const Tensor& v) {
  require_truth_range(u, "conj");
  require_truth_range(v, "conj");
  switch (cfg.family) {
    case Family::Product: return mul(u, v);
    case Family::Godel: return ew_min(u, v);
    case Family::Lukasiewicz:
      return ew_max(affine_scalar(add(u, v), 1.0, -1.0), Tensor::scalar(0.0));
  }
  raise(ErrorCode::ConfigError, "unknown family");
}

Tensor disj(const SemanticsConfig& cfg, const Tensor& u, const Tensor& v) {
  require_truth_range(u, "disj");
  require_truth_range(v, "disj");
  switch (cfg.family) {
    case Family::Product: return sub(add(u, v), mul(u, v));
    case Family::Godel: return ew_max(u, v);
    case Family::Lukasiewicz: return ew_min(add(u, v), Tensor::scalar(1.0));
  }
  raise(ErrorCode::ConfigError, "unknown family");
}

Tensor implies(const SemanticsConfig& cfg, const Tensor& u, const Tensor& v) {
  require_truth_range(u, "implies");
  require_truth_range(v, "implies");
  switch (cfg.family) {
    case Family::Product: return add(neg_complement(u), mul(u, v));
    case Family::Godel: {
      // u <= v ? 1 : v, with the mask treated as a constant
      Tensor m = le_mask(u, v);
      return add(m, mul(neg_complement(m), v));
    }
    case Family::Lukasiewicz:
      return ew_min(add(neg_complement(u), v), Tensor::scalar(1.0));
  }
  raise(ErrorCode::ConfigError, "unknown family");
}

Tensor neg(const SemanticsConfig&, const Tensor& u) {
  require_truth_range(u, "neg");
  return neg_complement(u);
}

Tensor iff(const SemanticsConfig& cfg, const Tensor& u, const Tensor& v) {
  return conj(cfg, implies(cfg, u, v), implies(cfg, v, u));
}

Tensor exists_agg(const SemanticsConfig& cfg, const Tensor& body, std::size_t dim) {
  require_truth_range(body, "exists");
  if (cfg.family == Family::Godel) return reduce_max(body, dim);
  return reduce_pmean(body, dim, cfg.p_exists, true, cfg.epsilon);
}

Tensor forall_agg(const SemanticsConfig& cfg, const Tensor& body, std::size_t dim) {
  require_truth_range(body, "forall");
  if (cfg.family == Family::Godel) return reduce_min(body, dim);
  return reduce_pmean_error(body, dim, cfg.p_forall, true, cfg.epsilon);
}

Tensor sat_agg(const SemanticsConfig& cfg, const std::vector<Tensor>& truths) {
  if (truths.empty()) {
    raise(ErrorCode::EmptyKnowledgeBase, "sat_agg over an empty knowledge base");
  }
  for (const Tensor& t : truths) {
    if (!t.is_scalar()) {
      raise(ErrorCode::ShapeMismatch, "sat_agg expects scalar truths, got " +
                                          shape_to_string(t.shape()));
    }
    require_truth_range(t, "sat_agg");
  }
  return reduce_pmean_error(stack(truths), 0, cfg.p_satagg, true, cfg.epsilon);
}

}  // namespace realogic

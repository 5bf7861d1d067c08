#pragma once

#include <string>
#include <vector>

#include "realogic/tensor.hpp"

namespace realogic {

enum class Family { Product, Godel, Lukasiewicz };

const char* family_name(Family family);
Family family_from_name(const std::string& name);  // errors: ConfigError

// Fuzzy operator family plus quantifier exponents. p = 2 and the Product
// family are the defaults; epsilon is the stability clamp used inside the
// p-mean aggregators.
struct SemanticsConfig {
  Family family = Family::Product;
  double p_exists = 2.0;
  double p_forall = 2.0;
  double p_satagg = 2.0;
  double epsilon = 1e-7;

  // Errors: InvalidExponent (p < 1), ConfigError (epsilon outside (0, 0.01)).
  void validate() const;
};

// Connectives. Inputs must be truth tensors: every element in [0, 1] within
// 1e-9 (OutOfRangeTruth otherwise). Shapes broadcast.
//   conj     Product u*v           Godel min(u,v)        Lukasiewicz max(0, u+v-1)
//   disj     Product u+v-u*v       Godel max(u,v)        Lukasiewicz min(1, u+v)
//   implies  Product 1-u+u*v       Godel u<=v ? 1 : v    Lukasiewicz min(1, 1-u+v)
//   neg      1-u in every family
//   iff      conj(implies(u,v), implies(v,u))
Tensor conj(const SemanticsConfig& cfg, const Tensor& u, const Tensor& v);
Tensor disj(const SemanticsConfig& cfg, const Tensor& u, const Tensor& v);
Tensor implies(const SemanticsConfig& cfg, const Tensor& u, const Tensor& v);
Tensor neg(const SemanticsConfig& cfg, const Tensor& u);
Tensor iff(const SemanticsConfig& cfg, const Tensor& u, const Tensor& v);

// Quantifier aggregation over one dimension of the body.
// exists: p-mean with p_exists (Godel: max); forall: p-mean-error with
// p_forall (Godel: min).
Tensor exists_agg(const SemanticsConfig& cfg, const Tensor& body, std::size_t dim);
Tensor forall_agg(const SemanticsConfig& cfg, const Tensor& body, std::size_t dim);

// Formula-level aggregator: p-mean-error over the scalar truths of all KB
// formulas. Errors: EmptyKnowledgeBase on an empty list.
Tensor sat_agg(const SemanticsConfig& cfg, const std::vector<Tensor>& truths);

}  // namespace realogic

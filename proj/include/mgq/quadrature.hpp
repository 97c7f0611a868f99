#pragma once

#include <vector>

namespace mgq {

struct GaussRule {
  std::vector<double> x;  // nodes on [0, 1]
  std::vector<double> w;  // weights summing to 1
};

// Gauss-Legendre rule mapped to [0, 1]; cached per order.
const GaussRule& gauss_legendre01(int order);

}  // namespace mgq

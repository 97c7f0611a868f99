#include "mgq/quadrature.hpp"

#include <boost/math/special_functions/legendre.hpp>
#include <map>
#include <memory>
#include <mutex>

#include "mgq/types.hpp"

namespace mgq {

namespace {

GaussRule build_rule(int n) {
  // Boost returns the nonnegative zeros of P_n in increasing order.
  std::vector<double> pos = boost::math::legendre_p_zeros<double>(n);
  std::vector<double> nodes;
  for (auto it = pos.rbegin(); it != pos.rend(); ++it)
    if (*it != 0.0) nodes.push_back(-*it);
  for (double z : pos) nodes.push_back(z);
  GaussRule r;
  for (double z : nodes) {
    double dp = boost::math::legendre_p_prime<double>(n, z);
    r.x.push_back(0.5 * (z + 1.0));
    r.w.push_back(1.0 / ((1.0 - z * z) * dp * dp));
  }
  return r;
}

}  // namespace

const GaussRule& gauss_legendre01(int order) {
  if (order < 1 || order > 200) throw ModelError("gauss_legendre01: order out of range");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<GaussRule>(build_rule(order));
  return *slot;
}

}  // namespace mgq

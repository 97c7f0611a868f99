#include "mgq/batch.hpp"
#include "mgq/parallel.hpp"

#include <cmath>

namespace mgq {

namespace {

constexpr cplx I{0.0, 1.0};

template <class Body>
void serial_for(std::size_t n, Body&& body) {
  for (std::size_t i = 0; i < n; ++i) body(i);
}

template <class Loop>
FrontMap front_map_impl(const ManifoldModel& m, const Vec& y, const Vec& z, const Grid& scan,
                        const TripleOptions& opt, Loop loop) {
  FrontMap f;
  f.y = y;
  f.z = z;
  f.grid = scan;
  const std::size_t N = scan.size();
  f.cls.assign(N, FrontClass::outside);
  f.J.assign(N, 0.0);
  loop(N, [&](std::size_t i) {
    TripleReflectionSolution s;
    try {
      s = triple_fixed_point(m, scan.point(i), y, z, opt);
    } catch (const NumericalError&) {
      s.exists = false;
    }
    f.J[i] = s.exists ? s.jacobian_J : 0.0;
    f.cls[i] = !s.exists ? FrontClass::outside
                         : (s.front_boundary ? FrontClass::boundary : FrontClass::inside);
  });
  return f;
}

template <class Loop>
std::vector<cplx> fiber_impl(const ManifoldModel& m, const FourierSymbol& f,
                             const FourierSymbol& g, const Vec& q, const std::vector<Vec>& ps,
                             const ConvolutionOptions& opt, Loop loop) {
  FiberRule rule = fiber_rule(m, f, g, q, opt);
  std::vector<cplx> h(rule.u.size());
  loop(rule.u.size(), [&](std::size_t k) { h[k] = convolve_at(m, f, g, q, rule.u[k], opt); });
  std::vector<cplx> out(ps.size(), 0.0);
  for (std::size_t k = 0; k < rule.u.size(); ++k)
    for (std::size_t j = 0; j < ps.size(); ++j)
      out[j] += std::exp(-I * rule.u[k].dot(ps[j]) / f.hbar) * h[k];
  for (auto& v : out) v *= rule.weight;
  return out;
}

}  // namespace

int batch_threads() {
#ifndef MGQ_NO_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

FrontMap front_map_batch(const ManifoldModel& m, const Vec& y, const Vec& z, const Grid& scan,
                         const TripleOptions& opt) {
  return front_map_impl(m, y, z, scan, opt, [](auto n, auto&& b) { parallel_for(n, b); });
}

FrontMap front_map_batch_ref(const ManifoldModel& m, const Vec& y, const Vec& z, const Grid& scan,
                             const TripleOptions& opt) {
  return front_map_impl(m, y, z, scan, opt, [](auto n, auto&& b) { serial_for(n, b); });
}

std::vector<StarKernelSample> kernel_batch(const ManifoldModel& m,
                                           const std::vector<KernelTriple>& samples, double hbar,
                                           const TripleOptions& topt, const FluxOptions& fopt) {
  std::vector<StarKernelSample> out(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    out[i] = star_kernel(m, samples[i].x, samples[i].y, samples[i].z, hbar, topt, fopt);
  });
  return out;
}

std::vector<StarKernelSample> kernel_batch_ref(const ManifoldModel& m,
                                               const std::vector<KernelTriple>& samples,
                                               double hbar, const TripleOptions& topt,
                                               const FluxOptions& fopt) {
  std::vector<StarKernelSample> out(samples.size());
  serial_for(samples.size(), [&](std::size_t i) {
    out[i] = star_kernel(m, samples[i].x, samples[i].y, samples[i].z, hbar, topt, fopt);
  });
  return out;
}

std::vector<PhasePoint> sigma_batch(const ManifoldModel& m, const std::vector<PhasePoint>& xs,
                                    const std::vector<PhasePoint>& xps,
                                    const ReflectionOptions& opt) {
  if (xs.size() != xps.size()) throw ModelError("sigma_batch: size mismatch");
  std::vector<PhasePoint> out(xs.size());
  parallel_for(xs.size(), [&](std::size_t i) { out[i] = sigma(m, xs[i], xps[i], opt); });
  return out;
}

std::vector<PhasePoint> sigma_batch_ref(const ManifoldModel& m, const std::vector<PhasePoint>& xs,
                                        const std::vector<PhasePoint>& xps,
                                        const ReflectionOptions& opt) {
  if (xs.size() != xps.size()) throw ModelError("sigma_batch: size mismatch");
  std::vector<PhasePoint> out(xs.size());
  serial_for(xs.size(), [&](std::size_t i) { out[i] = sigma(m, xs[i], xps[i], opt); });
  return out;
}

std::vector<cplx> star_fiber_omp(const ManifoldModel& m, const FourierSymbol& f,
                                 const FourierSymbol& g, const Vec& q, const std::vector<Vec>& ps,
                                 const ConvolutionOptions& opt) {
  return fiber_impl(m, f, g, q, ps, opt, [](auto n, auto&& b) { parallel_for(n, b); });
}

std::vector<cplx> star_fiber_ref(const ManifoldModel& m, const FourierSymbol& f,
                                 const FourierSymbol& g, const Vec& q, const std::vector<Vec>& ps,
                                 const ConvolutionOptions& opt) {
  return fiber_impl(m, f, g, q, ps, opt, [](auto n, auto&& b) { serial_for(n, b); });
}

std::vector<cplx> star_batch(const ManifoldModel& m, const FourierSymbol& f,
                             const FourierSymbol& g, const std::vector<PhasePoint>& xs,
                             const ConvolutionOptions& opt) {
  std::vector<cplx> out(xs.size());
  parallel_for(xs.size(), [&](std::size_t i) { out[i] = star(m, f, g, xs[i], opt); });
  return out;
}

std::vector<cplx> star_batch_ref(const ManifoldModel& m, const FourierSymbol& f,
                                 const FourierSymbol& g, const std::vector<PhasePoint>& xs,
                                 const ConvolutionOptions& opt) {
  std::vector<cplx> out(xs.size());
  serial_for(xs.size(), [&](std::size_t i) { out[i] = star(m, f, g, xs[i], opt); });
  return out;
}

}  // namespace mgq

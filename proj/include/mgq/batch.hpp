#pragma once

// OpenMP batch drivers. Every parallel kernel has a serial *_ref twin that evaluates the same
// samples in the same order; results are written by index and reduced serially, so the two
// agree bit for bit whatever the thread count.

#include <vector>

#include "mgq/reflections.hpp"
#include "mgq/star_product.hpp"

namespace mgq {

int batch_threads();

FrontMap front_map_batch(const ManifoldModel& m, const Vec& y, const Vec& z, const Grid& scan,
                         const TripleOptions& opt = {});
FrontMap front_map_batch_ref(const ManifoldModel& m, const Vec& y, const Vec& z, const Grid& scan,
                             const TripleOptions& opt = {});

struct KernelTriple {
  PhasePoint x, y, z;
};
std::vector<StarKernelSample> kernel_batch(const ManifoldModel& m,
                                           const std::vector<KernelTriple>& samples, double hbar,
                                           const TripleOptions& topt = {},
                                           const FluxOptions& fopt = {});
std::vector<StarKernelSample> kernel_batch_ref(const ManifoldModel& m,
                                               const std::vector<KernelTriple>& samples,
                                               double hbar, const TripleOptions& topt = {},
                                               const FluxOptions& fopt = {});

// sigma_x(x') for a list of pairs.
std::vector<PhasePoint> sigma_batch(const ManifoldModel& m, const std::vector<PhasePoint>& xs,
                                    const std::vector<PhasePoint>& xps,
                                    const ReflectionOptions& opt = {});
std::vector<PhasePoint> sigma_batch_ref(const ManifoldModel& m, const std::vector<PhasePoint>& xs,
                                        const std::vector<PhasePoint>& xps,
                                        const ReflectionOptions& opt = {});

// star_fiber with the momentum quadrature nodes spread over threads.
std::vector<cplx> star_fiber_omp(const ManifoldModel& m, const FourierSymbol& f,
                                 const FourierSymbol& g, const Vec& q, const std::vector<Vec>& ps,
                                 const ConvolutionOptions& opt = {});
std::vector<cplx> star_fiber_ref(const ManifoldModel& m, const FourierSymbol& f,
                                 const FourierSymbol& g, const Vec& q, const std::vector<Vec>& ps,
                                 const ConvolutionOptions& opt = {});

// f * g at many phase points, one point per task.
std::vector<cplx> star_batch(const ManifoldModel& m, const FourierSymbol& f,
                             const FourierSymbol& g, const std::vector<PhasePoint>& xs,
                             const ConvolutionOptions& opt = {});
std::vector<cplx> star_batch_ref(const ManifoldModel& m, const FourierSymbol& f,
                                 const FourierSymbol& g, const std::vector<PhasePoint>& xs,
                                 const ConvolutionOptions& opt = {});

}  // namespace mgq

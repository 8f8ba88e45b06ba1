#ifndef XMT_SERIAL_H_
#define XMT_SERIAL_H_

#include <cstdint>
#include <vector>

#include "xmt/explain.h"
#include "xmt/types.h"

// Plain single-threaded reference implementations of the parallel
// kernels, kept for equality testing and benchmarking. Sampled
// computations draw from the same derived per-item RNG streams as the
// parallel versions, so those results match bitwise; exact Shapley uses
// a structurally different formula and matches within float tolerance.
namespace xmt::serial {

std::vector<double> score_dataset(const MetricFn& m, const std::vector<Sample>& samples);

Explanation erasure_explain(const MetricFn& m, const Sample& s, Segment seg);

Explanation lime_explain(const MetricFn& m, const Sample& s, Segment seg,
                         const LimeParams& p, std::uint64_t seed);

Explanation shapley_explain(const MetricFn& m, const Sample& s, Segment seg,
                            const ShapleyParams& p, std::uint64_t seed);

}  // namespace xmt::serial

#endif  // XMT_SERIAL_H_

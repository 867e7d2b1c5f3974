#pragma once

// Shared per-sample kernels for the training hot path. All buffers are
// caller-owned and sized once per batch, so the inner loops never allocate.

#include "deepen/dataset.hpp"
#include "deepen/network.hpp"

namespace deepen::detail {

// y = W * x; y must already have shape (W.rows x 1).
void matvec_into(const Matrix& w, const Matrix& x, Matrix& y);

// Sizes the cache buffers for params' architecture.
void setup_cache(const ParamSet& params, ForwardCache& cache);

// Forward pass of sample i with all intermediates written into cache;
// cache.states.back() holds the logits afterwards. Identical arithmetic to
// the public forward functions.
void forward_sample(const ParamSet& params, const Dataset& data, std::size_t i,
                    ForwardCache& cache);

// Loss of the logits in cache against sample i's label; when grad is non-null
// it receives dloss/dlogits (shape c x 1, preallocated).
double sample_loss(const ForwardCache& cache, const Dataset& data, std::size_t i, Matrix* grad);

int argmax_index(const Matrix& column);

}  // namespace deepen::detail

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "mop/mat.hpp"
#include "mop/objectives.hpp"

namespace mop {

enum class InvertMethod { Woodbury, Direct, Auto };

/// Per-block inverses G_k = F_k^{-1}. Blocks are shared pointers so that the
/// lambda = 1 case (all blocks identical) stores one matrix K times.
struct InverseSet {
    std::vector<std::shared_ptr<const Mat>> blocks;
    InvertMethod method_used{InvertMethod::Direct};
    std::size_t inversions_performed{0};

    const Mat& block(std::size_t k) const { return *blocks[k]; }
    std::size_t size() const { return blocks.size(); }
};

// J0 = (coef_recon * gramX + mu I)^{-1}, the shared Woodbury base.
Mat base_inverse(const HessianBundle& bundle);

// G = J0 - c J0 A (I_N + c A^T J0 A)^{-1} A^T J0 via an N x N Cholesky.
// c = 0 or A = 0 returns J0 bitwise. Never materializes F_k.
Mat woodbury_block_inverse(const Mat& j0, const Mat& a_k, double c);

// Temporary doubles allocated by the most recent woodbury_block_inverse call
// on this thread (bounded by d*N + N^2 + d^2).
std::size_t last_woodbury_temp_doubles();

InverseSet invert_all(const HessianBundle& bundle,
                      InvertMethod method = InvertMethod::Auto);

// Streaming form: invoke fn(k, G_k) per block without retaining the blocks.
// Returns the number of matrix inversions performed.
std::size_t for_each_block_inverse(const HessianBundle& bundle, InvertMethod method,
                                   const std::function<void(std::size_t, const Mat&)>& fn);

// Resolve Auto against the bundle's structure.
InvertMethod resolve_method(const HessianBundle& bundle, InvertMethod method);

}  // namespace mop

#include "mop/hinv.hpp"

#include <cmath>
#include <optional>

namespace mop {

namespace {

thread_local std::size_t g_woodbury_temp_doubles = 0;

Mat damped_base_inverse(const HessianBundle& bundle, double mu) {
    const std::size_t d = bundle.dim();
    const double cr = bundle.coef_recon();
    Mat base(d, d);
    if (cr != 0.0)
        for (std::size_t i = 0; i < base.data.size(); ++i)
            base.data[i] = cr * bundle.gram_x.data[i];
    for (std::size_t i = 0; i < d; ++i) base(i, i) += mu;
    try {
        return spd_inverse(base);
    } catch (const NotPositiveDefinite&) {
        throw std::runtime_error("base not invertible; increase damping");
    }
}

}  // namespace

std::size_t last_woodbury_temp_doubles() { return g_woodbury_temp_doubles; }

Mat base_inverse(const HessianBundle& bundle) {
    return damped_base_inverse(bundle, bundle.mu);
}

Mat woodbury_block_inverse(const Mat& j0, const Mat& a_k, double c) {
    if (c < 0.0) throw std::invalid_argument("woodbury: negative coefficient");
    g_woodbury_temp_doubles = 0;
    if (c == 0.0 || a_k.size() == 0) return j0;
    if (a_k.rows != j0.rows) throw std::invalid_argument("woodbury: factor/base mismatch");
    const std::size_t d = j0.rows;
    const std::size_t n = a_k.cols;

    // Z = J0 A, later overwritten in place with Z L^{-T}.
    Mat z = matmul(j0, a_k);
    g_woodbury_temp_doubles += z.data.size();

    // M = I + c A^T Z, factored in place (SPD since J0 is PD and c >= 0).
    Mat m(n, n);
    g_woodbury_temp_doubles += m.data.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < d; ++r) s += a_k(r, i) * z(r, j);
            s *= c;
            if (i == j) s += 1.0;
            m(i, j) = s;
            m(j, i) = s;
        }
    }
    try {
        cholesky_inplace(m);
    } catch (const NotPositiveDefinite&) {
        throw std::runtime_error("woodbury: inner system numerically singular; retry Direct");
    }

    // Row-wise forward substitution gives Z <- Z L^{-T}, so the correction is
    // c * Z Z^T without forming the N x N inverse.
    for (std::size_t r = 0; r < d; ++r) {
        double* zr = z.row_ptr(r);
        for (std::size_t i = 0; i < n; ++i) {
            double s = zr[i];
            const double* mi = m.row_ptr(i);
            for (std::size_t k = 0; k < i; ++k) s -= mi[k] * zr[k];
            zr[i] = s / mi[i];
        }
    }

    Mat g(d, d);
    g_woodbury_temp_doubles += g.data.size();
    for (std::size_t i = 0; i < d; ++i) {
        const double* zi = z.row_ptr(i);
        for (std::size_t j = i; j < d; ++j) {
            const double* zj = z.row_ptr(j);
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += zi[k] * zj[k];
            const double v = j0(i, j) - c * s;
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    debug_check_finite(g, "woodbury_block_inverse");
    return g;
}

InvertMethod resolve_method(const HessianBundle& bundle, InvertMethod method) {
    if (method != InvertMethod::Auto) return method;
    const bool shared = bundle.shared_base();
    const bool low_rank = 2 * bundle.n_samples <= bundle.dim();
    const bool enough_blocks = bundle.block_count() >= 4;
    return (shared && low_rank && enough_blocks) ? InvertMethod::Woodbury
                                                 : InvertMethod::Direct;
}

Mat single_block_inverse(const HessianBundle& bundle, std::size_t k, InvertMethod method,
                         const Mat* shared_j0) {
    method = resolve_method(bundle, method);
    try {
        if (method == InvertMethod::Direct) return spd_inverse(combined_block(bundle, k));
        Mat local;
        const Mat* base = shared_j0;
        if (base == nullptr) {
            local = bundle.shared_base()
                        ? base_inverse(bundle)
                        : damped_base_inverse(bundle, bundle.block_damp(k));
            base = &local;
        }
        return woodbury_block_inverse(*base, bundle.fisher_a[k], bundle.coef_fisher());
    } catch (const std::exception& e) {
        throw std::runtime_error("block " + std::to_string(k) + ": " + e.what());
    }
}

std::size_t for_each_block_inverse(const HessianBundle& bundle, InvertMethod method,
                                   const std::function<void(std::size_t, const Mat&)>& fn) {
    method = resolve_method(bundle, method);
    const std::size_t k_total = bundle.block_count();
    if (k_total == 0) return 0;
    std::size_t inversions = 0;

    // lambda = 1 with a shared base: every block is the same matrix.
    if (bundle.coef_fisher() == 0.0 && bundle.shared_base()) {
        const Mat g = method == InvertMethod::Woodbury
                          ? base_inverse(bundle)
                          : spd_inverse(combined_block(bundle, 0));
        inversions = 1;
        for (std::size_t k = 0; k < k_total; ++k) fn(k, g);
        return inversions;
    }

    std::optional<Mat> j0;
    if (method == InvertMethod::Woodbury && bundle.shared_base()) {
        j0 = base_inverse(bundle);
        ++inversions;
    }
    for (std::size_t k = 0; k < k_total; ++k) {
        const Mat g = single_block_inverse(bundle, k, method, j0 ? &*j0 : nullptr);
        ++inversions;
        fn(k, g);
    }
    return inversions;
}

InverseSet invert_all(const HessianBundle& bundle, InvertMethod method) {
    InverseSet set;
    set.method_used = resolve_method(bundle, method);
    set.blocks.resize(bundle.block_count());
    if (bundle.block_count() == 0) return set;

    // Share storage when all blocks collapse to one inverse.
    if (bundle.coef_fisher() == 0.0 && bundle.shared_base()) {
        auto g = std::make_shared<Mat>(set.method_used == InvertMethod::Woodbury
                                           ? base_inverse(bundle)
                                           : spd_inverse(combined_block(bundle, 0)));
        set.inversions_performed = 1;
        for (auto& slot : set.blocks) slot = g;
        return set;
    }

    set.inversions_performed = for_each_block_inverse(
        bundle, set.method_used,
        [&set](std::size_t k, const Mat& g) { set.blocks[k] = std::make_shared<Mat>(g); });
    return set;
}

}  // namespace mop

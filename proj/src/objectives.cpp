#include "mop/objectives.hpp"

#include <cmath>

namespace mop {

namespace {

constexpr double kDegenerateEps = 1e-12;

double mean_diag(const Mat& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) s += m(i, i);
    return s / static_cast<double>(m.rows);
}

std::vector<double> row_diff(const Mat& w, const Mat& w_hat, std::size_t k) {
    std::vector<double> d(w.cols);
    for (std::size_t c = 0; c < w.cols; ++c) d[c] = w(k, c) - w_hat(k, c);
    return d;
}

}  // namespace

double HessianBundle::lambda_eff() const {
    if (fisher_degenerate) return 1.0;
    if (recon_degenerate) return 0.0;
    return lambda;
}

double HessianBundle::coef_recon() const {
    const double l = lambda_eff();
    if (l == 0.0) return 0.0;
    return l / rho_r;
}

double HessianBundle::coef_fisher() const {
    const double l = lambda_eff();
    if (l == 1.0) return 0.0;
    return (1.0 - l) / (static_cast<double>(n_samples) * rho_f);
}

double HessianBundle::block_damp(std::size_t k) const {
    switch (damp) {
        case DampPolicy::None:
            return 0.0;
        case DampPolicy::SparseGptStyle:
            return mu;
        case DampPolicy::PerBlock: {
            const double cr = coef_recon();
            const double cf = coef_fisher();
            const Mat& a = fisher_a[k];
            double s = 0.0;
            for (std::size_t i = 0; i < dim(); ++i) {
                double row_sq = 0.0;
                for (std::size_t j = 0; j < a.cols; ++j) row_sq += a(i, j) * a(i, j);
                s += cr * gram_x(i, i) + cf * row_sq;
            }
            return 0.01 * s / static_cast<double>(dim());
        }
    }
    return 0.0;
}

double recon_normalizer(const Mat& w_hat, const Mat& x) {
    if (w_hat.cols != x.rows) throw std::invalid_argument("recon_normalizer: shape mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < w_hat.rows; ++k) {
        const double* wk = w_hat.row_ptr(k);
        for (std::size_t n = 0; n < x.cols; ++n) {
            double y = 0.0;
            for (std::size_t c = 0; c < x.rows; ++c) y += wk[c] * x(c, n);
            s += y * y;
        }
    }
    return s;
}

double fisher_normalizer(const Mat& w_hat, const LayerCapture& cap) {
    if (w_hat.rows != cap.d_out() || w_hat.cols != cap.d_in())
        throw std::invalid_argument("fisher_normalizer: capture does not match layer");
    const std::size_t n = cap.n_samples();
    double s = 0.0;
    for (std::size_t k = 0; k < w_hat.rows; ++k) {
        const double* wk = w_hat.row_ptr(k);
        for (std::size_t j = 0; j < n; ++j) {
            // (A_k^T w)_j = deltas(k,j) * <x_j, w>
            double xw = 0.0;
            for (std::size_t c = 0; c < cap.d_in(); ++c) xw += cap.x(c, j) * wk[c];
            const double v = cap.deltas(k, j) * xw;
            s += v * v;
        }
    }
    return s / static_cast<double>(n);
}

Mat blockify_gram(const Mat& gram_x,
                  const std::vector<std::vector<std::size_t>>& partition) {
    const std::size_t d = gram_x.rows;
    std::vector<int> cell(d, -1);
    for (std::size_t b = 0; b < partition.size(); ++b) {
        for (std::size_t idx : partition[b]) {
            if (idx >= d) throw std::invalid_argument("blockify_gram: index out of range");
            if (cell[idx] != -1) throw std::invalid_argument("blockify_gram: overlapping partition");
            cell[idx] = static_cast<int>(b);
        }
    }
    for (std::size_t i = 0; i < d; ++i)
        if (cell[i] == -1) throw std::invalid_argument("blockify_gram: partition does not tile all columns");
    Mat out(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            out(i, j) = (cell[i] == cell[j]) ? gram_x(i, j) : 0.0;
    return out;
}

HessianBundle assemble_bundle(Mat gram_x, std::vector<Mat> fisher_a, double rho_r,
                              double rho_f, double lambda, double mu,
                              std::size_t n_samples, DampPolicy damp) {
    if (lambda < 0.0 || lambda > 1.0)
        throw std::invalid_argument("lambda must lie in [0, 1]");
    HessianBundle b;
    b.gram_x = std::move(gram_x);
    b.fisher_a = std::move(fisher_a);
    b.rho_r = rho_r;
    b.rho_f = rho_f;
    b.lambda = lambda;
    b.mu = mu;
    b.n_samples = n_samples;
    b.damp = damp;
    b.fisher_degenerate = rho_f < kDegenerateEps;
    b.recon_degenerate = rho_r < kDegenerateEps;
    return b;
}

HessianBundle build_bundle(const LayerCapture& cap, const Mat& w_hat,
                           const ObjectiveSpec& spec) {
    if (spec.lambda < 0.0 || spec.lambda > 1.0)
        throw std::invalid_argument("lambda must lie in [0, 1]");
    Mat g = gram(cap.x);
    const double mu =
        spec.damp == DampPolicy::SparseGptStyle ? 0.01 * mean_diag(g) : 0.0;
    if (!spec.gram_partition.empty()) g = blockify_gram(g, spec.gram_partition);
    std::vector<Mat> factors;
    factors.reserve(cap.d_out());
    for (std::size_t k = 0; k < cap.d_out(); ++k) factors.push_back(cap.fisher_factor(k));
    return assemble_bundle(std::move(g), std::move(factors),
                           recon_normalizer(w_hat, cap.x), fisher_normalizer(w_hat, cap),
                           spec.lambda, mu, cap.n_samples(), spec.damp);
}

Mat combined_block(const HessianBundle& bundle, std::size_t k) {
    if (k >= bundle.block_count()) throw std::invalid_argument("combined_block: bad row index");
    const double cr = bundle.coef_recon();
    const double cf = bundle.coef_fisher();
    const std::size_t d = bundle.dim();
    Mat f(d, d);
    if (cr != 0.0)
        for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] = cr * bundle.gram_x.data[i];
    if (cf != 0.0) {
        const Mat& a = bundle.fisher_a[k];
        for (std::size_t i = 0; i < d; ++i) {
            const double* ai = a.row_ptr(i);
            for (std::size_t j = i; j < d; ++j) {
                const double* aj = a.row_ptr(j);
                double s = 0.0;
                for (std::size_t n = 0; n < a.cols; ++n) s += ai[n] * aj[n];
                f(i, j) += cf * s;
                if (j != i) f(j, i) = f(i, j);
            }
        }
    }
    const double mu_k = bundle.block_damp(k);
    if (mu_k != 0.0)
        for (std::size_t i = 0; i < d; ++i) f(i, i) += mu_k;
    debug_check_finite(f, "combined_block");
    return f;
}

LossTriple eval_losses(const Mat& w, const Mat& w_hat, const HessianBundle& bundle) {
    if (!w.same_shape(w_hat)) throw std::invalid_argument("eval_losses: shape mismatch");
    if (w.rows != bundle.block_count() || w.cols != bundle.dim())
        throw std::invalid_argument("eval_losses: bundle does not match layer");
    LossTriple t;
    const double inv_n = 1.0 / static_cast<double>(bundle.n_samples);
    for (std::size_t k = 0; k < w.rows; ++k) {
        const std::vector<double> d = row_diff(w, w_hat, k);
        t.recon += quad_form(bundle.gram_x, d);
        const Mat& a = bundle.fisher_a[k];
        double fk = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < a.rows; ++c) s += a(c, j) * d[c];
            fk += s * s;
        }
        t.fisher += fk * inv_n;
    }
    const double l = bundle.lambda_eff();
    t.blended = 0.0;
    if (l > 0.0) t.blended += l * t.recon / bundle.rho_r;
    if (l < 1.0) t.blended += (1.0 - l) * t.fisher / bundle.rho_f;
    return t;
}

}  // namespace mop

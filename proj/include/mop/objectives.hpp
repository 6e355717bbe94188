#pragma once

#include <cstddef>
#include <vector>

#include "mop/mat.hpp"
#include "mop/toynet.hpp"

namespace mop {

enum class DampPolicy {
    SparseGptStyle,  // one mu = 0.01 * mean diag of X X^T, shared by all blocks
    PerBlock,        // mu_k = 0.01 * mean diag of block k's undamped matrix
    None,
};

/// How a layer's blended quadratic is assembled.
struct ObjectiveSpec {
    double lambda{1.0};
    DampPolicy damp{DampPolicy::SparseGptStyle};
    // Column-index partition applied to X X^T (empty = keep it whole, one
    // row of W per block). A non-empty partition must tile [0, d_in).
    std::vector<std::vector<std::size_t>> gram_partition;
};

/// Everything needed to materialize any per-row block
///   F_k = coef_recon * gramX + coef_fisher * A_k A_k^T + mu_k I.
struct HessianBundle {
    Mat gram_x;               // X X^T, possibly blockified
    std::vector<Mat> fisher_a;  // A_k per weight row, each d_in x N
    double rho_r{0};          // reconstruction loss at W = 0
    double rho_f{0};          // Fisher loss at W = 0
    double lambda{1.0};
    double mu{0};             // damping on the shared base
    std::size_t n_samples{0};
    DampPolicy damp{DampPolicy::SparseGptStyle};
    bool fisher_degenerate{false};  // rho_f ~ 0: behaves as lambda = 1
    bool recon_degenerate{false};   // rho_r ~ 0: behaves as lambda = 0

    std::size_t dim() const { return gram_x.rows; }
    std::size_t block_count() const { return fisher_a.size(); }

    double lambda_eff() const;
    double coef_recon() const;   // lambda_eff / rho_r (0 when inactive)
    double coef_fisher() const;  // (1 - lambda_eff) / (N * rho_f) (0 when inactive)
    double block_damp(std::size_t k) const;

    // True when every block shares the same damped base (Woodbury applies).
    bool shared_base() const { return damp != DampPolicy::PerBlock; }
};

// ||W_hat X||_F^2, the reconstruction loss of the all-zero weight matrix.
double recon_normalizer(const Mat& w_hat, const Mat& x);

// (1/N) sum_k ||A_k^T w_hat_k||^2, computed in factored form.
double fisher_normalizer(const Mat& w_hat, const LayerCapture& cap);

HessianBundle build_bundle(const LayerCapture& cap, const Mat& w_hat,
                           const ObjectiveSpec& spec);

// Bundle straight from raw parts; used by tests and the inversion benchmark.
HessianBundle assemble_bundle(Mat gram_x, std::vector<Mat> fisher_a, double rho_r,
                              double rho_f, double lambda, double mu,
                              std::size_t n_samples,
                              DampPolicy damp = DampPolicy::None);

Mat combined_block(const HessianBundle& bundle, std::size_t k);

struct LossTriple {
    double recon{0};
    double fisher{0};
    double blended{0};
};

LossTriple eval_losses(const Mat& w, const Mat& w_hat, const HessianBundle& bundle);

// Zero every entry of a square matrix that straddles two partition cells.
Mat blockify_gram(const Mat& gram_x,
                  const std::vector<std::vector<std::size_t>>& partition);

}  // namespace mop

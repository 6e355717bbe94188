#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mop {

/// Dense row-major matrix of 64-bit floats. The single carrier type for
/// weights, activations, Gram matrices, Hessian blocks and their inverses.
struct Mat {
    std::size_t rows{0};
    std::size_t cols{0};
    std::vector<double> data;  // row-major, rows * cols entries

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    static Mat identity(std::size_t n);

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row_ptr(std::size_t r) { return data.data() + r * cols; }
    const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }

    std::size_t size() const { return rows * cols; }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

/// Thrown by cholesky/spd_inverse when a pivot is not strictly positive.
struct NotPositiveDefinite : std::runtime_error {
    std::size_t pivot;
    explicit NotPositiveDefinite(std::size_t p)
        : std::runtime_error("not positive definite (pivot " + std::to_string(p) + ")"),
          pivot(p) {}
};

/// Lower-triangular Cholesky factor: lower * lower^T reconstructs the input.
struct CholFactor {
    Mat lower;
    std::size_t dim{0};
};

// X (d x N) -> X X^T (d x d). Both triangles are written from one dot
// product, so the result is bitwise symmetric.
Mat gram(const Mat& x);

// A must be symmetric positive definite. Throws NotPositiveDefinite with the
// offending pivot index otherwise.
CholFactor cholesky(const Mat& a);

// In-place variant: on return the lower triangle of a holds L and the strict
// upper triangle is zeroed.
void cholesky_inplace(Mat& a);

// Inverse of a symmetric positive definite matrix via Cholesky. The result is
// explicitly symmetrized as (M + M^T)/2.
Mat spd_inverse(const Mat& a);

// Solve L y = b (L lower-triangular) / L^T x = y, overwriting the argument.
void forward_subst(const Mat& lower, std::vector<double>& b);
void back_subst_transposed(const Mat& lower, std::vector<double>& b);

// Solve A x = b for symmetric positive definite A using a precomputed factor.
std::vector<double> chol_solve(const CholFactor& f, std::vector<double> b);

Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);

// a + s * b, shapes must match.
Mat mat_axpy(const Mat& a, double s, const Mat& b);

double frobenius_norm(const Mat& a);
double max_abs_diff(const Mat& a, const Mat& b);
double dot(const std::vector<double>& a, const std::vector<double>& b);

// Relative Frobenius distance ||a - b||_F / ||b||_F (0 if both empty/zero).
double rel_frobenius_dist(const Mat& a, const Mat& b);

// Quadratic form v^T A v for square A.
double quad_form(const Mat& a, const std::vector<double>& v);

// Debug-build guard: every public operation in this module checks its result
// for NaN/Inf through this hook. Compiled out under NDEBUG.
void debug_check_finite(const Mat& m, const char* where);

}  // namespace mop

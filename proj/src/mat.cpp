#include "mop/mat.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace mop {

void debug_check_finite(const Mat& m, const char* where) {
#ifdef NDEBUG
    (void)m;
    (void)where;
#else
    for (double v : m.data) {
        if (!std::isfinite(v)) {
            assert(false && "non-finite matrix entry");
            throw std::runtime_error(std::string("non-finite value in ") + where);
        }
    }
#endif
}

Mat Mat::identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat gram(const Mat& x) {
    if (x.rows == 0 || x.cols == 0) throw std::invalid_argument("gram: empty input");
    Mat g(x.rows, x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* xi = x.row_ptr(i);
        for (std::size_t j = i; j < x.rows; ++j) {
            const double* xj = x.row_ptr(j);
            double s = 0.0;
            for (std::size_t n = 0; n < x.cols; ++n) s += xi[n] * xj[n];
            g(i, j) = s;
            g(j, i) = s;
        }
    }
    debug_check_finite(g, "gram");
    return g;
}

void cholesky_inplace(Mat& a) {
    if (a.rows != a.cols) throw std::invalid_argument("cholesky: matrix not square");
    if (a.rows == 0) throw std::invalid_argument("cholesky: empty input");
    const std::size_t n = a.rows;
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        const double* lj = a.row_ptr(j);
        for (std::size_t k = 0; k < j; ++k) d -= lj[k] * lj[k];
        if (!(d > 0.0) || !std::isfinite(d)) throw NotPositiveDefinite(j);
        const double ljj = std::sqrt(d);
        a(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            const double* li = a.row_ptr(i);
            for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
            a(i, j) = s / ljj;
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) a(i, j) = 0.0;
}

CholFactor cholesky(const Mat& a) {
    Mat l = a;
    cholesky_inplace(l);
    debug_check_finite(l, "cholesky");
    return CholFactor{std::move(l), a.rows};
}

void forward_subst(const Mat& lower, std::vector<double>& b) {
    const std::size_t n = lower.rows;
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        const double* li = lower.row_ptr(i);
        for (std::size_t k = 0; k < i; ++k) s -= li[k] * b[k];
        b[i] = s / li[i];
    }
}

void back_subst_transposed(const Mat& lower, std::vector<double>& b) {
    const std::size_t n = lower.rows;
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= lower(k, ii) * b[k];
        b[ii] = s / lower(ii, ii);
    }
}

std::vector<double> chol_solve(const CholFactor& f, std::vector<double> b) {
    forward_subst(f.lower, b);
    back_subst_transposed(f.lower, b);
    return b;
}

Mat spd_inverse(const Mat& a) {
    const CholFactor f = cholesky(a);
    const std::size_t n = a.rows;
    Mat inv(n, n);
    std::vector<double> col(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(col.begin(), col.end(), 0.0);
        col[j] = 1.0;
        forward_subst(f.lower, col);
        back_subst_transposed(f.lower, col);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    }
    // symmetrize; the two triangles differ only by rounding
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = 0.5 * (inv(i, j) + inv(j, i));
            inv(i, j) = s;
            inv(j, i) = s;
        }
    debug_check_finite(inv, "spd_inverse");
    return inv;
}

Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: dimension mismatch");
    Mat c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row_ptr(i);
        double* ci = c.row_ptr(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = ai[k];
            if (aik == 0.0) continue;
            const double* bk = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
        }
    }
    debug_check_finite(c, "matmul");
    return c;
}

Mat transpose(const Mat& a) {
    Mat t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

Mat mat_axpy(const Mat& a, double s, const Mat& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("mat_axpy: shape mismatch");
    Mat c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += s * b.data[i];
    debug_check_finite(c, "mat_axpy");
    return c;
}

double frobenius_norm(const Mat& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return std::sqrt(s);
}

double max_abs_diff(const Mat& a, const Mat& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double rel_frobenius_dist(const Mat& a, const Mat& b) {
    const double denom = frobenius_norm(b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        s += d * d;
    }
    const double num = std::sqrt(s);
    if (denom == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return num / denom;
}

double quad_form(const Mat& a, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row_ptr(i);
        double r = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) r += ai[j] * v[j];
        s += v[i] * r;
    }
    return s;
}

}  // namespace mop

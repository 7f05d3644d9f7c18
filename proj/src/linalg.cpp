#include "iomdp/linalg.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

#include "iomdp/errors.hpp"

namespace iomdp {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t n = rows.size();
    const std::size_t m = n == 0 ? 0 : rows.front().size();
    Matrix out(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != m) {
            throw Error(ErrorCode::DimensionMismatch, "ragged matrix rows");
        }
        std::copy(rows[i].begin(), rows[i].end(), out.row(i).begin());
    }
    return out;
}

Matrix Matrix::identity(std::size_t n) {
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
    return out;
}

Matrix Matrix::transposed() const {
    Matrix out(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
    return out;
}

LuFactorization::LuFactorization(Matrix a, double singular_tol) : lu_(std::move(a)) {
    const std::size_t n = lu_.rows();
    if (lu_.cols() != n) throw Error(ErrorCode::DimensionMismatch, "LU of a non-square matrix");
    perm_.resize(n);
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(lu_(i, j)));
    const double threshold = singular_tol * std::max(scale, 1.0);

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t pivot = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(lu_(i, k)) > std::abs(lu_(pivot, k))) pivot = i;
        if (std::abs(lu_(pivot, k)) <= threshold) {
            throw Error(ErrorCode::SingularSystem, "matrix is singular at column " + std::to_string(k));
        }
        if (pivot != k) {
            std::swap_ranges(lu_.row(k).begin(), lu_.row(k).end(), lu_.row(pivot).begin());
            std::swap(perm_[k], perm_[pivot]);
        }
        const double inv = 1.0 / lu_(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = lu_(i, k) * inv;
            lu_(i, k) = f;
            if (f == 0.0) continue;
            auto ri = lu_.row(i);
            auto rk = lu_.row(k);
            for (std::size_t j = k + 1; j < n; ++j) ri[j] -= f * rk[j];
        }
    }
}

std::vector<double> LuFactorization::solve(std::span<const double> b) const {
    const std::size_t n = size();
    assert(b.size() == n);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = i + 1; j < n; ++j) x[i] -= lu_(i, j) * x[j];
        x[i] /= lu_(i, i);
    }
    return x;
}

std::vector<double> LuFactorization::solve_transposed(std::span<const double> c) const {
    // PA = LU  =>  Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ z = c, Lᵀ w = z, y = Pᵀ w.
    const std::size_t n = size();
    assert(c.size() == n);
    std::vector<double> z(c.begin(), c.end());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) z[i] -= lu_(j, i) * z[j];
        z[i] /= lu_(i, i);
    }
    for (std::size_t i = n; i-- > 0;)
        for (std::size_t j = i + 1; j < n; ++j) z[i] -= lu_(j, i) * z[j];
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[perm_[i]] = z[i];
    return y;
}

std::vector<double> solve_linear(Matrix a, std::span<const double> b) {
    return LuFactorization(std::move(a)).solve(b);
}

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::vector<double> left_multiply(std::span<const double> x, const Matrix& m) {
    assert(x.size() == m.rows());
    std::vector<double> y(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (x[i] == 0.0) continue;
        auto r = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) y[j] += x[i] * r[j];
    }
    return y;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace iomdp

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace iomdp {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(const std::vector<std::vector<double>>& rows);
    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    Matrix transposed() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// LU factorization with partial pivoting. Throws Error(SingularSystem) when a
/// pivot falls below `singular_tol` times the largest entry of the input.
class LuFactorization {
public:
    explicit LuFactorization(Matrix a, double singular_tol = 1e-13);

    std::size_t size() const noexcept { return lu_.rows(); }

    /// Solves A x = b.
    std::vector<double> solve(std::span<const double> b) const;
    /// Solves Aᵀ y = c.
    std::vector<double> solve_transposed(std::span<const double> c) const;

private:
    Matrix lu_;
    std::vector<std::size_t> perm_;
};

std::vector<double> solve_linear(Matrix a, std::span<const double> b);

double dot(std::span<const double> a, std::span<const double> b);

/// yᵀ = xᵀ M, i.e. y[j] = Σ_i x[i] M(i, j).
std::vector<double> left_multiply(std::span<const double> x, const Matrix& m);

double max_abs_diff(std::span<const double> a, std::span<const double> b);

}  // namespace iomdp

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace podrom {

using Vector = std::vector<double>;

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

/// Row-major dense matrix.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static DenseMatrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }
    Vector column(std::size_t j) const;
    void set_column(std::size_t j, std::span<const double> values);

    const std::vector<double>& entries() const noexcept { return data_; }

    Vector multiply(std::span<const double> x) const;
    /// this^T * x
    Vector multiply_transposed(std::span<const double> x) const;
    DenseMatrix transposed() const;
    double frobenius_norm() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);

/// Compressed sparse row storage. Column indices are strictly increasing inside each row.
class CsrMatrix {
public:
    struct Triplet {
        std::size_t row;
        std::size_t col;
        double value;
    };

    CsrMatrix() = default;
    /// Validates the structural invariants; throws InvalidInput on violation.
    CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
              std::vector<std::size_t> col_indices, std::vector<double> values);

    /// Duplicate (row, col) pairs are summed. Explicit zeros are kept.
    static CsrMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets);
    static CsrMatrix identity(std::size_t n);
    static CsrMatrix from_dense(const DenseMatrix& a, double drop_below = 0.0);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t nnz() const noexcept { return values_.size(); }

    const std::vector<std::size_t>& row_offsets() const noexcept { return row_offsets_; }
    const std::vector<std::size_t>& col_indices() const noexcept { return col_indices_; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::vector<double>& values() noexcept { return values_; }

    /// Position of (i, j) in values(), or npos when outside the pattern.
    std::size_t find(std::size_t i, std::size_t j) const noexcept;
    double at(std::size_t i, std::size_t j) const noexcept;
    Vector diagonal() const;

    DenseMatrix to_dense() const;
    /// Same pattern, values scaled and summed: a*this + b*other (patterns must match).
    CsrMatrix combine(double a, const CsrMatrix& other, double b) const;
    /// Matrix with the same pattern and all values zero.
    CsrMatrix zero_like() const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_offsets_{0};
    std::vector<std::size_t> col_indices_;
    std::vector<double> values_;
};

/// Block-diagonal matrix diag(a, a, ..., a) with `copies` blocks.
CsrMatrix block_diagonal(const CsrMatrix& a, std::size_t copies);

struct EigenDecomposition {
    Vector eigenvalues;        ///< sorted descending
    DenseMatrix eigenvectors;  ///< column k pairs with eigenvalues[k]
};

/// Full spectrum of a symmetric matrix by cyclic Jacobi rotations.
EigenDecomposition sym_eigen(const DenseMatrix& a);

Vector csr_matvec(const CsrMatrix& a, std::span<const double> x);
/// Computes y = a*x into an existing buffer.
void csr_matvec(const CsrMatrix& a, std::span<const double> x, std::span<double> y);

/// Gaussian elimination with partial pivoting.
Vector dense_lu_solve(const DenseMatrix& a, std::span<const double> b);

enum class Preconditioner { none, jacobi };

struct KrylovResult {
    Vector x;
    std::size_t iterations = 0;
    double residual_norm = 0.0;
};

/// Preconditioned BiCGStab. Stops when ||b - a x|| <= tol * ||b||.
KrylovResult krylov_solve(const CsrMatrix& a, std::span<const double> b, double tol,
                          std::size_t max_iter, Preconditioner preconditioner = Preconditioner::jacobi);

}  // namespace podrom

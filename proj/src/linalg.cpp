#include "podrom/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "podrom/error.hpp"

namespace podrom {

double dot(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InvalidInput("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) throw InvalidInput("axpy: dimension mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

// ---------------------------------------------------------------------------
// DenseMatrix

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows * cols) throw InvalidInput("DenseMatrix: entries length != rows*cols");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Vector DenseMatrix::column(std::size_t j) const {
    Vector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
}

void DenseMatrix::set_column(std::size_t j, std::span<const double> values) {
    if (values.size() != rows_) throw InvalidInput("set_column: dimension mismatch");
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = values[i];
}

Vector DenseMatrix::multiply(std::span<const double> x) const {
    if (x.size() != cols_) throw InvalidInput("DenseMatrix::multiply: dimension mismatch");
    Vector y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        const double* r = data_.data() + i * cols_;
        double s = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) s += r[j] * x[j];
        y[i] = s;
    }
    return y;
}

Vector DenseMatrix::multiply_transposed(std::span<const double> x) const {
    if (x.size() != rows_) throw InvalidInput("DenseMatrix::multiply_transposed: dimension mismatch");
    Vector y(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        const double* r = data_.data() + i * cols_;
        const double xi = x[i];
        for (std::size_t j = 0; j < cols_; ++j) y[j] += r[j] * xi;
    }
    return y;
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double DenseMatrix::frobenius_norm() const { return norm2(data_); }

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw InvalidInput("matrix product: dimension mismatch");
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            auto brow = b.row(k);
            auto crow = c.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
        }
    return c;
}

// ---------------------------------------------------------------------------
// CsrMatrix

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
                     std::vector<std::size_t> col_indices, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
    if (row_offsets_.size() != rows_ + 1) throw InvalidInput("CsrMatrix: row_offsets length != rows+1");
    if (row_offsets_.front() != 0 || row_offsets_.back() != col_indices_.size())
        throw InvalidInput("CsrMatrix: row_offsets do not bracket col_indices");
    if (col_indices_.size() != values_.size()) throw InvalidInput("CsrMatrix: col_indices/values length mismatch");
    for (std::size_t i = 0; i < rows_; ++i) {
        if (row_offsets_[i] > row_offsets_[i + 1]) throw InvalidInput("CsrMatrix: row_offsets decreasing");
        for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
            if (col_indices_[k] >= cols_) throw InvalidInput("CsrMatrix: column index out of range");
            if (k > row_offsets_[i] && col_indices_[k] <= col_indices_[k - 1])
                throw InvalidInput("CsrMatrix: column indices not strictly increasing in row " + std::to_string(i));
        }
    }
}

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets) {
    for (const auto& t : triplets)
        if (t.row >= rows || t.col >= cols) throw InvalidInput("from_triplets: index out of range");
    std::sort(triplets.begin(), triplets.end(),
              [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
    std::vector<std::size_t> offsets(rows + 1, 0);
    std::vector<std::size_t> cols_out;
    std::vector<double> vals;
    cols_out.reserve(triplets.size());
    vals.reserve(triplets.size());
    std::size_t k = 0;
    while (k < triplets.size()) {
        const auto r = triplets[k].row;
        const auto c = triplets[k].col;
        double v = 0.0;
        while (k < triplets.size() && triplets[k].row == r && triplets[k].col == c) v += triplets[k++].value;
        cols_out.push_back(c);
        vals.push_back(v);
        ++offsets[r + 1];
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    return CsrMatrix(rows, cols, std::move(offsets), std::move(cols_out), std::move(vals));
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
    std::vector<std::size_t> offsets(n + 1), cols(n);
    std::iota(offsets.begin(), offsets.end(), std::size_t{0});
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    return CsrMatrix(n, n, std::move(offsets), std::move(cols), Vector(n, 1.0));
}

CsrMatrix CsrMatrix::from_dense(const DenseMatrix& a, double drop_below) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (std::abs(a(i, j)) > drop_below) t.push_back({i, j, a(i, j)});
    return from_triplets(a.rows(), a.cols(), std::move(t));
}

std::size_t CsrMatrix::find(std::size_t i, std::size_t j) const noexcept {
    if (i >= rows_) return npos;
    const auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
    const auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return npos;
    return static_cast<std::size_t>(it - col_indices_.begin());
}

double CsrMatrix::at(std::size_t i, std::size_t j) const noexcept {
    const auto k = find(i, j);
    return k == npos ? 0.0 : values_[k];
}

Vector CsrMatrix::diagonal() const {
    Vector d(std::min(rows_, cols_), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
    return d;
}

DenseMatrix CsrMatrix::to_dense() const {
    DenseMatrix d(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) d(i, col_indices_[k]) = values_[k];
    return d;
}

CsrMatrix CsrMatrix::combine(double a, const CsrMatrix& other, double b) const {
    if (other.row_offsets_ != row_offsets_ || other.col_indices_ != col_indices_)
        throw InvalidInput("CsrMatrix::combine: sparsity patterns differ");
    CsrMatrix out = *this;
    for (std::size_t k = 0; k < values_.size(); ++k) out.values_[k] = a * values_[k] + b * other.values_[k];
    return out;
}

CsrMatrix CsrMatrix::zero_like() const {
    CsrMatrix out = *this;
    std::fill(out.values_.begin(), out.values_.end(), 0.0);
    return out;
}

CsrMatrix block_diagonal(const CsrMatrix& a, std::size_t copies) {
    if (copies == 1) return a;
    const std::size_t n = a.rows(), m = a.cols(), nnz = a.nnz();
    std::vector<std::size_t> offsets(n * copies + 1, 0);
    std::vector<std::size_t> cols(nnz * copies);
    Vector vals(nnz * copies);
    for (std::size_t b = 0; b < copies; ++b) {
        for (std::size_t i = 0; i < n; ++i) offsets[b * n + i + 1] = b * nnz + a.row_offsets()[i + 1];
        for (std::size_t k = 0; k < nnz; ++k) {
            cols[b * nnz + k] = a.col_indices()[k] + b * m;
            vals[b * nnz + k] = a.values()[k];
        }
    }
    return CsrMatrix(n * copies, m * copies, std::move(offsets), std::move(cols), std::move(vals));
}

// ---------------------------------------------------------------------------
// Symmetric eigensolver

EigenDecomposition sym_eigen(const DenseMatrix& input) {
    const std::size_t n = input.rows();
    if (input.cols() != n) throw InvalidInput("sym_eigen: matrix is not square");
    const double scale = std::max(input.frobenius_norm(), 1e-300);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(input(i, j) - input(j, i)) > 1e-12 * scale)
                throw InvalidInput("sym_eigen: matrix is not symmetric");

    // Work on a symmetrized copy; rows of `vt` accumulate the eigenvectors.
    DenseMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (input(i, j) + input(j, i));
    DenseMatrix vt = DenseMatrix::identity(n);

    auto off_norm2 = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
        return 2.0 * s;
    };

    const double eps = std::numeric_limits<double>::epsilon();
    constexpr int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        const double off = off_norm2();
        if (off <= (eps * scale) * (eps * scale)) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                const double app = a(p, p), aqq = a(q, q);
                if (apq == 0.0) continue;
                if (sweep > 3 && std::abs(app) + 100.0 * std::abs(apq) == std::abs(app) &&
                    std::abs(aqq) + 100.0 * std::abs(apq) == std::abs(aqq)) {
                    a(p, q) = a(q, p) = 0.0;
                    continue;
                }
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                // Rows p and q (contiguous), then mirror into the columns.
                auto rp = a.row(p);
                auto rq = a.row(q);
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = rp[k], akq = rq[k];
                    rp[k] = c * akp - s * akq;
                    rq[k] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    a(k, p) = rp[k];
                    a(k, q) = rq[k];
                }
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = a(q, p) = 0.0;

                auto vp = vt.row(p);
                auto vq = vt.row(q);
                for (std::size_t k = 0; k < n; ++k) {
                    const double x = vp[k], y = vq[k];
                    vp[k] = c * x - s * y;
                    vq[k] = s * x + c * y;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors = DenseMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.eigenvalues[k] = a(order[k], order[k]);
        auto v = vt.row(order[k]);
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, k) = v[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sparse kernels and solvers

void csr_matvec(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
    if (x.size() != a.cols() || y.size() != a.rows()) throw InvalidInput("csr_matvec: dimension mismatch");
    const auto& off = a.row_offsets();
    const auto& ci = a.col_indices();
    const auto& v = a.values();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t k = off[i]; k < off[i + 1]; ++k) s += v[k] * x[ci[k]];
        y[i] = s;
    }
}

Vector csr_matvec(const CsrMatrix& a, std::span<const double> x) {
    Vector y(a.rows());
    csr_matvec(a, x, y);
    return y;
}

Vector dense_lu_solve(const DenseMatrix& a_in, std::span<const double> b) {
    const std::size_t n = a_in.rows();
    if (a_in.cols() != n) throw InvalidInput("dense_lu_solve: matrix is not square");
    if (b.size() != n) throw InvalidInput("dense_lu_solve: rhs dimension mismatch");
    DenseMatrix a = a_in;
    Vector x(b.begin(), b.end());
    const double scale = std::max(a.frobenius_norm(), 1e-300);
    const double eps = std::numeric_limits<double>::epsilon();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
        const double pmag = std::abs(a(piv, k));
        if (pmag <= eps * scale * static_cast<double>(n)) throw SingularMatrix("dense_lu_solve: singular matrix", pmag);
        if (piv != k) {
            std::swap_ranges(a.row(k).begin(), a.row(k).end(), a.row(piv).begin());
            std::swap(x[k], x[piv]);
        }
        const double inv = 1.0 / a(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a(i, k) * inv;
            if (f == 0.0) continue;
            a(i, k) = 0.0;
            auto ri = a.row(i);
            auto rk = a.row(k);
            for (std::size_t j = k + 1; j < n; ++j) ri[j] -= f * rk[j];
            x[i] -= f * x[k];
        }
    }
    for (std::size_t k = n; k-- > 0;) {
        double s = x[k];
        for (std::size_t j = k + 1; j < n; ++j) s -= a(k, j) * x[j];
        x[k] = s / a(k, k);
    }
    return x;
}

KrylovResult krylov_solve(const CsrMatrix& a, std::span<const double> b, double tol, std::size_t max_iter,
                          Preconditioner preconditioner) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw InvalidInput("krylov_solve: matrix is not square");
    if (b.size() != n) throw InvalidInput("krylov_solve: rhs dimension mismatch");
    if (!(tol > 0.0)) throw InvalidInput("krylov_solve: tol must be positive");

    KrylovResult res;
    res.x.assign(n, 0.0);
    const double bnorm = norm2(b);
    if (bnorm == 0.0) return res;

    Vector inv_diag(n, 1.0);
    if (preconditioner == Preconditioner::jacobi) {
        const auto d = a.diagonal();
        for (std::size_t i = 0; i < n; ++i) inv_diag[i] = d[i] != 0.0 ? 1.0 / d[i] : 1.0;
    }
    auto apply_prec = [&](const Vector& in, Vector& out) {
        for (std::size_t i = 0; i < n; ++i) out[i] = inv_diag[i] * in[i];
    };

    Vector r(b.begin(), b.end());
    const Vector r_hat = r;
    Vector p(n, 0.0), v(n, 0.0), s(n), t(n), phat(n), shat(n);
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    double rnorm = bnorm;
    const double target = tol * bnorm;

    for (std::size_t it = 1; it <= max_iter; ++it) {
        const double rho_new = dot(r_hat, r);
        if (rho_new == 0.0) throw NonConvergence("krylov_solve: BiCGStab breakdown (rho = 0)", rnorm);
        if (it == 1) {
            p = r;
        } else {
            const double beta = (rho_new / rho) * (alpha / omega);
            for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        rho = rho_new;
        apply_prec(p, phat);
        csr_matvec(a, phat, v);
        const double rv = dot(r_hat, v);
        if (rv == 0.0) throw NonConvergence("krylov_solve: BiCGStab breakdown (r_hat.v = 0)", rnorm);
        alpha = rho / rv;
        for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        const double snorm = norm2(s);
        if (snorm <= target) {
            axpy(alpha, phat, res.x);
            res.iterations = it;
            res.residual_norm = snorm;
            return res;
        }
        apply_prec(s, shat);
        csr_matvec(a, shat, t);
        const double tt = dot(t, t);
        if (tt == 0.0) throw NonConvergence("krylov_solve: BiCGStab breakdown (t = 0)", snorm);
        omega = dot(t, s) / tt;
        for (std::size_t i = 0; i < n; ++i) {
            res.x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        rnorm = norm2(r);
        if (rnorm <= target) {
            res.iterations = it;
            res.residual_norm = rnorm;
            return res;
        }
        if (omega == 0.0) throw NonConvergence("krylov_solve: BiCGStab breakdown (omega = 0)", rnorm);
    }
    throw NonConvergence("krylov_solve: max_iter exceeded", rnorm);
}

}  // namespace podrom

// SPDX-License-Identifier: Apache-2.0
//
// mimocorr - spatial correlation estimation toolkit for MIMO OFDM channels

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mimocorr {

/// Numeric failure (non-convergence, singular systems). Carries diagnostics in what().
class numeric_error : public std::runtime_error {
  public:
    explicit numeric_error(const std::string &msg) : std::runtime_error(msg) {}
};

/// Dense complex matrix, column-major storage.
///
/// Column-major fixes the orientation of vec() and of every commutation-matrix
/// identity in this library; all modules rely on it.
template <class R>
class basic_cmatrix {
  public:
    using real_type = R;
    using value_type = std::complex<R>;

    basic_cmatrix() = default;

    basic_cmatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), a_(check_dims(rows, cols), value_type(0)) {}

    basic_cmatrix(std::initializer_list<std::initializer_list<value_type>> rows)
    {
        rows_ = rows.size();
        cols_ = rows_ ? rows.begin()->size() : 0;
        check_dims(rows_, cols_);
        a_.assign(rows_ * cols_, value_type(0));
        std::size_t i = 0;
        for (const auto &row : rows) {
            if (row.size() != cols_)
                throw std::invalid_argument("cmatrix: ragged initializer");
            std::size_t j = 0;
            for (const auto &v : row)
                (*this)(i, j++) = v;
            ++i;
        }
    }

    static basic_cmatrix identity(std::size_t n)
    {
        basic_cmatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m(i, i) = value_type(1);
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return a_.size(); }
    bool empty() const { return a_.empty(); }
    bool is_square() const { return rows_ == cols_; }

    value_type &operator()(std::size_t i, std::size_t j) { return a_[i + j * rows_]; }
    const value_type &operator()(std::size_t i, std::size_t j) const { return a_[i + j * rows_]; }

    /// Linear (column-major) element access; index k addresses the same entry as vec(*this)[k].
    value_type &operator[](std::size_t k) { return a_[k]; }
    const value_type &operator[](std::size_t k) const { return a_[k]; }

    value_type *data() { return a_.data(); }
    const value_type *data() const { return a_.data(); }

    basic_cmatrix transpose() const
    {
        basic_cmatrix t(cols_, rows_);
        for (std::size_t j = 0; j < cols_; ++j)
            for (std::size_t i = 0; i < rows_; ++i)
                t(j, i) = (*this)(i, j);
        return t;
    }

    basic_cmatrix conj() const
    {
        basic_cmatrix c = *this;
        for (auto &v : c.a_)
            v = std::conj(v);
        return c;
    }

    basic_cmatrix adjoint() const
    {
        basic_cmatrix t(cols_, rows_);
        for (std::size_t j = 0; j < cols_; ++j)
            for (std::size_t i = 0; i < rows_; ++i)
                t(j, i) = std::conj((*this)(i, j));
        return t;
    }

    basic_cmatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const
    {
        if (r0 + nr > rows_ || c0 + nc > cols_)
            throw std::invalid_argument("cmatrix::block: range out of bounds");
        basic_cmatrix b(nr, nc);
        for (std::size_t j = 0; j < nc; ++j)
            for (std::size_t i = 0; i < nr; ++i)
                b(i, j) = (*this)(r0 + i, c0 + j);
        return b;
    }

    void set_block(std::size_t r0, std::size_t c0, const basic_cmatrix &b)
    {
        if (r0 + b.rows_ > rows_ || c0 + b.cols_ > cols_)
            throw std::invalid_argument("cmatrix::set_block: range out of bounds");
        for (std::size_t j = 0; j < b.cols_; ++j)
            for (std::size_t i = 0; i < b.rows_; ++i)
                (*this)(r0 + i, c0 + j) = b(i, j);
    }

    value_type trace() const
    {
        require_square("trace");
        value_type t(0);
        for (std::size_t i = 0; i < rows_; ++i)
            t += (*this)(i, i);
        return t;
    }

    R frobenius_norm() const
    {
        R s(0);
        for (const auto &v : a_)
            s += std::norm(v);
        return std::sqrt(s);
    }

    R max_abs() const
    {
        R m(0);
        for (const auto &v : a_)
            m = std::max(m, std::abs(v));
        return m;
    }

    bool is_hermitian(R tol) const
    {
        if (!is_square())
            return false;
        for (std::size_t j = 0; j < cols_; ++j)
            for (std::size_t i = 0; i <= j; ++i)
                if (std::abs((*this)(i, j) - std::conj((*this)(j, i))) > tol)
                    return false;
        return true;
    }

    bool is_unitary(R tol) const
    {
        if (!is_square())
            return false;
        const basic_cmatrix g = adjoint() * (*this);
        for (std::size_t j = 0; j < cols_; ++j)
            for (std::size_t i = 0; i < rows_; ++i) {
                const value_type expect = (i == j) ? value_type(1) : value_type(0);
                if (std::abs(g(i, j) - expect) > tol)
                    return false;
            }
        return true;
    }

    basic_cmatrix &operator+=(const basic_cmatrix &o)
    {
        require_same_shape(o, "+=");
        for (std::size_t k = 0; k < a_.size(); ++k)
            a_[k] += o.a_[k];
        return *this;
    }

    basic_cmatrix &operator-=(const basic_cmatrix &o)
    {
        require_same_shape(o, "-=");
        for (std::size_t k = 0; k < a_.size(); ++k)
            a_[k] -= o.a_[k];
        return *this;
    }

    basic_cmatrix &operator*=(value_type s)
    {
        for (auto &v : a_)
            v *= s;
        return *this;
    }

    friend basic_cmatrix operator+(basic_cmatrix a, const basic_cmatrix &b) { return a += b; }
    friend basic_cmatrix operator-(basic_cmatrix a, const basic_cmatrix &b) { return a -= b; }
    friend basic_cmatrix operator*(basic_cmatrix a, value_type s) { return a *= s; }
    friend basic_cmatrix operator*(value_type s, basic_cmatrix a) { return a *= s; }

    friend basic_cmatrix operator*(const basic_cmatrix &a, const basic_cmatrix &b)
    {
        if (a.cols_ != b.rows_)
            throw std::invalid_argument("cmatrix::operator*: inner dimensions mismatch (" +
                                        std::to_string(a.cols_) + " vs " + std::to_string(b.rows_) + ")");
        basic_cmatrix c(a.rows_, b.cols_);
        for (std::size_t j = 0; j < b.cols_; ++j)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const value_type bkj = b(k, j);
                if (bkj == value_type(0))
                    continue;
                const value_type *ak = a.a_.data() + k * a.rows_;
                value_type *cj = c.a_.data() + j * c.rows_;
                for (std::size_t i = 0; i < a.rows_; ++i)
                    cj[i] += ak[i] * bkj;
            }
        return c;
    }

  private:
    static std::size_t check_dims(std::size_t rows, std::size_t cols)
    {
        if (rows == 0 || cols == 0)
            throw std::invalid_argument("cmatrix: dimensions must be >= 1");
        if (cols > std::numeric_limits<std::size_t>::max() / rows)
            throw std::length_error("cmatrix: dimension overflow");
        return rows * cols;
    }

    void require_square(const char *op) const
    {
        if (!is_square())
            throw std::invalid_argument(std::string("cmatrix::") + op + ": matrix not square");
    }

    void require_same_shape(const basic_cmatrix &o, const char *op) const
    {
        if (rows_ != o.rows_ || cols_ != o.cols_)
            throw std::invalid_argument(std::string("cmatrix::") + op + ": shape mismatch");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<value_type> a_;
};

using cmatrix = basic_cmatrix<double>;
using cdouble = std::complex<double>;

/// Kronecker product. Block (i,j) of the result equals a(i,j)*b.
template <class R>
basic_cmatrix<R> kron(const basic_cmatrix<R> &a, const basic_cmatrix<R> &b)
{
    if (a.empty() || b.empty())
        throw std::invalid_argument("kron: empty operand");
    if (a.rows() > std::numeric_limits<std::size_t>::max() / b.rows() ||
        a.cols() > std::numeric_limits<std::size_t>::max() / b.cols())
        throw std::length_error("kron: dimension overflow");
    basic_cmatrix<R> k(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t ja = 0; ja < a.cols(); ++ja)
        for (std::size_t ia = 0; ia < a.rows(); ++ia) {
            const auto w = a(ia, ja);
            if (w == typename basic_cmatrix<R>::value_type(0))
                continue;
            for (std::size_t jb = 0; jb < b.cols(); ++jb)
                for (std::size_t ib = 0; ib < b.rows(); ++ib)
                    k(ia * b.rows() + ib, ja * b.cols() + jb) = w * b(ib, jb);
        }
    return k;
}

/// Column-major stacking of a into a (rows*cols) x 1 matrix.
template <class R>
basic_cmatrix<R> vec(const basic_cmatrix<R> &a)
{
    basic_cmatrix<R> v(a.rows() * a.cols(), 1);
    for (std::size_t k = 0; k < a.size(); ++k)
        v[k] = a[k];
    return v;
}

/// Commutation matrix K_{m,n}: the mn x mn permutation with
/// K_{m,n} * vec(B) = vec(B^T) for every m x n matrix B.
template <class R = double>
basic_cmatrix<R> commutation_matrix(std::size_t m, std::size_t n)
{
    if (m == 0 || n == 0)
        throw std::invalid_argument("commutation_matrix: m, n must be >= 1");
    basic_cmatrix<R> k(m * n, m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            k(j + i * n, i + j * m) = typename basic_cmatrix<R>::value_type(1);
    return k;
}

/// Permutation map of the Kronecker-rearrangement matrix K_otimes for factor
/// dimensions (nrt, p): result[u] = v means K_otimes has its 1 in column u at
/// row v, so (K_otimes * x)[result[u]] = x[u].
///
/// K_otimes = I_nrt (x) K_{nrt,p}^T (x) I_p satisfies
/// vec(Xi (x) A) = K_otimes * (vec(Xi) (x) vec(A)) for Xi nrt x nrt, A p x p.
inline std::vector<std::size_t> k_otimes_perm(std::size_t nrt, std::size_t p)
{
    if (nrt == 0 || p == 0)
        throw std::invalid_argument("k_otimes: dimensions must be >= 1");
    const std::size_t np = nrt * p;
    if (np > 1u << 20)
        throw std::length_error("k_otimes: dimension overflow");
    const std::size_t dim = np * np;
    // middle factor: K_{nrt,p}^T = K_{p,nrt}, i.e. (K_{p,nrt} x)[j + i*nrt] = x[i + j*p]
    // for i in [0,p), j in [0,nrt)
    std::vector<std::size_t> mid(np);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < nrt; ++j)
            mid[i + j * p] = j + i * nrt;
    std::vector<std::size_t> perm(dim);
    for (std::size_t a = 0; a < nrt; ++a)
        for (std::size_t b = 0; b < np; ++b)
            for (std::size_t c = 0; c < p; ++c)
                perm[(a * np + b) * p + c] = (a * np + mid[b]) * p + c;
    return perm;
}

/// Dense form of the K_otimes permutation (0/1 entries).
template <class R = double>
basic_cmatrix<R> k_otimes(std::size_t nrt, std::size_t p)
{
    const auto perm = k_otimes_perm(nrt, p);
    basic_cmatrix<R> k(perm.size(), perm.size());
    for (std::size_t u = 0; u < perm.size(); ++u)
        k(perm[u], u) = typename basic_cmatrix<R>::value_type(1);
    return k;
}

} // namespace mimocorr

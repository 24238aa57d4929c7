// SPDX-License-Identifier: Apache-2.0
//
// mimocorr - spatial correlation estimation toolkit for MIMO OFDM channels

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "mimocorr/matrix.hpp"

namespace mimocorr {

template <class R>
struct eig_result {
    std::vector<R> values;     ///< real eigenvalues, descending
    basic_cmatrix<R> vectors;  ///< unitary, column k pairs with values[k]
};

template <class R>
struct svd_result {
    basic_cmatrix<R> u;  ///< m x m unitary
    std::vector<R> s;    ///< min(m,n) singular values, non-negative, non-increasing
    basic_cmatrix<R> v;  ///< n x n unitary; a = u * diag(s) * v^H
};

namespace detail {

// Orthonormal completion: extends the first `have` orthonormal columns of u to a
// full basis using the best-aligned canonical vectors (deterministic).
template <class R>
void complete_basis(basic_cmatrix<R> &u, std::size_t have)
{
    using C = std::complex<R>;
    const std::size_t m = u.rows();
    for (std::size_t next = have; next < u.cols(); ++next) {
        std::size_t best = 0;
        R best_norm = R(-1);
        basic_cmatrix<R> best_col(m, 1);
        for (std::size_t cand = 0; cand < m; ++cand) {
            basic_cmatrix<R> w(m, 1);
            w(cand, 0) = C(1);
            for (int pass = 0; pass < 2; ++pass)
                for (std::size_t k = 0; k < next; ++k) {
                    C proj(0);
                    for (std::size_t i = 0; i < m; ++i)
                        proj += std::conj(u(i, k)) * w(i, 0);
                    for (std::size_t i = 0; i < m; ++i)
                        w(i, 0) -= proj * u(i, k);
                }
            const R nw = w.frobenius_norm();
            if (nw > best_norm) {
                best_norm = nw;
                best = cand;
                best_col = w;
            }
            if (nw > R(0.7))
                break;  // good enough, keep determinism cheap
        }
        (void)best;
        for (std::size_t i = 0; i < m; ++i)
            u(i, next) = best_col(i, 0) / best_norm;
    }
}

} // namespace detail

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
/// The input is symmetrized internally; eigenvalues are returned descending.
template <class R>
eig_result<R> hermitian_eig(const basic_cmatrix<R> &a, std::size_t max_sweeps = 64)
{
    using C = std::complex<R>;
    if (!a.is_square())
        throw std::invalid_argument("hermitian_eig: matrix not square");
    const std::size_t n = a.rows();
    basic_cmatrix<R> h(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
            h(i, j) = (a(i, j) + std::conj(a(j, i))) / R(2);
    basic_cmatrix<R> v = basic_cmatrix<R>::identity(n);
    const R scale = std::max(h.frobenius_norm(), std::numeric_limits<R>::min());
    const R stop = scale * std::numeric_limits<R>::epsilon();

    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        R off(0);
        for (std::size_t q = 0; q < n; ++q)
            for (std::size_t p = 0; p < q; ++p)
                off += std::norm(h(p, q));
        off = std::sqrt(R(2) * off);
        if (off <= stop) {
            eig_result<R> r;
            r.values.resize(n);
            for (std::size_t i = 0; i < n; ++i)
                r.values[i] = h(i, i).real();
            std::vector<std::size_t> idx(n);
            std::iota(idx.begin(), idx.end(), 0);
            std::stable_sort(idx.begin(), idx.end(),
                             [&](std::size_t x, std::size_t y) { return r.values[x] > r.values[y]; });
            std::vector<R> sorted(n);
            basic_cmatrix<R> vs(n, n);
            for (std::size_t k = 0; k < n; ++k) {
                sorted[k] = r.values[idx[k]];
                for (std::size_t i = 0; i < n; ++i)
                    vs(i, k) = v(i, idx[k]);
            }
            r.values = std::move(sorted);
            r.vectors = std::move(vs);
            return r;
        }
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const C apq = h(p, q);
                const R r_ = std::abs(apq);
                if (r_ <= stop / R(n))
                    continue;
                const C phase = apq / r_;
                const R app = h(p, p).real();
                const R aqq = h(q, q).real();
                const R tau = (aqq - app) / (R(2) * r_);
                const R t = R(1) / (std::abs(tau) + std::sqrt(R(1) + tau * tau)) * (tau >= R(0) ? R(1) : R(-1));
                const R c = R(1) / std::sqrt(R(1) + t * t);
                const R s = t * c;
                // column update: H <- H * Rrot, Rrot = [[e^{i phi} c, e^{i phi} s], [-s, c]]
                for (std::size_t i = 0; i < n; ++i) {
                    const C hp = h(i, p), hq = h(i, q);
                    h(i, p) = phase * c * hp - s * hq;
                    h(i, q) = phase * s * hp + c * hq;
                }
                // row update: H <- Rrot^H * H
                for (std::size_t i = 0; i < n; ++i) {
                    const C hp = h(p, i), hq = h(q, i);
                    h(p, i) = std::conj(phase) * c * hp - s * hq;
                    h(q, i) = std::conj(phase) * s * hp + c * hq;
                }
                h(p, q) = std::conj(h(q, p));  // keep exact Hermitian pairing
                for (std::size_t i = 0; i < n; ++i) {
                    const C vp = v(i, p), vq = v(i, q);
                    v(i, p) = phase * c * vp - s * vq;
                    v(i, q) = phase * s * vp + c * vq;
                }
            }
    }
    throw numeric_error("hermitian_eig: no convergence after " + std::to_string(max_sweeps) +
                        " sweeps (n=" + std::to_string(n) + ")");
}

/// Singular value decomposition by one-sided Jacobi: a = u * diag(s) * v^H with
/// u, v unitary and s non-increasing. Chosen for its high relative accuracy on
/// the severely graded spectra of multipath frequency-correlation matrices.
template <class R>
svd_result<R> svd(const basic_cmatrix<R> &a, std::size_t max_sweeps = 96)
{
    using C = std::complex<R>;
    for (std::size_t k = 0; k < a.size(); ++k)
        if (!std::isfinite(a[k].real()) || !std::isfinite(a[k].imag()))
            throw std::invalid_argument("svd: non-finite entry");
    if (a.rows() < a.cols()) {
        svd_result<R> t = svd(a.adjoint(), max_sweeps);
        return svd_result<R>{std::move(t.v), std::move(t.s), std::move(t.u)};
    }
    const std::size_t m = a.rows(), n = a.cols();
    basic_cmatrix<R> b = a;
    basic_cmatrix<R> v = basic_cmatrix<R>::identity(n);
    const R eps = std::numeric_limits<R>::epsilon();

    bool converged = false;
    std::size_t sweeps_used = 0;
    for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        converged = true;
        ++sweeps_used;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                C g(0);
                R ap(0), aq(0);
                for (std::size_t i = 0; i < m; ++i) {
                    const C xp = b(i, p), xq = b(i, q);
                    g += std::conj(xp) * xq;
                    ap += std::norm(xp);
                    aq += std::norm(xq);
                }
                const R gn = std::abs(g);
                if (ap == R(0) || aq == R(0) || gn <= R(8) * eps * std::sqrt(ap * aq))
                    continue;
                converged = false;
                const C phase = g / gn;
                const R tau = (aq - ap) / (R(2) * gn);
                const R t = R(1) / (std::abs(tau) + std::sqrt(R(1) + tau * tau)) * (tau >= R(0) ? R(1) : R(-1));
                const R cs = R(1) / std::sqrt(R(1) + t * t);
                const R sn = t * cs;
                const C sphc = sn * std::conj(phase);
                const C sph = sn * phase;
                for (std::size_t i = 0; i < m; ++i) {
                    const C xp = b(i, p), xq = b(i, q);
                    b(i, p) = cs * xp - sphc * xq;
                    b(i, q) = sph * xp + cs * xq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const C vp = v(i, p), vq = v(i, q);
                    v(i, p) = cs * vp - sphc * vq;
                    v(i, q) = sph * vp + cs * vq;
                }
            }
    }
    if (!converged)
        throw numeric_error("svd: one-sided Jacobi did not converge after " +
                            std::to_string(sweeps_used) + " sweeps (" + std::to_string(m) + "x" +
                            std::to_string(n) + ")");

    std::vector<R> s(n);
    for (std::size_t j = 0; j < n; ++j) {
        R nn(0);
        for (std::size_t i = 0; i < m; ++i)
            nn += std::norm(b(i, j));
        s[j] = std::sqrt(nn);
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return s[x] > s[y]; });

    svd_result<R> r;
    r.s.resize(n);
    r.u = basic_cmatrix<R>(m, m);
    r.v = basic_cmatrix<R>(n, n);
    const R smax = s.empty() ? R(0) : s[idx[0]];
    const R floor_ = smax * eps * R(m);  // below this the direction is roundoff
    std::size_t have = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = idx[k];
        r.s[k] = s[j];
        for (std::size_t i = 0; i < n; ++i)
            r.v(i, k) = v(i, j);
        if (s[j] > floor_ && s[j] > R(0)) {
            for (std::size_t i = 0; i < m; ++i)
                r.u(i, k) = b(i, j) / s[j];
            ++have;
        }
    }
    detail::complete_basis(r.u, have);
    return r;
}

/// Count of singular values >= rank_tol * s_max.
template <class R>
std::size_t numerical_rank(const std::vector<R> &s, R rank_tol)
{
    if (s.empty() || s[0] <= R(0))
        return 0;
    std::size_t r = 0;
    for (const R x : s)
        if (x >= rank_tol * s[0])
            ++r;
    return r;
}

template <class R>
std::size_t numerical_rank(const basic_cmatrix<R> &a, R rank_tol)
{
    return numerical_rank(svd(a).s, rank_tol);
}

/// Moore-Penrose pseudo-inverse; singular values below rank_tol * s_max are dropped.
template <class R>
basic_cmatrix<R> pinv(const basic_cmatrix<R> &a, R rank_tol = R(1e-10))
{
    using C = std::complex<R>;
    if (!(rank_tol > R(0)))
        throw std::invalid_argument("pinv: rank_tol must be > 0");
    const svd_result<R> d = svd(a);
    const R smax = d.s.empty() ? R(0) : d.s[0];
    basic_cmatrix<R> p(a.cols(), a.rows());
    for (std::size_t k = 0; k < d.s.size(); ++k) {
        if (smax <= R(0) || d.s[k] < rank_tol * smax || d.s[k] <= R(0))
            break;
        const R inv = R(1) / d.s[k];
        for (std::size_t j = 0; j < a.rows(); ++j) {
            const C uc = std::conj(d.u(j, k)) * inv;
            for (std::size_t i = 0; i < a.cols(); ++i)
                p(i, j) += d.v(i, k) * uc;
        }
    }
    return p;
}

/// Hermitian PSD check via eigenvalues: Hermitian within tol and
/// lambda_min >= -tol * max(1, lambda_max).
template <class R>
bool is_psd(const basic_cmatrix<R> &a, R tol)
{
    if (!a.is_hermitian(tol * std::max(R(1), a.max_abs())))
        return false;
    const auto e = hermitian_eig(a);
    const R scale = std::max(R(1), e.values.empty() ? R(0) : std::abs(e.values.front()));
    return e.values.back() >= -tol * scale;
}

/// Hermitian square root: returns S with S * S^H = a (eigenvalue square root;
/// negative eigenvalues within tol are clamped to zero).
template <class R>
basic_cmatrix<R> psd_sqrt(const basic_cmatrix<R> &a, R tol = R(1e-10))
{
    using C = std::complex<R>;
    if (!a.is_square())
        throw std::invalid_argument("psd_sqrt: matrix not square");
    const R scale = std::max(R(1), a.max_abs());
    if (!a.is_hermitian(tol * scale))
        throw std::invalid_argument("psd_sqrt: matrix not Hermitian within tolerance");
    const auto e = hermitian_eig(a);
    const R lmax = e.values.empty() ? R(0) : std::max(R(0), e.values.front());
    const R clamp = tol * std::max(R(1), lmax);
    const std::size_t n = a.rows();
    basic_cmatrix<R> s(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        R lam = e.values[k];
        if (lam < -clamp)
            throw std::invalid_argument("psd_sqrt: eigenvalue " + std::to_string(lam) +
                                        " below -tol, matrix not PSD");
        lam = std::max(lam, R(0));
        const R rt = std::sqrt(lam);
        for (std::size_t j = 0; j < n; ++j) {
            const C wc = std::conj(e.vectors(j, k)) * rt;
            for (std::size_t i = 0; i < n; ++i)
                s(i, j) += e.vectors(i, k) * wc;
        }
    }
    return s;
}

} // namespace mimocorr

// SPDX-License-Identifier: Apache-2.0
//
// mimocorr - spatial correlation estimation toolkit for MIMO OFDM channels

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mimocorr/decomp.hpp"
#include "mimocorr/matrix.hpp"

namespace mimocorr {

/// Sample auto-correlation of the stacked LS estimates (mean of outer products).
struct sample_correlation {
    cmatrix sigma_hat;
    std::size_t n_samples = 0;
};

/// Streaming/mergeable accumulator for the sample auto-correlation. Partial
/// sums combine associatively, so trials can be split across workers and
/// merged in any order (results agree to floating-point reassociation).
class sample_accumulator {
  public:
    explicit sample_accumulator(std::size_t dim) : sum_(dim, dim) {}

    std::size_t dim() const { return sum_.rows(); }
    std::size_t count() const { return count_; }

    /// Adds vec(sample): accumulates the Hermitian outer product (lower triangle).
    void add(const cmatrix &sample)
    {
        if (sample.size() != sum_.rows())
            throw std::invalid_argument("sample_accumulator: sample dimension mismatch");
        const std::size_t d = sum_.rows();
        for (std::size_t j = 0; j < d; ++j) {
            const cdouble xc = std::conj(sample[j]);
            for (std::size_t i = j; i < d; ++i)
                sum_(i, j) += sample[i] * xc;
        }
        ++count_;
    }

    void merge(const sample_accumulator &other)
    {
        if (other.dim() != dim())
            throw std::invalid_argument("sample_accumulator: merge dimension mismatch");
        sum_ += other.sum_;
        count_ += other.count_;
    }

    sample_correlation finalize() const
    {
        if (count_ == 0)
            throw std::invalid_argument("sample_accumulator: no samples");
        const std::size_t d = sum_.rows();
        sample_correlation sc;
        sc.n_samples = count_;
        sc.sigma_hat = cmatrix(d, d);
        const double inv = 1.0 / double(count_);
        for (std::size_t j = 0; j < d; ++j) {
            sc.sigma_hat(j, j) = sum_(j, j).real() * inv;
            for (std::size_t i = j + 1; i < d; ++i) {
                sc.sigma_hat(i, j) = sum_(i, j) * inv;
                sc.sigma_hat(j, i) = std::conj(sc.sigma_hat(i, j));
            }
        }
        return sc;
    }

  private:
    cmatrix sum_;
    std::size_t count_ = 0;
};

/// (1/N_t) sum_n vec(H_n) vec(H_n)^H over the complete LS-estimate matrices.
inline sample_correlation sample_autocorrelation(const std::vector<cmatrix> &samples)
{
    if (samples.empty())
        throw std::invalid_argument("sample_autocorrelation: empty sample list");
    sample_accumulator acc(samples.front().size());
    for (const auto &s : samples)
        acc.add(s);
    return acc.finalize();
}

struct significant_order_result {
    std::size_t l_s = 0;
    std::vector<std::size_t> kept;      ///< indices into the descending eigenvalue list
    std::vector<double> eigenvalues;    ///< descending
};

/// Effective order of frequency selectivity: the number of eigenvalues of A
/// whose effective SNR (omega * lambda / sigma_n^2) clears threshold_db. With
/// sigma_n^2 = 0 this is the numerical rank of A; rank_tol = 1e-13 resolves
/// the smallest genuine eigenvalue of the EVA/ETU frequency correlations.
inline significant_order_result significant_order(const cmatrix &a, double omega, double sigma_n2,
                                                  double threshold_db, double rank_tol = 1e-13)
{
    if (!a.is_hermitian(1e-9 * std::max(1.0, a.max_abs())))
        throw std::invalid_argument("significant_order: A not Hermitian");
    if (!std::isfinite(threshold_db))
        threshold_db = -std::numeric_limits<double>::infinity();
    const auto e = hermitian_eig(a);
    significant_order_result r;
    r.eigenvalues = e.values;
    const double lmax = e.values.empty() ? 0.0 : std::max(0.0, e.values.front());
    for (std::size_t l = 0; l < e.values.size(); ++l) {
        const double lam = e.values[l];
        if (lam <= 0)
            continue;
        bool keep;
        if (sigma_n2 <= 0)
            keep = lam >= rank_tol * lmax;
        else
            keep = 10.0 * std::log10(omega * lam / sigma_n2) >= threshold_db;
        if (keep)
            r.kept.push_back(l);
    }
    r.l_s = r.kept.size();
    return r;
}

struct mle_diagnostics {
    std::vector<double> singular_values;   ///< of A (descending)
    std::vector<double> effective_snrs;    ///< omega * lambda_l / sigma_n^2 for the used branches
    double max_uv_mismatch = 0.0;          ///< ||U^H V - I||_max over used branches
    bool uv_mismatch_flagged = false;      ///< set when A's singular bases differ materially
    bool per_pair_exact = false;
};

struct mle_result {
    cmatrix xi_hat;
    std::size_t l_s = 0;
    mle_diagnostics diag;
};

struct mle_options {
    std::vector<double> weights;          ///< c_l, size L_s; empty = uniform 1/L_s
    bool hermitian_symmetrize = false;    ///< optional (Xi + Xi^H)/2 post-processing
    const std::vector<cmatrix> *a_per_delta = nullptr;  ///< exact mode: A_{k1,k2} per tx offset
    std::size_t n_rx = 0;                 ///< required with a_per_delta (maps k -> (i,j))
};

namespace detail {

struct mle_branches {
    svd_result<double> dec;
    std::vector<cdouble> uv_diag;  // [U^H V]_ll per used branch
};

inline mle_branches make_branches(const cmatrix &a, std::size_t l_s)
{
    mle_branches b;
    b.dec = svd(a);
    b.uv_diag.resize(l_s);
    for (std::size_t l = 0; l < l_s; ++l) {
        cdouble d(0);
        for (std::size_t i = 0; i < a.rows(); ++i)
            d += std::conj(b.dec.u(i, l)) * b.dec.v(i, l);
        b.uv_diag[l] = d;
    }
    return b;
}

} // namespace detail

/// SVD-domain MLE of the spatial correlation matrix from the sample
/// auto-correlation. For each block pair (k1,k2) the P x P submatrix of
/// sigma_hat is rotated by A's singular bases and the first L_s diagonal
/// read-outs are combined with weights c_l:
///
///   xi_hat[k1,k2] = sum_l c_l ([U^H S V]_ll - sigma_n^2 d(k1-k2) [U^H V]_ll) / (omega Lambda_ll)
///
/// The [U^H V]_ll factor reduces to 1 when A is Hermitian PSD (U = V) and
/// keeps the noise subtraction defined otherwise; a material U != V mismatch
/// is flagged in the diagnostics.
inline mle_result mle_spatial(const sample_correlation &sc, const cmatrix &a, double omega,
                              double sigma_n2, std::size_t l_s, const mle_options &opts = {})
{
    if (!a.is_square())
        throw std::invalid_argument("mle_spatial: A must be square");
    const std::size_t p = a.rows();
    const std::size_t dim = sc.sigma_hat.rows();
    if (dim == 0 || dim % p != 0)
        throw std::invalid_argument("mle_spatial: sigma_hat dimension not a multiple of P");
    const std::size_t k_ant = dim / p;
    if (!(omega > 0))
        throw std::invalid_argument("mle_spatial: omega must be > 0");
    if (sigma_n2 < 0)
        throw std::invalid_argument("mle_spatial: sigma_n^2 must be >= 0");
    if (l_s < 1)
        throw std::invalid_argument("mle_spatial: L_s must be >= 1");

    std::vector<double> w = opts.weights;
    if (w.empty())
        w.assign(l_s, 1.0 / double(l_s));
    if (w.size() != l_s)
        throw std::invalid_argument("mle_spatial: weights length must equal L_s");
    double wsum = 0;
    for (const double c : w) {
        if (c < 0)
            throw std::invalid_argument("mle_spatial: weights must be non-negative");
        wsum += c;
    }
    if (std::abs(wsum - 1.0) > 1e-9)
        throw std::invalid_argument("mle_spatial: weights must sum to 1");

    const bool exact = opts.a_per_delta != nullptr;
    if (exact && opts.n_rx == 0)
        throw std::invalid_argument("mle_spatial: exact mode requires n_rx");
    const std::size_t n_rx = exact ? opts.n_rx : 0;
    const std::size_t n_tx = exact ? k_ant / n_rx : 0;
    if (exact && (n_rx * n_tx != k_ant || opts.a_per_delta->size() != 2 * n_tx - 1))
        throw std::invalid_argument("mle_spatial: exact mode dimension mismatch");

    const detail::mle_branches base = detail::make_branches(a, l_s);
    if (numerical_rank(base.dec.s, 1e-13) < l_s)
        throw std::invalid_argument("mle_spatial: L_s=" + std::to_string(l_s) +
                                    " exceeds numerical rank of A (" +
                                    std::to_string(numerical_rank(base.dec.s, 1e-13)) + ")");
    std::vector<detail::mle_branches> per_delta;
    if (exact) {
        per_delta.reserve(opts.a_per_delta->size());
        for (const auto &ad : *opts.a_per_delta)
            per_delta.push_back(detail::make_branches(ad, l_s));
    }

    mle_result res;
    res.l_s = l_s;
    res.diag.singular_values = base.dec.s;
    res.diag.per_pair_exact = exact;
    for (std::size_t l = 0; l < l_s; ++l) {
        res.diag.effective_snrs.push_back(
            sigma_n2 > 0 ? omega * base.dec.s[l] / sigma_n2 : std::numeric_limits<double>::infinity());
        res.diag.max_uv_mismatch =
            std::max(res.diag.max_uv_mismatch, std::abs(base.uv_diag[l] - cdouble(1)));
    }
    res.diag.uv_mismatch_flagged = res.diag.max_uv_mismatch > 1e-8;

    res.xi_hat = cmatrix(k_ant, k_ant);
    for (std::size_t k2 = 0; k2 < k_ant; ++k2)
        for (std::size_t k1 = 0; k1 < k_ant; ++k1) {
            const detail::mle_branches *br = &base;
            if (exact) {
                const long i1 = long(k1 / n_rx), i2 = long(k2 / n_rx);
                br = &per_delta[std::size_t(i1 - i2 + long(n_tx) - 1)];
            }
            cdouble acc(0);
            for (std::size_t l = 0; l < l_s; ++l) {
                cdouble q(0);
                for (std::size_t c = 0; c < p; ++c) {
                    cdouble uy(0);
                    for (std::size_t r = 0; r < p; ++r)
                        uy += std::conj(br->dec.u(r, l)) * sc.sigma_hat(k1 * p + r, k2 * p + c);
                    q += uy * br->dec.v(c, l);
                }
                if (k1 == k2)
                    q -= sigma_n2 * br->uv_diag[l];
                acc += w[l] * q / (omega * br->dec.s[l]);
            }
            res.xi_hat(k1, k2) = acc;
        }
    if (opts.hermitian_symmetrize) {
        cmatrix sym = (res.xi_hat + res.xi_hat.adjoint()) * cdouble(0.5);
        res.xi_hat = std::move(sym);
    }
    return res;
}

/// Frobenius MSE averaged over the (n_T n_R)^2 entries.
inline double avg_mse(const cmatrix &xi_hat, const cmatrix &xi_true)
{
    if (xi_hat.rows() != xi_true.rows() || xi_hat.cols() != xi_true.cols())
        throw std::invalid_argument("avg_mse: dimension mismatch");
    double s = 0;
    for (std::size_t k = 0; k < xi_hat.size(); ++k)
        s += std::norm(xi_hat[k] - xi_true[k]);
    return s / double(xi_hat.size());
}

} // namespace mimocorr

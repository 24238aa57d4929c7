// SPDX-License-Identifier: Apache-2.0
//
// mimocorr - spatial correlation estimation toolkit for MIMO OFDM channels

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mimocorr/bessel.hpp"
#include "mimocorr/channel.hpp"
#include "mimocorr/decomp.hpp"
#include "mimocorr/matrix.hpp"

namespace mimocorr {

/// Covariance model for the generic Fisher-information pipeline.
enum class fisher_cov_model {
    exact,        ///< Sigma' = (Xi_s (x) omega A + sigma_n^2 I) / N_t
    kron_finite,  ///< Sigma' = (omega/N_t) Xi_s (x) (A + sigma_n^2/omega I)
};

struct fisher_options {
    bool pseudo_inverse = false;
    fisher_cov_model cov_model = fisher_cov_model::exact;
    double rank_tol = 1e-10;
    std::size_t max_dim = 32;  ///< guard: the explicit Kronecker blow-up is (dim^2)^2
};

/// Fisher information of the spatial correlation entries,
///   J = (omega^2/N_t) [I (x) vec(A)^T] K^T (Sigma'^-H (x) Sigma'^-T) K [I (x) vec(A)*],
/// with K the Kronecker-rearrangement permutation. Only computed explicitly for
/// small dimensions; large systems use the closed forms below.
inline cmatrix fisher_information(const cmatrix &xi_s, const cmatrix &a, double omega,
                                  double sigma_n2, std::size_t n_t,
                                  const fisher_options &opts = {})
{
    if (!xi_s.is_square() || !a.is_square())
        throw std::invalid_argument("fisher_information: matrices must be square");
    if (!(omega > 0) || sigma_n2 < 0 || n_t < 1)
        throw std::invalid_argument("fisher_information: omega > 0, sigma_n2 >= 0, N_t >= 1 required");
    const std::size_t k_ant = xi_s.rows();
    const std::size_t p = a.rows();
    const std::size_t dim = k_ant * p;
    if (dim > opts.max_dim)
        throw std::invalid_argument("fisher_information: dim " + std::to_string(dim) +
                                    " exceeds the explicit-pipeline limit " +
                                    std::to_string(opts.max_dim) + "; use the closed forms");

    cmatrix sigma_prime(dim, dim);
    if (opts.cov_model == fisher_cov_model::exact) {
        sigma_prime = kron(xi_s, a * cdouble(omega));
        for (std::size_t i = 0; i < dim; ++i)
            sigma_prime(i, i) += sigma_n2;
    } else {
        cmatrix reg = a;
        for (std::size_t i = 0; i < p; ++i)
            reg(i, i) += sigma_n2 / omega;
        sigma_prime = kron(xi_s, reg) * cdouble(omega);
    }
    sigma_prime *= cdouble(1.0 / double(n_t));

    const cmatrix sinv = pinv(sigma_prime, opts.rank_tol);
    if (!opts.pseudo_inverse && numerical_rank(sigma_prime, opts.rank_tol) < dim)
        throw numeric_error("fisher_information: Sigma' is singular; request pseudo-inverse mode");

    const cmatrix w = kron(sinv.adjoint(), sinv.transpose());
    const auto perm = k_otimes_perm(k_ant, p);
    const cmatrix va = vec(a);
    const std::size_t p2 = p * p;
    cmatrix j(k_ant * k_ant, k_ant * k_ant);
    const double scale = omega * omega / double(n_t);
    for (std::size_t u = 0; u < j.rows(); ++u)
        for (std::size_t v = 0; v < j.cols(); ++v) {
            cdouble acc(0);
            for (std::size_t b = 0; b < p2; ++b) {
                const cdouble vb = std::conj(va[b]);
                if (vb == cdouble(0))
                    continue;
                const std::size_t col = perm[v * p2 + b];
                cdouble inner(0);
                for (std::size_t aa = 0; aa < p2; ++aa)
                    inner += va[aa] * w(perm[u * p2 + aa], col);
                acc += inner * vb;
            }
            j(u, v) = acc * scale;
        }
    return j;
}

struct crlb_result {
    cmatrix matrix;
    std::size_t rank = 0;
    bool rank_deficient = false;
};

/// CRLB = J^-1 (pseudo-inverse when J is rank-deficient, flagged).
inline crlb_result crlb(const cmatrix &j, double rank_tol = 1e-10)
{
    if (!j.is_square())
        throw std::invalid_argument("crlb: J must be square");
    crlb_result r;
    r.rank = numerical_rank(j, rank_tol);
    r.rank_deficient = r.rank < j.rows();
    r.matrix = pinv(j, rank_tol);
    return r;
}

/// Asymptotic-SNR closed form: CRLB = (1/(L N_t)) (Xi_s^H (x) Xi_s^T).
inline cmatrix crlb_closed_form(const cmatrix &xi_s, double order, std::size_t n_t)
{
    if (!(order > 0) || n_t < 1)
        throw std::invalid_argument("crlb_closed_form: order > 0 and N_t >= 1 required");
    return kron(xi_s.adjoint(), xi_s.transpose()) * cdouble(1.0 / (order * double(n_t)));
}

/// The quadratic form vec(A)^T (A†^H (x) A†^T) vec(A)*, which equals the number
/// of retained singular values: through the SVD the form collapses to
/// sum_l (sigma_l / sigma_l)^2 over the retained triplets (evaluating the
/// products against the double-precision A instead would lose ~1e-5 at the
/// EVA profile's kappa ~ 1e12).
inline double alpha_of(const cmatrix &a, double rank_tol = 1e-10)
{
    if (!a.is_square())
        throw std::invalid_argument("alpha_of: A must be square");
    const auto d = svd(a);
    const std::size_t kept = numerical_rank(d.s, rank_tol);
    double alpha = 0;
    for (std::size_t l = 0; l < kept; ++l) {
        const double unit = d.s[l] / d.s[l];
        alpha += unit * unit;
    }
    return alpha;
}

/// TMSE lower bound (n_T n_R)^2 / (L_s N_t).
inline double tmse_lb(std::size_t n_tx, std::size_t n_rx, std::size_t l_s, std::size_t n_t)
{
    if (n_tx < 1 || n_rx < 1 || l_s < 1 || n_t < 1)
        throw std::invalid_argument("tmse_lb: all arguments must be >= 1");
    const double k = double(n_tx) * double(n_rx);
    return k * k / (double(l_s) * double(n_t));
}

/// Asymptotic-SNR AvgMSE lower bound 1 / (L_s N_t).
inline double avgmse_lb_asymptotic(std::size_t l_s, std::size_t n_t)
{
    if (l_s < 1 || n_t < 1)
        throw std::invalid_argument("avgmse_lb_asymptotic: L_s >= 1 and N_t >= 1 required");
    return 1.0 / (double(l_s) * double(n_t));
}

/// Finite-SNR effective order: beta = sum_l [1 / (1 + (omega rho_l)^-1)]^2 with
/// rho_l = lambda_l / sigma_n^2 over the nonzero eigenvalues of A.
inline double beta_of(const cmatrix &a, double omega, double sigma_n2)
{
    if (!(sigma_n2 > 0))
        throw std::invalid_argument("beta_of: sigma_n^2 must be > 0 (use alpha_of for the noise-free case)");
    if (!(omega > 0))
        throw std::invalid_argument("beta_of: omega must be > 0");
    if (!a.is_hermitian(1e-9 * std::max(1.0, a.max_abs())))
        throw std::invalid_argument("beta_of: A not Hermitian");
    const auto e = hermitian_eig(a);
    double beta = 0;
    for (const double lam : e.values) {
        if (lam <= 0)
            continue;
        const double eff = omega * lam / sigma_n2;
        const double term = 1.0 / (1.0 + 1.0 / eff);
        beta += term * term;
    }
    return beta;
}

inline double beta_from_eigenvalues(const std::vector<double> &eigenvalues, double eff_gain,
                                    double sigma_n2)
{
    double beta = 0;
    for (const double lam : eigenvalues) {
        if (lam <= 0)
            continue;
        const double eff = eff_gain * lam / sigma_n2;
        const double term = 1.0 / (1.0 + 1.0 / eff);
        beta += term * term;
    }
    return beta;
}

struct beta_max_result {
    double beta_max = 0;
    double normalized_doppler = 0;      ///< theta * f_d * T_s
    bool approx_valid = false;          ///< theta f_d T_s <= 0.35
    double gain_bound = 0;              ///< P^2 J0(2 pi c x), or P * lambda_max fallback
    bool used_exact_lambda_max = false;
};

/// Upper bound on beta with the pilot gain replaced by its Rayleigh-quotient
/// bound P * lambda_max(Omega), lambda_max approximated by P J0(2 pi c x) with
/// c = 0.35 for x = theta f_d T_s <= 0.35. Outside the precondition the result
/// is flagged and uses the supplied exact lambda_max (or the trivial bound P).
inline beta_max_result beta_max_of(std::size_t p, std::size_t theta, double doppler_hz,
                                   double symbol_duration, const std::vector<double> &eigenvalues,
                                   double sigma_n2,
                                   std::optional<double> lambda_max_exact = std::nullopt)
{
    if (p < 1 || theta < 1 || !(symbol_duration > 0) || doppler_hz < 0)
        throw std::invalid_argument("beta_max_of: invalid system parameters");
    if (!(sigma_n2 > 0))
        throw std::invalid_argument("beta_max_of: sigma_n^2 must be > 0");
    constexpr double c = 0.35;
    beta_max_result r;
    r.normalized_doppler = double(theta) * doppler_hz * symbol_duration;
    r.approx_valid = r.normalized_doppler <= 0.35;
    if (r.approx_valid) {
        r.gain_bound = double(p) * double(p) * bessel_j0(2.0 * M_PI * c * r.normalized_doppler);
    } else if (lambda_max_exact.has_value()) {
        r.gain_bound = double(p) * (*lambda_max_exact);
        r.used_exact_lambda_max = true;
    } else {
        r.gain_bound = double(p) * double(p);  // lambda_max <= P
    }
    r.beta_max = beta_from_eigenvalues(eigenvalues, r.gain_bound, sigma_n2);
    return r;
}

/// Finite-SNR AvgMSE lower bound 1 / (beta_max N_t).
inline double avgmse_lb_finite(double beta_max, std::size_t n_t)
{
    if (!(beta_max > 0) || n_t < 1)
        throw std::invalid_argument("avgmse_lb_finite: beta_max > 0 and N_t >= 1 required");
    return 1.0 / (beta_max * double(n_t));
}

/// Scalar summaries of the estimation limits for one operating point.
struct bounds_report {
    std::optional<cmatrix> crlb_matrix;  ///< only for small explicit-pipeline dims
    double tmse_lb = 0;
    double avgmse_lb_asymptotic = 0;
    double avgmse_lb_finite = 0;
    double beta = 0;
    double beta_max = 0;
    double omega = 0;
    std::size_t l_s = 0;
    std::size_t order = 0;               ///< rank of A (noise-free order L)
    std::vector<double> effective_snrs;  ///< omega lambda_l / sigma_n^2, descending
    double normalized_doppler = 0;
    bool lambda_approx_precondition_ok = false;
    bool beta_le_beta_max_guaranteed = false;  ///< omega <= gain bound, so ordering holds termwise
};

/// Assembles the report for one operating point. With sigma_n2 = 0 the
/// finite-SNR quantities degenerate to their asymptotic limits (beta -> L).
inline bounds_report make_bounds_report(const cmatrix &a, double omega, double sigma_n2,
                                        std::size_t n_tx, std::size_t n_rx, std::size_t n_t,
                                        std::size_t p, std::size_t theta, double doppler_hz,
                                        double symbol_duration, double threshold_db = 0.0,
                                        std::optional<double> lambda_max_exact = std::nullopt)
{
    bounds_report rep;
    rep.omega = omega;
    const auto e = hermitian_eig((a + a.adjoint()) * cdouble(0.5));
    const double lmax = e.values.empty() ? 0.0 : std::max(0.0, e.values.front());
    std::vector<double> lam;
    for (const double v : e.values)
        if (v >= 1e-13 * lmax && v > 0)
            lam.push_back(v);
    rep.order = lam.size();

    std::size_t l_s = 0;
    for (const double v : lam) {
        const bool keep = sigma_n2 <= 0
                              ? true
                              : 10.0 * std::log10(omega * v / sigma_n2) >= threshold_db;
        if (keep)
            ++l_s;
        rep.effective_snrs.push_back(sigma_n2 > 0 ? omega * v / sigma_n2
                                                  : std::numeric_limits<double>::infinity());
    }
    rep.l_s = std::max<std::size_t>(l_s, 1);
    rep.tmse_lb = tmse_lb(n_tx, n_rx, rep.l_s, n_t);
    rep.avgmse_lb_asymptotic = avgmse_lb_asymptotic(rep.l_s, n_t);

    if (sigma_n2 > 0) {
        rep.beta = beta_from_eigenvalues(lam, omega, sigma_n2);
        const auto bm = beta_max_of(p, theta, doppler_hz, symbol_duration, lam, sigma_n2,
                                    lambda_max_exact);
        rep.beta_max = bm.beta_max;
        rep.normalized_doppler = bm.normalized_doppler;
        rep.lambda_approx_precondition_ok = bm.approx_valid;
        rep.beta_le_beta_max_guaranteed = bm.approx_valid && omega <= bm.gain_bound;
        rep.avgmse_lb_finite = avgmse_lb_finite(rep.beta_max, n_t);
    } else {
        rep.beta = double(rep.order);
        rep.beta_max = double(rep.order);
        rep.normalized_doppler = double(theta) * doppler_hz * symbol_duration;
        rep.lambda_approx_precondition_ok = rep.normalized_doppler <= 0.35;
        rep.beta_le_beta_max_guaranteed = false;
        rep.avgmse_lb_finite = rep.order ? avgmse_lb_finite(rep.beta, n_t)
                                         : std::numeric_limits<double>::infinity();
    }
    return rep;
}

} // namespace mimocorr

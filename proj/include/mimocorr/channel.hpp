// SPDX-License-Identifier: Apache-2.0
//
// mimocorr - spatial correlation estimation toolkit for MIMO OFDM channels

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "mimocorr/bessel.hpp"
#include "mimocorr/decomp.hpp"
#include "mimocorr/matrix.hpp"
#include "mimocorr/pilots.hpp"
#include "mimocorr/rng.hpp"

namespace mimocorr {

/// Multipath power delay profile. Delays are normalized by the sampling period
/// (may be non-integer); powers are linear and sum to 1.
struct power_delay_profile {
    std::vector<double> delays;
    std::vector<double> powers;

    std::size_t taps() const { return delays.size(); }
};

namespace detail {

inline power_delay_profile normalize_profile(std::vector<double> delays_s,
                                             std::vector<double> powers_db, double sampling_period)
{
    if (delays_s.empty() || delays_s.size() != powers_db.size())
        throw std::invalid_argument("profile: delay/power lists must be non-empty and equal length");
    if (!(sampling_period > 0))
        throw std::invalid_argument("profile: sampling period must be > 0");
    power_delay_profile pr;
    pr.delays.resize(delays_s.size());
    pr.powers.resize(delays_s.size());
    double sum = 0;
    for (std::size_t l = 0; l < delays_s.size(); ++l) {
        pr.delays[l] = delays_s[l] / sampling_period;
        pr.powers[l] = std::pow(10.0, powers_db[l] / 10.0);
        if (!(pr.powers[l] > 0))
            throw std::invalid_argument("profile: non-positive tap power");
        sum += pr.powers[l];
    }
    if (pr.delays[0] < 0)
        throw std::invalid_argument("profile: first delay must be >= 0");
    for (std::size_t l = 1; l < pr.delays.size(); ++l)
        if (!(pr.delays[l] > pr.delays[l - 1]))
            throw std::invalid_argument("profile: delays must be strictly increasing");
    for (auto &p : pr.powers)
        p /= sum;
    return pr;
}

} // namespace detail

/// 3GPP E-UTRA presets (EVA | ETU) or a custom profile via make_profile.
inline power_delay_profile load_profile(const std::string &preset, double sampling_period)
{
    if (preset == "EVA")
        return detail::normalize_profile(
            {0e-9, 30e-9, 150e-9, 310e-9, 370e-9, 710e-9, 1090e-9, 1730e-9, 2510e-9},
            {0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9}, sampling_period);
    if (preset == "ETU")
        return detail::normalize_profile(
            {0e-9, 50e-9, 120e-9, 200e-9, 230e-9, 500e-9, 1600e-9, 2300e-9, 5000e-9},
            {-1.0, -1.0, -1.0, 0.0, 0.0, 0.0, -3.0, -5.0, -7.0}, sampling_period);
    throw std::invalid_argument("load_profile: unknown preset '" + preset + "' (EVA | ETU)");
}

inline power_delay_profile make_profile(const std::vector<double> &delays_s,
                                        const std::vector<double> &powers_db, double sampling_period)
{
    return detail::normalize_profile(delays_s, powers_db, sampling_period);
}

/// OFDM/MIMO system parameters. Noise power and SNR are mutually derivable:
/// with unit channel power and unit-modulus pilots, SNR = 1/sigma_n^2 per tone.
struct system_config {
    std::size_t n_tones = 128;        ///< N
    std::size_t cp_len = 16;          ///< L_cp, samples
    double sampling_period = 800e-9;  ///< T, seconds
    double doppler_hz = 100.0;        ///< f_d
    std::size_t n_tx = 4;
    std::size_t n_rx = 4;
    double noise_power = 0.0;         ///< sigma_n^2, linear
    std::size_t n_samples = 1000;     ///< N_t
    std::size_t symbol_gap = 0;       ///< timeseries mode: symbols between samples; 0 = auto

    double symbol_duration() const { return double(n_tones + cp_len) * sampling_period; }

    void validate() const
    {
        if (n_tones < 1 || n_tx < 1 || n_rx < 1 || n_samples < 1)
            throw std::invalid_argument("system_config: counts must be >= 1");
        if (!(sampling_period > 0))
            throw std::invalid_argument("system_config: T must be > 0");
        if (doppler_hz < 0 || noise_power < 0)
            throw std::invalid_argument("system_config: f_d and sigma_n^2 must be >= 0");
    }
};

inline double snr_db_to_noise_power(double snr_db)
{
    return std::isinf(snr_db) && snr_db > 0 ? 0.0 : std::pow(10.0, -snr_db / 10.0);
}

inline double noise_power_to_snr_db(double noise_power)
{
    return noise_power > 0 ? -10.0 * std::log10(noise_power)
                           : std::numeric_limits<double>::infinity();
}

/// Transmit/receive antenna correlation pair; the complete spatial correlation
/// is their Kronecker product.
struct spatial_correlation {
    cmatrix tx_corr;  ///< n_T x n_T
    cmatrix rx_corr;  ///< n_R x n_R

    cmatrix full() const { return kron(tx_corr, rx_corr); }

    void validate(double tol = 1e-10) const
    {
        for (const cmatrix *m : {&tx_corr, &rx_corr}) {
            if (!m->is_square())
                throw std::invalid_argument("spatial_correlation: matrices must be square");
            if (!m->is_hermitian(tol * std::max(1.0, m->max_abs())))
                throw std::invalid_argument("spatial_correlation: matrix not Hermitian");
            for (std::size_t i = 0; i < m->rows(); ++i)
                if (std::abs((*m)(i, i) - cdouble(1)) > 1e-9)
                    throw std::invalid_argument("spatial_correlation: diagonal must be 1");
            if (!is_psd(*m, tol))
                throw std::invalid_argument("spatial_correlation: matrix not PSD");
        }
    }

    /// The 4x4 measurement-based pair used by the reference experiments.
    static spatial_correlation paper_4x4()
    {
        spatial_correlation s;
        s.tx_corr = cmatrix{
            {{1, 0}, {-0.13, -0.62}, {-0.49, 0.23}, {0.15, 0.28}},
            {{-0.13, 0.62}, {1, 0}, {-0.13, -0.52}, {-0.38, 0.12}},
            {{-0.49, -0.23}, {-0.13, 0.52}, {1, 0}, {0.02, -0.61}},
            {{0.15, -0.28}, {-0.38, -0.12}, {0.02, 0.61}, {1, 0}}};
        s.rx_corr = cmatrix{
            {{1, 0}, {-0.45, 0.53}, {0.37, -0.22}, {0.19, 0.21}},
            {{-0.45, -0.53}, {1, 0}, {-0.35, -0.02}, {0.02, -0.27}},
            {{0.37, 0.22}, {-0.35, 0.02}, {1, 0}, {-0.10, 0.54}},
            {{0.19, -0.21}, {0.02, 0.27}, {-0.10, -0.54}, {1, 0}}};
        return s;
    }

    /// Scalar (1x1) antennas on both sides; handy for statistical tests.
    static spatial_correlation scalar()
    {
        spatial_correlation s;
        s.tx_corr = cmatrix{{{1, 0}}};
        s.rx_corr = cmatrix{{{1, 0}}};
        return s;
    }
};

/// Rows of the delay-domain Fourier matrix restricted to the given tones:
/// entry (r, l) = exp(-j 2 pi tone[r] tau_l / N). Delays may be non-integer.
inline cmatrix fourier_delay_matrix(std::size_t n_tones, const power_delay_profile &profile,
                                    const std::vector<std::size_t> &tone_indices)
{
    if (tone_indices.empty())
        throw std::invalid_argument("fourier_delay_matrix: empty tone list");
    for (const auto t : tone_indices)
        if (t >= n_tones)
            throw std::invalid_argument("fourier_delay_matrix: tone index " + std::to_string(t) +
                                        " out of range [0," + std::to_string(n_tones) + ")");
    cmatrix f(tone_indices.size(), profile.taps());
    for (std::size_t l = 0; l < profile.taps(); ++l)
        for (std::size_t r = 0; r < tone_indices.size(); ++r) {
            const double ang = -2.0 * M_PI * double(tone_indices[r]) * profile.delays[l] / double(n_tones);
            f(r, l) = {std::cos(ang), std::sin(ang)};
        }
    return f;
}

/// Frequency auto-correlation on the pilot tones: R_p = F D F^H where D holds
/// the tap powers. Hermitian PSD, unit diagonal, rank min(L, P).
inline cmatrix freq_corr(const power_delay_profile &profile, std::size_t n_tones,
                         const std::vector<std::size_t> &pilot_tones)
{
    const cmatrix f = fourier_delay_matrix(n_tones, profile, pilot_tones);
    const std::size_t p = pilot_tones.size();
    cmatrix r(p, p);
    for (std::size_t l = 0; l < profile.taps(); ++l) {
        const double w = profile.powers[l];
        for (std::size_t j = 0; j < p; ++j) {
            const cdouble fj = std::conj(f(j, l)) * w;
            for (std::size_t i = 0; i < p; ++i)
                r(i, j) += f(i, l) * fj;
        }
    }
    return r;
}

/// Frequency cross-correlation between tone sets offset by delta_i tones:
/// F Phi^{delta} D F^H with [Phi]_ll = exp(-j 2 pi tau_l / N). delta_i = 0
/// reduces to freq_corr; nonzero values quantify the comb-offset approximation.
inline cmatrix freq_corr_cross(const power_delay_profile &profile, std::size_t n_tones,
                               const std::vector<std::size_t> &pilot_tones, long delta_i)
{
    const cmatrix f = fourier_delay_matrix(n_tones, profile, pilot_tones);
    const std::size_t p = pilot_tones.size();
    cmatrix r(p, p);
    for (std::size_t l = 0; l < profile.taps(); ++l) {
        const double ang = -2.0 * M_PI * double(delta_i) * profile.delays[l] / double(n_tones);
        const cdouble tw = {std::cos(ang), std::sin(ang)};
        const double w = profile.powers[l];
        for (std::size_t j = 0; j < p; ++j) {
            const cdouble fj = std::conj(f(j, l)) * w;
            for (std::size_t i = 0; i < p; ++i)
                r(i, j) += f(i, l) * tw * fj;
        }
    }
    return r;
}

/// Time correlation across the P pilot sampling instants, spaced theta *
/// t_spacing apart: a real symmetric Toeplitz matrix with entries
/// J0(2 pi f_d (k1 - k2) theta t_spacing).
inline cmatrix doppler_corr(std::size_t p, std::size_t theta, double doppler_hz, double t_spacing)
{
    if (p < 1 || theta < 1)
        throw std::invalid_argument("doppler_corr: P and theta must be >= 1");
    if (!(doppler_hz >= 0) || !(t_spacing > 0))
        throw std::invalid_argument("doppler_corr: f_d >= 0 and spacing > 0 required");
    std::vector<double> lag(p);
    for (std::size_t k = 0; k < p; ++k)
        lag[k] = bessel_j0(2.0 * M_PI * doppler_hz * double(k) * double(theta) * t_spacing);
    cmatrix om(p, p);
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t i = 0; i < p; ++i)
            om(i, j) = lag[i >= j ? i - j : j - i];
    return om;
}

/// Covariance of the stacked complete LS estimate: block (k1,k2) of size P
/// equals [Xi_s]_{k1,k2} * (omega A) + sigma_n^2 delta(k1-k2) I_P, i.e.
/// Xi_s (x) (omega A) + sigma_n^2 I.
inline cmatrix build_sigma(const system_config &cfg, const spatial_correlation &spatial,
                           const cmatrix &a, double omega)
{
    if (!a.is_square())
        throw std::invalid_argument("build_sigma: A must be square");
    if (!(omega > 0))
        throw std::invalid_argument("build_sigma: omega must be > 0");
    if (spatial.tx_corr.rows() != cfg.n_tx || spatial.rx_corr.rows() != cfg.n_rx)
        throw std::invalid_argument("build_sigma: spatial dimensions do not match system config");
    if (!a.is_hermitian(1e-9 * std::max(1.0, a.max_abs())))
        throw std::invalid_argument("build_sigma: A not Hermitian");
    cmatrix sigma = kron(spatial.full(), a * cdouble(omega));
    for (std::size_t i = 0; i < sigma.rows(); ++i)
        sigma(i, i) += cfg.noise_power;
    return sigma;
}

enum class channel_mode { iid, timeseries };

inline channel_mode channel_mode_from_string(const std::string &s)
{
    if (s == "iid")
        return channel_mode::iid;
    if (s == "timeseries")
        return channel_mode::timeseries;
    throw std::invalid_argument("unknown channel mode '" + s + "' (iid | timeseries)");
}

/// Smallest symbol spacing at which the Jakes autocorrelation has decayed
/// below 0.05, used as the timeseries-mode default between retained symbols.
inline std::size_t default_symbol_gap(double doppler_hz, double symbol_duration)
{
    if (doppler_hz <= 0)
        return 1;
    for (std::size_t g = 1; g <= 1000000; ++g)
        if (std::abs(bessel_j0(2.0 * M_PI * doppler_hz * double(g) * symbol_duration)) < 0.05)
            return g;
    return 1000000;
}

namespace detail {

// One tap's Jakes sum-of-sinusoids process: 32 sinusoids, random arrival
// angles and phases, unit power. Evaluation at arbitrary instants.
struct sos_process {
    static constexpr std::size_t n_sinusoids = 32;
    std::array<double, n_sinusoids> omega_m;  // 2 pi f_d cos(angle)
    std::array<double, n_sinusoids> phi_m;

    void init(gauss_rng &rng, double doppler_hz)
    {
        for (std::size_t m = 0; m < n_sinusoids; ++m) {
            omega_m[m] = 2.0 * M_PI * doppler_hz * std::cos(2.0 * M_PI * rng.uniform01());
            phi_m[m] = 2.0 * M_PI * rng.uniform01();
        }
    }

    cdouble at(double t) const
    {
        double re = 0, im = 0;
        for (std::size_t m = 0; m < n_sinusoids; ++m) {
            const double a = omega_m[m] * t + phi_m[m];
            re += std::cos(a);
            im += std::sin(a);
        }
        const double scale = 1.0 / std::sqrt(double(n_sinusoids));
        return {re * scale, im * scale};
    }
};

} // namespace detail

/// Generates N_t complete LS-estimate matrices (each P n_R x n_T).
///
/// iid mode draws each stacked sample from CN(0, Sigma) with Sigma as in
/// build_sigma, using the Kronecker structure of the colouring transform;
/// these are exactly the statistics under which the sample auto-correlation
/// is complex Wishart. timeseries mode synthesizes physically time-correlated
/// taps (Jakes sum of sinusoids at the pilot sampling instants), colours them
/// across antenna pairs, and forms the LS observations with AWGN.
/// Deterministic for a fixed seed; sample n only depends on (seed, n).
inline std::vector<cmatrix> sample_channel_matrices(const system_config &cfg,
                                                    const spatial_correlation &spatial,
                                                    const pilot_pattern &pattern,
                                                    const power_delay_profile &profile,
                                                    channel_mode mode, std::uint64_t seed)
{
    cfg.validate();
    if (pattern.n_tx != cfg.n_tx)
        throw std::invalid_argument("sample_channel_matrices: pattern/config antenna mismatch");
    if (pattern.x_p.size() != pattern.p)
        throw std::invalid_argument("sample_channel_matrices: pattern has no pilot sequence");
    if (spatial.tx_corr.rows() != cfg.n_tx || spatial.rx_corr.rows() != cfg.n_rx)
        throw std::invalid_argument("sample_channel_matrices: spatial dimension mismatch");
    if (profile.taps() > pattern.p)
        throw std::invalid_argument("sample_channel_matrices: P >= L violated");

    const std::size_t p = pattern.p;
    const std::size_t k_ant = cfg.n_tx * cfg.n_rx;
    const std::size_t n_t = cfg.n_samples;
    const double sn = std::sqrt(cfg.noise_power);
    std::vector<cmatrix> out;
    out.reserve(n_t);

    if (mode == channel_mode::iid) {
        const cmatrix r_p = freq_corr(profile, cfg.n_tones, pattern.tones(0));
        const cmatrix om = doppler_corr(p, pattern.theta, cfg.doppler_hz, cfg.sampling_period);
        cdouble omega_c(0);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j)
                omega_c += std::conj(pattern.x_p[i]) * om(i, j) * pattern.x_p[j];
        const double omega = omega_c.real();
        const cmatrix a = pilot_weighted(r_p, pattern.x_p);
        const cmatrix s_a = psd_sqrt(a * cdouble(std::max(omega, 0.0)), 1e-9);
        const cmatrix s_xi_t = psd_sqrt(kron(spatial.tx_corr, spatial.rx_corr), 1e-9).transpose();

        cmatrix g(p, k_ant);
        for (std::size_t n = 0; n < n_t; ++n) {
            gauss_rng rng(mix_seed({seed, 0x73616D70ULL, n}));
            for (std::size_t k = 0; k < g.size(); ++k)
                g[k] = rng.cnormal();
            cmatrix y = s_a * g * s_xi_t;  // vec(y) ~ CN(0, Xi_s (x) omega A)
            cmatrix h(p * cfg.n_rx, cfg.n_tx);
            for (std::size_t k = 0; k < h.size(); ++k)
                h[k] = y[k] + (sn > 0 ? sn * rng.cnormal() : cdouble(0));
            out.push_back(std::move(h));
        }
        return out;
    }

    // timeseries mode
    const std::size_t gap = cfg.symbol_gap ? cfg.symbol_gap
                                           : default_symbol_gap(cfg.doppler_hz, cfg.symbol_duration());
    const std::size_t taps = profile.taps();
    std::vector<detail::sos_process> procs(taps * k_ant);
    {
        gauss_rng prng(mix_seed({seed, 0x6A616B65ULL}));
        for (auto &pr : procs)
            pr.init(prng, cfg.doppler_hz);
    }
    const cmatrix s_xi = psd_sqrt(kron(spatial.tx_corr, spatial.rx_corr), 1e-9);
    const cmatrix f0 = fourier_delay_matrix(cfg.n_tones, profile, pattern.tones(0));
    std::vector<double> amp(taps);
    for (std::size_t l = 0; l < taps; ++l)
        amp[l] = std::sqrt(profile.powers[l]);

    for (std::size_t n = 0; n < n_t; ++n) {
        gauss_rng rng(mix_seed({seed, 0x6E6F6973ULL, n}));
        const double t0 = double(n) * double(gap) * cfg.symbol_duration();
        // raw tap gains g[l](k) per antenna-pair process, then colour across pairs
        std::vector<cmatrix> h_t(k_ant, cmatrix(taps, p));  // per pair: L x P CIR track
        std::vector<cdouble> raw(k_ant);
        for (std::size_t l = 0; l < taps; ++l)
            for (std::size_t k = 0; k < p; ++k) {
                const double t = t0 + double(k) * double(pattern.theta) * cfg.sampling_period;
                for (std::size_t a2 = 0; a2 < k_ant; ++a2)
                    raw[a2] = procs[l * k_ant + a2].at(t);
                for (std::size_t a1 = 0; a1 < k_ant; ++a1) {
                    cdouble mixed(0);
                    for (std::size_t a2 = 0; a2 < k_ant; ++a2)
                        mixed += s_xi(a1, a2) * raw[a2];
                    h_t[a1](l, k) = amp[l] * mixed;
                }
            }
        std::vector<std::vector<std::vector<cdouble>>> blocks(
            cfg.n_rx, std::vector<std::vector<cdouble>>(cfg.n_tx));
        for (std::size_t i = 0; i < cfg.n_tx; ++i)
            for (std::size_t j = 0; j < cfg.n_rx; ++j) {
                const cmatrix h_p = f0 * h_t[i * cfg.n_rx + j];  // P x P transfer track
                std::vector<cdouble> y(p);
                for (std::size_t r = 0; r < p; ++r) {
                    cdouble acc(0);
                    for (std::size_t c = 0; c < p; ++c)
                        acc += h_p(r, c) * pattern.x_p[c];
                    y[r] = acc + (sn > 0 ? sn * rng.cnormal() : cdouble(0));
                }
                blocks[j][i] = ls_estimate(y, pattern.x_p);
            }
        out.push_back(assemble_complete(blocks));
    }
    return out;
}

} // namespace mimocorr

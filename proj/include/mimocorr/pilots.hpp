// SPDX-License-Identifier: Apache-2.0
//
// mimocorr - spatial correlation estimation toolkit for MIMO OFDM channels

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mimocorr/decomp.hpp"
#include "mimocorr/matrix.hpp"
#include "mimocorr/rng.hpp"

namespace mimocorr {

/// Frequency-division (comb) pilot pattern: antenna i transmits on tones
/// {i + k*theta, k = 0..p-1}, null elsewhere, so the per-antenna pilot vectors
/// are orthogonal by construction.
struct pilot_pattern {
    std::size_t theta = 0;   ///< tone spacing
    std::size_t p = 0;       ///< pilots per antenna
    std::size_t n_tx = 0;
    std::size_t n_tones = 0;
    std::vector<std::vector<std::size_t>> tone_sets;  ///< per antenna, ascending
    std::vector<cdouble> x_p;  ///< pilot sequence, |x_p|^2 summing to p

    const std::vector<std::size_t> &tones(std::size_t antenna) const { return tone_sets.at(antenna); }
};

inline pilot_pattern make_pattern(std::size_t n_tx, std::size_t theta, std::size_t p, std::size_t n_tones)
{
    if (p < 1)
        throw std::invalid_argument("make_pattern: P >= 1 violated (P=" + std::to_string(p) + ")");
    if (theta < n_tx)
        throw std::invalid_argument("make_pattern: theta >= n_T violated (theta=" + std::to_string(theta) +
                                    " < n_T=" + std::to_string(n_tx) + ")");
    if (p * theta > n_tones)
        throw std::invalid_argument("make_pattern: P*theta <= N violated (P*theta=" +
                                    std::to_string(p * theta) + " > N=" + std::to_string(n_tones) + ")");
    pilot_pattern pat;
    pat.theta = theta;
    pat.p = p;
    pat.n_tx = n_tx;
    pat.n_tones = n_tones;
    pat.tone_sets.resize(n_tx);
    for (std::size_t i = 0; i < n_tx; ++i) {
        pat.tone_sets[i].resize(p);
        for (std::size_t k = 0; k < p; ++k)
            pat.tone_sets[i][k] = i + k * theta;
    }
    return pat;
}

enum class pilot_kind { qpsk_random, omega_eigvec };

inline pilot_kind pilot_kind_from_string(const std::string &s)
{
    if (s == "qpsk_random")
        return pilot_kind::qpsk_random;
    if (s == "omega_eigvec")
        return pilot_kind::omega_eigvec;
    throw std::invalid_argument("unknown pilot kind '" + s + "' (qpsk_random | omega_eigvec)");
}

/// Pilot sequence generator. qpsk_random draws unit-modulus QPSK symbols;
/// omega_eigvec returns the dominant eigenvector of the supplied Doppler
/// correlation matrix scaled to norm sqrt(P) (phase-normalized so the largest
/// component is real positive, which makes the result deterministic).
/// Either way ||x_p||^2 = P.
inline std::vector<cdouble> gen_pilot_sequence(pilot_kind kind, std::size_t p,
                                               const cmatrix *omega_matrix, std::uint64_t seed)
{
    std::vector<cdouble> x(p);
    if (kind == pilot_kind::qpsk_random) {
        gauss_rng rng(mix_seed({seed, 0x70696C6FULL}));
        const double h = 1.0 / std::sqrt(2.0);
        for (auto &v : x) {
            const std::uint64_t bits = rng.raw();
            v = {bits & 1 ? h : -h, bits & 2 ? h : -h};
        }
        return x;
    }
    if (omega_matrix == nullptr)
        throw std::invalid_argument("gen_pilot_sequence: omega_eigvec requires the Doppler correlation matrix");
    if (!omega_matrix->is_square() || omega_matrix->rows() != p)
        throw std::invalid_argument("gen_pilot_sequence: omega matrix must be P x P");
    const auto e = hermitian_eig(*omega_matrix);
    std::size_t imax = 0;
    double amax = 0;
    for (std::size_t i = 0; i < p; ++i) {
        const double av = std::abs(e.vectors(i, 0));
        if (av > amax) {
            amax = av;
            imax = i;
        }
    }
    const cdouble rot = amax > 0 ? std::conj(e.vectors(imax, 0)) / amax : cdouble(1);
    const double scale = std::sqrt(double(p));
    for (std::size_t i = 0; i < p; ++i)
        x[i] = e.vectors(i, 0) * rot * scale;
    return x;
}

/// Per-tone LS estimate: elementwise division by the known pilot symbols.
inline std::vector<cdouble> ls_estimate(const std::vector<cdouble> &y_pilot,
                                        const std::vector<cdouble> &x_p)
{
    if (y_pilot.size() != x_p.size())
        throw std::invalid_argument("ls_estimate: length mismatch");
    std::vector<cdouble> h(y_pilot.size());
    for (std::size_t k = 0; k < x_p.size(); ++k) {
        if (x_p[k] == cdouble(0))
            throw std::invalid_argument("ls_estimate: zero pilot entry at tone index " + std::to_string(k));
        h[k] = y_pilot[k] / x_p[k];
    }
    return h;
}

/// Stacks the per-antenna-pair LS estimates into the complete P*n_R x n_T
/// matrix: column i holds blocks (j=0..n_R-1), each of length P. blocks[j][i]
/// is the estimate between transmit antenna i and receive antenna j.
inline cmatrix assemble_complete(const std::vector<std::vector<std::vector<cdouble>>> &blocks)
{
    if (blocks.empty())
        throw std::invalid_argument("assemble_complete: empty grid");
    const std::size_t n_rx = blocks.size();
    const std::size_t n_tx = blocks[0].size();
    if (n_tx == 0)
        throw std::invalid_argument("assemble_complete: empty grid row");
    std::size_t p = 0;
    for (std::size_t j = 0; j < n_rx; ++j) {
        if (blocks[j].size() != n_tx)
            throw std::invalid_argument("assemble_complete: ragged grid");
        for (std::size_t i = 0; i < n_tx; ++i) {
            if (blocks[j][i].empty())
                throw std::invalid_argument("assemble_complete: missing block (" + std::to_string(j) +
                                            "," + std::to_string(i) + ")");
            if (p == 0)
                p = blocks[j][i].size();
            else if (blocks[j][i].size() != p)
                throw std::invalid_argument("assemble_complete: block length mismatch");
        }
    }
    cmatrix h(p * n_rx, n_tx);
    for (std::size_t i = 0; i < n_tx; ++i)
        for (std::size_t j = 0; j < n_rx; ++j)
            for (std::size_t r = 0; r < p; ++r)
                h(j * p + r, i) = blocks[j][i][r];
    return h;
}

/// diag(x_p)^H * m * diag(x_p); with R_p this yields the effective frequency
/// correlation seen through the pilot sequence.
inline cmatrix pilot_weighted(const cmatrix &m, const std::vector<cdouble> &x_p)
{
    if (!m.is_square() || m.rows() != x_p.size())
        throw std::invalid_argument("pilot_weighted: dimension mismatch");
    cmatrix a(m.rows(), m.cols());
    for (std::size_t j = 0; j < m.cols(); ++j)
        for (std::size_t i = 0; i < m.rows(); ++i)
            a(i, j) = std::conj(x_p[i]) * m(i, j) * x_p[j];
    return a;
}

} // namespace mimocorr

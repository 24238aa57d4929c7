// SPDX-License-Identifier: Apache-2.0
//
// mimocorr - spatial correlation estimation toolkit for MIMO OFDM channels

#pragma once

#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mimocorr/bounds.hpp"
#include "mimocorr/channel.hpp"
#include "mimocorr/estimator.hpp"
#include "mimocorr/pilots.hpp"
#include "mimocorr/toml_lite.hpp"

namespace mimocorr {

/// Config validation failure (CLI exit code 2).
class config_error : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

struct profile_spec {
    std::string preset = "EVA";  ///< EVA | ETU | custom
    std::vector<double> delays_s;
    std::vector<double> powers_db;

    power_delay_profile resolve(double sampling_period) const
    {
        if (preset == "custom")
            return make_profile(delays_s, powers_db, sampling_period);
        return load_profile(preset, sampling_period);
    }
};

struct spatial_spec {
    std::string preset = "paper-4x4";  ///< paper-4x4 | scalar | custom
    std::optional<cmatrix> tx_corr;
    std::optional<cmatrix> rx_corr;

    spatial_correlation resolve() const
    {
        if (preset == "paper-4x4")
            return spatial_correlation::paper_4x4();
        if (preset == "scalar")
            return spatial_correlation::scalar();
        if (preset == "custom") {
            if (!tx_corr || !rx_corr)
                throw config_error("spatial: custom preset requires xi_t and xi_r matrices");
            return spatial_correlation{*tx_corr, *rx_corr};
        }
        throw config_error("spatial: unknown preset '" + preset + "'");
    }
};

struct pilot_spec {
    std::size_t theta = 8;
    std::size_t p = 16;
    std::optional<pilot_kind> kind;  ///< unset -> runner default
    std::uint64_t seed = 1;
};

struct sweep_spec {
    std::vector<std::size_t> n_t = {100, 300, 1000, 3000};
    std::vector<double> snr_db = {0.0, 10.0, 20.0};
    std::vector<double> f_d = {40.0, 80.0, 120.0};
    std::vector<std::size_t> l_s = {};  ///< orders for the asymptotic run; 0 = rank(A)
};

struct experiment_config {
    system_config system;
    profile_spec profile;
    spatial_spec spatial;
    pilot_spec pilot;
    sweep_spec sweep;
    channel_mode mode = channel_mode::iid;
    std::size_t trials = 20;
    std::string output_dir = "out";
    std::uint64_t master_seed = 1;
    std::size_t workers = 1;
    bool full_scale = false;
    double threshold_db = 0.0;  ///< effective-SNR cutoff for the significant order

    void validate() const
    {
        system.validate();
        if (trials < 1)
            throw config_error("trials must be >= 1");
        if (workers < 1)
            throw config_error("workers must be >= 1");
        if (sweep.n_t.empty() || sweep.snr_db.empty() || sweep.f_d.empty())
            throw config_error("sweep lists must be non-empty");
        for (const auto n : sweep.n_t)
            if (n < 1)
                throw config_error("sweep.n_t entries must be >= 1");
        const power_delay_profile pr = profile.resolve(system.sampling_period);
        if (pilot.p < pr.taps())
            throw config_error("pilot: P >= L violated (P=" + std::to_string(pilot.p) +
                               ", L=" + std::to_string(pr.taps()) + ")");
        make_pattern(system.n_tx, pilot.theta, pilot.p, system.n_tones);  // checks theta/N bounds
        const spatial_correlation sp = spatial.resolve();
        sp.validate();
        if (sp.tx_corr.rows() != system.n_tx || sp.rx_corr.rows() != system.n_rx)
            throw config_error("spatial matrices do not match the antenna counts");
    }
};

/// One grid point of an experiment run.
struct result_row {
    std::size_t n_t = 0;
    double snr_db = 0;
    double f_d = 0;
    std::size_t l_s = 0;
    std::size_t trials = 0;
    double avgmse_mean = 0;
    double avgmse_stderr = 0;
    double avgmse_lb_asymptotic = 0;
    double avgmse_lb_finite = 0;
    double beta = 0;
    double beta_max = 0;
    double omega = 0;
};

namespace detail {

inline std::string fmt17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void run_units(std::size_t n_units, std::size_t workers,
                      const std::function<void(std::size_t)> &fn)
{
    if (workers <= 1 || n_units <= 1) {
        for (std::size_t u = 0; u < n_units; ++u)
            fn(u);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto worker = [&] {
        for (;;) {
            const std::size_t u = next.fetch_add(1);
            if (u >= n_units)
                return;
            try {
                fn(u);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err)
                    err = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back(worker);
    for (auto &t : pool)
        t.join();
    if (err)
        std::rethrow_exception(err);
}

inline double mean_of(const std::vector<double> &v)
{
    double s = 0;
    for (const double x : v)
        s += x;
    return s / double(v.size());
}

inline double stderr_of(const std::vector<double> &v, double mean)
{
    if (v.size() < 2)
        return 0.0;
    double s = 0;
    for (const double x : v)
        s += (x - mean) * (x - mean);
    return std::sqrt(s / double(v.size() - 1) / double(v.size()));
}

} // namespace detail

/// Asymptotic-SNR reproduction run: noise-free iid samples, MLE at each tested
/// order L_s, measured AvgMSE against the 1/(L_s N_t) bound. Deterministic in
/// (config, master_seed) regardless of worker count.
inline std::vector<result_row> run_fig1(const experiment_config &cfg_in)
{
    experiment_config cfg = cfg_in;
    cfg.system.noise_power = 0.0;  // this runner is the SNR -> infinity experiment
    cfg.validate();

    const power_delay_profile profile = cfg.profile.resolve(cfg.system.sampling_period);
    const spatial_correlation spatial = cfg.spatial.resolve();
    const cmatrix xi_true = spatial.full();
    pilot_pattern pattern = make_pattern(cfg.system.n_tx, cfg.pilot.theta, cfg.pilot.p, cfg.system.n_tones);
    const cmatrix om = doppler_corr(cfg.pilot.p, cfg.pilot.theta, cfg.system.doppler_hz,
                                    cfg.system.sampling_period);
    const pilot_kind kind = cfg.pilot.kind.value_or(pilot_kind::qpsk_random);
    pattern.x_p = gen_pilot_sequence(kind, cfg.pilot.p, &om, cfg.pilot.seed);

    const cmatrix r_p = freq_corr(profile, cfg.system.n_tones, pattern.tones(0));
    const cmatrix a = pilot_weighted(r_p, pattern.x_p);
    cdouble omega_c(0);
    for (std::size_t i = 0; i < cfg.pilot.p; ++i)
        for (std::size_t j = 0; j < cfg.pilot.p; ++j)
            omega_c += std::conj(pattern.x_p[i]) * om(i, j) * pattern.x_p[j];
    const double omega = omega_c.real();

    const std::size_t rank = significant_order(a, omega, 0.0, 0.0).l_s;
    std::vector<std::size_t> orders = cfg.sweep.l_s;
    if (orders.empty())
        orders = {1, 4, 0};
    for (auto &o : orders) {
        if (o == 0)
            o = rank;
        if (o > rank)
            throw config_error("fig1: requested L_s " + std::to_string(o) + " exceeds rank(A) = " +
                               std::to_string(rank));
    }

    std::vector<std::size_t> n_t_list = cfg.sweep.n_t;
    if (cfg.full_scale)
        n_t_list = {100, 300, 1000, 3000, 10000};

    // unit = (n_t index, trial); each unit yields one AvgMSE per tested order
    const std::size_t n_units = n_t_list.size() * cfg.trials;
    std::vector<std::vector<double>> mse(n_units, std::vector<double>(orders.size(), 0.0));
    detail::run_units(n_units, cfg.workers, [&](std::size_t u) {
        const std::size_t gi = u / cfg.trials;
        const std::size_t trial = u % cfg.trials;
        system_config sys = cfg.system;
        sys.n_samples = n_t_list[gi];
        const std::uint64_t seed = mix_seed({cfg.master_seed, 0x66696731ULL, gi, trial});
        const auto samples = sample_channel_matrices(sys, spatial, pattern, profile, cfg.mode, seed);
        const sample_correlation sc = sample_autocorrelation(samples);
        for (std::size_t oi = 0; oi < orders.size(); ++oi) {
            const mle_result est = mle_spatial(sc, a, omega, 0.0, orders[oi]);
            mse[u][oi] = avg_mse(est.xi_hat, xi_true);
        }
    });

    std::vector<result_row> rows;
    for (std::size_t gi = 0; gi < n_t_list.size(); ++gi)
        for (std::size_t oi = 0; oi < orders.size(); ++oi) {
            std::vector<double> per_trial(cfg.trials);
            for (std::size_t t = 0; t < cfg.trials; ++t)
                per_trial[t] = mse[gi * cfg.trials + t][oi];
            result_row r;
            r.n_t = n_t_list[gi];
            r.snr_db = std::numeric_limits<double>::infinity();
            r.f_d = cfg.system.doppler_hz;
            r.l_s = orders[oi];
            r.trials = cfg.trials;
            r.avgmse_mean = detail::mean_of(per_trial);
            r.avgmse_stderr = detail::stderr_of(per_trial, r.avgmse_mean);
            r.avgmse_lb_asymptotic = avgmse_lb_asymptotic(orders[oi], r.n_t);
            r.avgmse_lb_finite = r.avgmse_lb_asymptotic * double(orders[oi]) / double(rank);
            r.beta = double(rank);
            r.beta_max = double(rank);
            r.omega = omega;
            rows.push_back(r);
        }
    return rows;
}

/// Finite-SNR run over the (snr, f_d, N_t) grid with dominant-eigenvector
/// pilots; measured AvgMSE against the 1/(beta_max N_t) bound.
inline std::vector<result_row> run_fig2(const experiment_config &cfg_in)
{
    experiment_config cfg = cfg_in;
    cfg.validate();
    const pilot_kind kind = cfg.pilot.kind.value_or(pilot_kind::omega_eigvec);
    if (kind != pilot_kind::omega_eigvec)
        throw config_error("fig2: pilot kind must be omega_eigvec");
    for (const double s : cfg.sweep.snr_db)
        if (std::isinf(s))
            throw config_error("fig2: snr_db grid must be finite (sigma_n^2 > 0)");

    const power_delay_profile profile = cfg.profile.resolve(cfg.system.sampling_period);
    const spatial_correlation spatial = cfg.spatial.resolve();
    const cmatrix xi_true = spatial.full();

    struct point_ctx {
        double snr_db, f_d, sigma2, omega;
        pilot_pattern pattern;
        cmatrix a;
        std::size_t l_s;
        bounds_report rep;
    };
    std::vector<point_ctx> pts;
    for (const double f_d : cfg.sweep.f_d)
        for (const double snr : cfg.sweep.snr_db) {
            point_ctx pc;
            pc.snr_db = snr;
            pc.f_d = f_d;
            pc.sigma2 = snr_db_to_noise_power(snr);
            pc.pattern = make_pattern(cfg.system.n_tx, cfg.pilot.theta, cfg.pilot.p, cfg.system.n_tones);
            const cmatrix om = doppler_corr(cfg.pilot.p, cfg.pilot.theta, f_d, cfg.system.sampling_period);
            pc.pattern.x_p = gen_pilot_sequence(kind, cfg.pilot.p, &om, cfg.pilot.seed);
            const cmatrix r_p = freq_corr(profile, cfg.system.n_tones, pc.pattern.tones(0));
            pc.a = pilot_weighted(r_p, pc.pattern.x_p);
            cdouble oc(0);
            for (std::size_t i = 0; i < cfg.pilot.p; ++i)
                for (std::size_t j = 0; j < cfg.pilot.p; ++j)
                    oc += std::conj(pc.pattern.x_p[i]) * om(i, j) * pc.pattern.x_p[j];
            pc.omega = oc.real();
            pc.l_s = significant_order(pc.a, pc.omega, pc.sigma2, cfg.threshold_db).l_s;
            if (pc.l_s < 1)
                pc.l_s = 1;  // keep at least the dominant branch
            pc.rep = make_bounds_report(pc.a, pc.omega, pc.sigma2, cfg.system.n_tx, cfg.system.n_rx,
                                        1 /*per-sample scale; N_t applied per row*/, cfg.pilot.p,
                                        cfg.pilot.theta, f_d, cfg.system.symbol_duration(),
                                        cfg.threshold_db);
            pts.push_back(std::move(pc));
        }

    const std::size_t n_grid = pts.size() * cfg.sweep.n_t.size();
    const std::size_t n_units = n_grid * cfg.trials;
    std::vector<double> mse(n_units, 0.0);
    detail::run_units(n_units, cfg.workers, [&](std::size_t u) {
        const std::size_t g = u / cfg.trials;
        const std::size_t trial = u % cfg.trials;
        const std::size_t pi = g / cfg.sweep.n_t.size();
        const std::size_t ni = g % cfg.sweep.n_t.size();
        const point_ctx &pc = pts[pi];
        system_config sys = cfg.system;
        sys.doppler_hz = pc.f_d;
        sys.noise_power = pc.sigma2;
        sys.n_samples = cfg.sweep.n_t[ni];
        const std::uint64_t seed = mix_seed({cfg.master_seed, 0x66696732ULL, pi, ni, trial});
        const auto samples = sample_channel_matrices(sys, spatial, pc.pattern, profile, cfg.mode, seed);
        const sample_correlation sc = sample_autocorrelation(samples);
        const mle_result est = mle_spatial(sc, pc.a, pc.omega, pc.sigma2, pc.l_s);
        mse[u] = avg_mse(est.xi_hat, xi_true);
    });

    std::vector<result_row> rows;
    for (std::size_t pi = 0; pi < pts.size(); ++pi)
        for (std::size_t ni = 0; ni < cfg.sweep.n_t.size(); ++ni) {
            const std::size_t g = pi * cfg.sweep.n_t.size() + ni;
            std::vector<double> per_trial(cfg.trials);
            for (std::size_t t = 0; t < cfg.trials; ++t)
                per_trial[t] = mse[g * cfg.trials + t];
            const point_ctx &pc = pts[pi];
            result_row r;
            r.n_t = cfg.sweep.n_t[ni];
            r.snr_db = pc.snr_db;
            r.f_d = pc.f_d;
            r.l_s = pc.l_s;
            r.trials = cfg.trials;
            r.avgmse_mean = detail::mean_of(per_trial);
            r.avgmse_stderr = detail::stderr_of(per_trial, r.avgmse_mean);
            r.avgmse_lb_asymptotic = avgmse_lb_asymptotic(pc.l_s, r.n_t);
            r.avgmse_lb_finite = avgmse_lb_finite(pc.rep.beta_max, r.n_t);
            r.beta = pc.rep.beta;
            r.beta_max = pc.rep.beta_max;
            r.omega = pc.omega;
            rows.push_back(r);
        }
    return rows;
}

/// One CRLB cross-validation case: the generic Fisher pipeline against the
/// closed forms, on explicit-pipeline-sized systems.
struct crlb_validation_case {
    std::size_t n_tx, n_rx, p;
    std::vector<double> delays;     ///< normalized (already divided by T)
    std::vector<double> powers_db;
    double sigma_n2;                ///< 0 = asymptotic (pseudo-inverse path)
};

struct crlb_validation_row {
    crlb_validation_case config;
    double order;                   ///< alpha_of(A)
    double beta;                    ///< beta (finite) or alpha (asymptotic)
    double max_rel_dev_closed;      ///< generic CRLB vs closed form
    double alpha_minus_rank;        ///< alpha identity residual
};

inline std::vector<crlb_validation_case> default_crlb_cases()
{
    return {
        {1, 1, 1, {0.0}, {0.0}, 0.0},
        {2, 2, 2, {0.0, 1.3}, {0.0, -3.0}, 0.0},
        {2, 1, 3, {0.0, 1.3}, {0.0, -3.0}, 0.0},
        {2, 2, 2, {0.0, 1.3}, {0.0, -3.0}, 0.5},
        {2, 1, 3, {0.0, 0.7}, {-1.0, -4.0}, 0.25},
    };
}

inline std::vector<crlb_validation_row> run_crlb_validation(
    const std::vector<crlb_validation_case> &cases = default_crlb_cases(), std::size_t n_t = 50)
{
    std::vector<crlb_validation_row> rows;
    for (const auto &cs : cases) {
        const std::size_t k_ant = cs.n_tx * cs.n_rx;
        if (k_ant * cs.p > 32)
            throw config_error("crlb validation: n_T n_R P must be <= 32");
        // deterministic small correlation pair from the paper-4x4 leading blocks
        const spatial_correlation big = spatial_correlation::paper_4x4();
        spatial_correlation sp;
        sp.tx_corr = big.tx_corr.block(0, 0, cs.n_tx, cs.n_tx);
        sp.rx_corr = big.rx_corr.block(0, 0, cs.n_rx, cs.n_rx);
        const cmatrix xi = sp.full();

        std::vector<double> delays_s(cs.delays);
        const double t_unit = 1.0;  // delays given normalized; use T = 1
        power_delay_profile pr = make_profile(delays_s, cs.powers_db, t_unit);
        std::vector<std::size_t> tones(cs.p);
        for (std::size_t k = 0; k < cs.p; ++k)
            tones[k] = 2 * k;
        const cmatrix r_p = freq_corr(pr, 16, tones);
        gauss_rng prng(mix_seed({0xC1B2ULL, std::uint64_t(cs.n_tx), std::uint64_t(cs.p)}));
        std::vector<cdouble> x_p(cs.p);
        for (auto &x : x_p) {
            const double ang = 2.0 * M_PI * prng.uniform01();
            x = {std::cos(ang), std::sin(ang)};
        }
        const cmatrix a = pilot_weighted(r_p, x_p);
        const double omega = 2.0;

        crlb_validation_row row;
        row.config = cs;
        row.order = alpha_of(a, 1e-10);
        const double rank = double(numerical_rank(a, 1e-10));
        row.alpha_minus_rank = row.order - rank;

        fisher_options fo;
        cmatrix closed(1, 1);
        if (cs.sigma_n2 <= 0) {
            fo.pseudo_inverse = true;
            const cmatrix j = fisher_information(xi, a, omega, 0.0, n_t, fo);
            const crlb_result cr = crlb(j);
            closed = crlb_closed_form(xi, rank, n_t);
            row.beta = rank;
            double num = 0, den = 0;
            for (std::size_t k = 0; k < closed.size(); ++k) {
                num += std::norm(cr.matrix[k] - closed[k]);
                den += std::norm(closed[k]);
            }
            row.max_rel_dev_closed = std::sqrt(num / den);
        } else {
            fo.cov_model = fisher_cov_model::kron_finite;
            const cmatrix j = fisher_information(xi, a, omega, cs.sigma_n2, n_t, fo);
            const crlb_result cr = crlb(j);
            const double beta = beta_of(a, omega, cs.sigma_n2);
            row.beta = beta;
            closed = crlb_closed_form(xi, beta, n_t);
            double num = 0, den = 0;
            for (std::size_t k = 0; k < closed.size(); ++k) {
                num += std::norm(cr.matrix[k] - closed[k]);
                den += std::norm(closed[k]);
            }
            row.max_rel_dev_closed = std::sqrt(num / den);
        }
        rows.push_back(row);
    }
    return rows;
}

enum class emit_format { csv, json };

inline emit_format emit_format_from_string(const std::string &s)
{
    if (s == "csv")
        return emit_format::csv;
    if (s == "json")
        return emit_format::json;
    throw config_error("unknown output format '" + s + "' (csv | json)");
}

inline const std::vector<std::string> &result_columns()
{
    static const std::vector<std::string> cols = {
        "n_t",          "snr_db",       "f_d_hz",
        "l_s",          "trials",       "avgmse_mean",
        "avgmse_stderr", "avgmse_lb_asymptotic", "avgmse_lb_finite",
        "beta",         "beta_max",     "omega"};
    return cols;
}

inline std::vector<double> result_values(const result_row &r)
{
    return {double(r.n_t), r.snr_db,        r.f_d,
            double(r.l_s), double(r.trials), r.avgmse_mean,
            r.avgmse_stderr, r.avgmse_lb_asymptotic, r.avgmse_lb_finite,
            r.beta,        r.beta_max,      r.omega};
}

/// Serializes a result table. CSV: fixed column order, header row, floats at
/// 17 significant digits, LF line endings (byte-stable across runs/workers).
inline std::string emit_to_string(const std::vector<result_row> &rows, emit_format format)
{
    std::ostringstream os;
    if (format == emit_format::csv) {
        const auto &cols = result_columns();
        for (std::size_t c = 0; c < cols.size(); ++c)
            os << (c ? "," : "") << cols[c];
        os << "\n";
        for (const auto &r : rows) {
            const auto vals = result_values(r);
            for (std::size_t c = 0; c < vals.size(); ++c)
                os << (c ? "," : "") << detail::fmt17(vals[c]);
            os << "\n";
        }
        return os.str();
    }
    os << "[";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto vals = result_values(rows[i]);
        os << (i ? ",\n " : "\n ") << "{";
        const auto &cols = result_columns();
        for (std::size_t c = 0; c < cols.size(); ++c) {
            os << (c ? "," : "") << "\"" << cols[c] << "\":";
            if (std::isinf(vals[c]))
                os << (vals[c] > 0 ? "\"inf\"" : "\"-inf\"");
            else if (std::isnan(vals[c]))
                os << "\"nan\"";
            else
                os << detail::fmt17(vals[c]);
        }
        os << "}";
    }
    os << (rows.empty() ? "]" : "\n]") << "\n";
    return os.str();
}

inline void emit(const std::vector<result_row> &rows, emit_format format, const std::string &path)
{
    const std::string payload = emit_to_string(rows, format);
    const std::filesystem::path fp(path);
    if (fp.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(fp.parent_path(), ec);
    }
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("emit: cannot open '" + path + "' for writing");
    os << payload;
    if (!os)
        throw std::runtime_error("emit: write failed for '" + path + "'");
}

/// Reads back an emitted CSV (used by round-trip checks and external tooling).
inline std::vector<result_row> read_csv(const std::string &path)
{
    std::ifstream is(path);
    if (!is)
        throw std::runtime_error("read_csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(is, line))
        throw std::runtime_error("read_csv: empty file '" + path + "'");
    std::vector<result_row> rows;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        std::vector<double> vals;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ','))
            vals.push_back(std::strtod(tok.c_str(), nullptr));
        if (vals.size() != result_columns().size())
            throw std::runtime_error("read_csv: malformed row in '" + path + "'");
        result_row r;
        r.n_t = std::size_t(vals[0]);
        r.snr_db = vals[1];
        r.f_d = vals[2];
        r.l_s = std::size_t(vals[3]);
        r.trials = std::size_t(vals[4]);
        r.avgmse_mean = vals[5];
        r.avgmse_stderr = vals[6];
        r.avgmse_lb_asymptotic = vals[7];
        r.avgmse_lb_finite = vals[8];
        r.beta = vals[9];
        r.beta_max = vals[10];
        r.omega = vals[11];
        rows.push_back(r);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// TOML config loading

namespace detail {

inline const toml::value *find(const toml::table &t, const std::string &key)
{
    const auto it = t.find(key);
    return it == t.end() ? nullptr : &it->second;
}

inline cmatrix parse_complex_matrix(const toml::value &v, const std::string &what)
{
    if (!v.is_array())
        throw config_error(what + ": expected an array of rows");
    const auto &rows = v.as_array();
    if (rows.empty())
        throw config_error(what + ": empty matrix");
    const std::size_t n = rows.size();
    cmatrix m(n, rows[0].as_array().size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto &row = rows[i].as_array();
        if (row.size() != m.cols())
            throw config_error(what + ": ragged matrix");
        for (std::size_t j = 0; j < row.size(); ++j) {
            const auto &cell = row[j].as_array();
            if (cell.size() != 2)
                throw config_error(what + ": entries must be [re, im] pairs");
            m(i, j) = {cell[0].as_float(), cell[1].as_float()};
        }
    }
    return m;
}

template <class T>
std::vector<T> parse_number_list(const toml::value &v, const std::string &what)
{
    if (!v.is_array())
        throw config_error(what + ": expected an array");
    std::vector<T> out;
    for (const auto &x : v.as_array()) {
        if constexpr (std::is_same_v<T, std::size_t>)
            out.push_back(std::size_t(x.as_int()));
        else
            out.push_back(T(x.as_float()));
    }
    return out;
}

} // namespace detail

/// Builds an experiment_config from a parsed TOML document; unset keys keep
/// the §-defaults of the reference system (1.25 MHz, N=128, CP 16, 4x4, P=16,
/// theta=8).
inline experiment_config config_from_toml(const toml::document &doc)
{
    using detail::find;
    experiment_config cfg;
    try {
        if (const auto *root = &doc.at("")) {
            if (const auto *v = find(*root, "master_seed"))
                cfg.master_seed = std::uint64_t(v->as_int());
            if (const auto *v = find(*root, "trials"))
                cfg.trials = std::size_t(v->as_int());
            if (const auto *v = find(*root, "mode"))
                cfg.mode = channel_mode_from_string(v->as_string());
            if (const auto *v = find(*root, "output_dir"))
                cfg.output_dir = v->as_string();
            if (const auto *v = find(*root, "workers"))
                cfg.workers = std::size_t(v->as_int());
            if (const auto *v = find(*root, "full_scale"))
                cfg.full_scale = v->as_bool();
            if (const auto *v = find(*root, "threshold_db"))
                cfg.threshold_db = v->as_float();
        }
        if (doc.count("system")) {
            const auto &t = doc.at("system");
            if (const auto *v = find(t, "bw_hz"))
                cfg.system.sampling_period = 1.0 / v->as_float();
            if (const auto *v = find(t, "t_s"))
                cfg.system.sampling_period = v->as_float();
            if (const auto *v = find(t, "n_tones"))
                cfg.system.n_tones = std::size_t(v->as_int());
            if (const auto *v = find(t, "l_cp"))
                cfg.system.cp_len = std::size_t(v->as_int());
            if (const auto *v = find(t, "n_tx"))
                cfg.system.n_tx = std::size_t(v->as_int());
            if (const auto *v = find(t, "n_rx"))
                cfg.system.n_rx = std::size_t(v->as_int());
            if (const auto *v = find(t, "f_d_hz"))
                cfg.system.doppler_hz = v->as_float();
            if (const auto *v = find(t, "sigma_n2"))
                cfg.system.noise_power = v->as_float();
            if (const auto *v = find(t, "snr_db"))
                cfg.system.noise_power = snr_db_to_noise_power(v->as_float());
            if (const auto *v = find(t, "n_samples"))
                cfg.system.n_samples = std::size_t(v->as_int());
            if (const auto *v = find(t, "symbol_gap"))
                cfg.system.symbol_gap = std::size_t(v->as_int());
        }
        if (doc.count("profile")) {
            const auto &t = doc.at("profile");
            if (const auto *v = find(t, "preset"))
                cfg.profile.preset = v->as_string();
            if (const auto *v = find(t, "delays_ns")) {
                cfg.profile.preset = "custom";
                for (const double d : detail::parse_number_list<double>(*v, "profile.delays_ns"))
                    cfg.profile.delays_s.push_back(d * 1e-9);
            }
            if (const auto *v = find(t, "powers_db"))
                cfg.profile.powers_db = detail::parse_number_list<double>(*v, "profile.powers_db");
        }
        if (doc.count("spatial")) {
            const auto &t = doc.at("spatial");
            if (const auto *v = find(t, "preset"))
                cfg.spatial.preset = v->as_string();
            if (const auto *v = find(t, "xi_t")) {
                cfg.spatial.preset = "custom";
                cfg.spatial.tx_corr = detail::parse_complex_matrix(*v, "spatial.xi_t");
            }
            if (const auto *v = find(t, "xi_r"))
                cfg.spatial.rx_corr = detail::parse_complex_matrix(*v, "spatial.xi_r");
        }
        if (doc.count("pilot")) {
            const auto &t = doc.at("pilot");
            if (const auto *v = find(t, "theta"))
                cfg.pilot.theta = std::size_t(v->as_int());
            if (const auto *v = find(t, "p"))
                cfg.pilot.p = std::size_t(v->as_int());
            if (const auto *v = find(t, "kind"))
                cfg.pilot.kind = pilot_kind_from_string(v->as_string());
            if (const auto *v = find(t, "seed"))
                cfg.pilot.seed = std::uint64_t(v->as_int());
        }
        if (doc.count("sweep")) {
            const auto &t = doc.at("sweep");
            if (const auto *v = find(t, "n_t"))
                cfg.sweep.n_t = detail::parse_number_list<std::size_t>(*v, "sweep.n_t");
            if (const auto *v = find(t, "snr_db"))
                cfg.sweep.snr_db = detail::parse_number_list<double>(*v, "sweep.snr_db");
            if (const auto *v = find(t, "f_d_hz"))
                cfg.sweep.f_d = detail::parse_number_list<double>(*v, "sweep.f_d_hz");
            if (const auto *v = find(t, "l_s"))
                cfg.sweep.l_s = detail::parse_number_list<std::size_t>(*v, "sweep.l_s");
        }
    } catch (const config_error &) {
        throw;
    } catch (const std::exception &e) {
        throw config_error(std::string("config: ") + e.what());
    }
    return cfg;
}

inline experiment_config load_config(const std::string &path)
{
    std::ifstream is(path);
    if (!is)
        throw config_error("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return config_from_toml(toml::parse(ss.str()));
}

} // namespace mimocorr

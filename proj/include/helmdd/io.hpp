#ifndef HELMDD_IO_HPP
#define HELMDD_IO_HPP

#include <charconv>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>

#include <json.hpp>

#include "helmdd/fd2d.hpp"
#include "helmdd/modal.hpp"

namespace helmdd {

/// Shortest decimal representation that round-trips the IEEE-754 value.
inline std::string fmt(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string fmt(Complex v) { return fmt(v.real()) + "," + fmt(v.imag()); }

namespace detail {
inline double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }
}

/// Sweep of one operator: radius moduli on both model problems per s.
inline void write_sweep_rho_csv(std::ostream& os, const SymbolSpec& spec,
                                const PhysicalSetup& setup,
                                const std::vector<double>& s_grid) {
    os << "s,re_lambda,im_lambda,abs_rho_close,abs_rho_open,regime\n";
    for (double s : s_grid) {
        Complex lam(detail::nan_value(), detail::nan_value());
        double rc = detail::nan_value(), ro = detail::nan_value();
        try { lam = lambda_symbol(spec, s, setup); } catch (const Error&) {}
        try { rc = std::abs(rho_close(spec, s, setup)); } catch (const Error&) {}
        try { ro = std::abs(rho_open(spec, s, setup)); } catch (const Error&) {}
        os << fmt(s) << ',' << fmt(lam.real()) << ',' << fmt(lam.imag()) << ','
           << fmt(rc) << ',' << fmt(ro) << ',' << to_string(regime_of(s, setup.k)) << '\n';
    }
}

/// Both transparent symbols over the grid, one block per requested wavenumber.
inline void write_sweep_lambda_csv(std::ostream& os,
                                   const std::vector<PhysicalSetup>& setups,
                                   int n_points, double s_max_over_k) {
    os << "k,s,re_lambda_open,im_lambda_open,re_lambda_close,im_lambda_close,regime\n";
    for (const auto& setup : setups) {
        const auto grid = make_sweep_grid(setup, s_max_over_k * setup.k, n_points);
        for (double s : grid) {
            const Complex lo = lambda_opt_open(s, setup.k);
            double lc = detail::nan_value(), lc_im = 0.0;
            try { lc = lambda_opt_close(s, setup); } catch (const PoleError&) {
                lc_im = detail::nan_value();
            }
            os << fmt(setup.k) << ',' << fmt(s) << ',' << fmt(lo.real()) << ','
               << fmt(lo.imag()) << ',' << fmt(lc) << ',' << fmt(lc_im) << ','
               << to_string(regime_of(s, setup.k)) << '\n';
        }
    }
}

inline void write_gmres_trace_csv(std::ostream& os, const GmresTrace& trace) {
    os << "iteration,relative_residual\n";
    for (std::size_t i = 0; i < trace.residuals.size(); ++i)
        os << i << ',' << fmt(trace.residuals[i]) << '\n';
}

inline void write_spectrum_csv(std::ostream& os, const SpectrumReport& rep) {
    os << "re_mu,im_mu,dist_unit_circle\n";
    for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i)
        os << fmt(rep.eigenvalues[i].real()) << ',' << fmt(rep.eigenvalues[i].imag())
           << ',' << fmt(rep.unit_circle_distances[i]) << '\n';
}

inline void write_field_csv(std::ostream& os, const FieldSolution& f) {
    os << "x,y,re_p,im_p\n";
    for (std::size_t i = 0; i < f.x.size(); ++i)
        for (std::size_t q = 0; q < f.y.size(); ++q)
            os << fmt(f.x[i]) << ',' << fmt(f.y[q]) << ','
               << fmt(f.values(static_cast<int>(i), static_cast<int>(q)).real()) << ','
               << fmt(f.values(static_cast<int>(i), static_cast<int>(q)).imag()) << '\n';
}

inline void write_modal_verify_csv(std::ostream& os, const SymbolSpec& spec,
                                   const PhysicalSetup& setup, int n_modes, int n_pairs) {
    os << "m,s,abs_rho_analytic,abs_rho_empirical,abs_error\n";
    for (int m = 1; m <= n_modes; ++m) {
        const FourierMode mode = make_mode(m, setup);
        double ana = detail::nan_value(), emp = detail::nan_value();
        try { ana = std::abs(rho_close(spec, mode.s, setup)); } catch (const Error&) {}
        try { emp = empirical_radius(spec, mode, setup, n_pairs); } catch (const Error&) {}
        os << m << ',' << fmt(mode.s) << ',' << fmt(ana) << ',' << fmt(emp) << ','
           << fmt(std::abs(ana - emp)) << '\n';
    }
}

/// Iteration history of per-mode traces as flat {m, s, iter, interface, re, im} records.
inline nlohmann::json modal_history_json(const std::vector<ModalState>& states) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& st : states)
        for (std::size_t n = 0; n < st.history.size(); ++n) {
            const auto& [p0, p1] = st.history[n];
            records.push_back({{"m", st.mode.m}, {"s", st.mode.s}, {"iter", n},
                               {"interface", 0}, {"re", p0.real()}, {"im", p0.imag()}});
            records.push_back({{"m", st.mode.m}, {"s", st.mode.s}, {"iter", n},
                               {"interface", 1}, {"re", p1.real()}, {"im", p1.imag()}});
        }
    return records;
}

/// Spectrum as flat {m, s, re, im} records; m is -1 for dense spectra with
/// no per-mode bookkeeping.
inline nlohmann::json spectrum_json(const SpectrumReport& rep,
                                    const std::vector<FourierMode>& modes = {}) {
    nlohmann::json records = nlohmann::json::array();
    for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i) {
        int m = -1;
        double s = detail::nan_value();
        if (i < rep.mode_index.size() && rep.mode_index[i] >= 0 &&
            rep.mode_index[i] < static_cast<int>(modes.size())) {
            m = modes[rep.mode_index[i]].m;
            s = modes[rep.mode_index[i]].s;
        }
        nlohmann::json rec = {{"m", m}, {"re", rep.eigenvalues[i].real()},
                              {"im", rep.eigenvalues[i].imag()}};
        rec["s"] = std::isnan(s) ? nlohmann::json() : nlohmann::json(s);
        records.push_back(rec);
    }
    return records;
}

/// ExperimentConfig plus the bits the CLI needs to finish the setup.
struct LoadedConfig {
    ExperimentConfig experiment;
    bool oo2_needs_fit = false;  // operator is oo2 and a, b were not given
    int n_modes = 50;            // modal commands: number of transverse modes
};

inline SymbolKind parse_symbol_kind(const std::string& name) {
    if (name == "oo0") return SymbolKind::oo0;
    if (name == "emda") return SymbolKind::emda;
    if (name == "oo2") return SymbolKind::oo2;
    if (name == "pade") return SymbolKind::pade;
    if (name == "opt-close") return SymbolKind::opt_close;
    if (name == "opt-open") return SymbolKind::opt_open;
    throw ConfigError("unknown operator name: " + name);
}

inline LoadedConfig config_from_json(const nlohmann::json& j) {
    LoadedConfig out;
    ExperimentConfig& cfg = out.experiment;

    const double ell_over_lambda = j.value("ell_over_lambda", 9.5);
    cfg.setup = PhysicalSetup::from_aspect(ell_over_lambda);

    const std::string scen = j.value("scenario", std::string("cavity"));
    if (scen == "cavity") cfg.scenario = Scenario::cavity;
    else if (scen == "waveguide") cfg.scenario = Scenario::waveguide;
    else throw ConfigError("unknown scenario: " + scen);

    SymbolSpec spec;
    spec.kind = parse_symbol_kind(j.value("operator", std::string("pade")));
    switch (spec.kind) {
        case SymbolKind::emda:
            spec.epsilon = j.value("epsilon", 0.25);
            break;
        case SymbolKind::pade:
            spec.epsilon = j.value("epsilon", 0.0);
            spec.n_terms = j.value("n_pade", 4);
            spec.xi = j.value("xi", pi / 4.0);
            break;
        case SymbolKind::oo2:
            if (j.contains("a_re") || j.contains("a_im") || j.contains("b_re") ||
                j.contains("b_im")) {
                spec.a = Complex(j.value("a_re", 0.0), j.value("a_im", 0.0));
                spec.b = Complex(j.value("b_re", 0.0), j.value("b_im", 0.0));
            } else {
                out.oo2_needs_fit = true;
            }
            break;
        default:
            break;
    }
    spec.validate();
    cfg.spec = spec;

    cfg.points_per_wavelength = j.value("points_per_wavelength", 16);
    cfg.n_source_modes = j.value("n_source_modes", 9);
    cfg.gmres_tol = j.value("gmres_tol", 1e-6);
    cfg.gmres_maxit = j.value("gmres_maxit", 0);
    cfg.gamma_inf_literal = j.value("gamma_inf_literal", false);
    out.n_modes = j.value("n_modes", 50);
    return out;
}

inline nlohmann::json config_to_json(const LoadedConfig& c) {
    const ExperimentConfig& cfg = c.experiment;
    nlohmann::json j;
    j["scenario"] = to_string(cfg.scenario);
    j["operator"] = to_string(cfg.spec.kind);
    j["epsilon"] = cfg.spec.epsilon;
    j["n_pade"] = cfg.spec.n_terms;
    j["xi"] = cfg.spec.xi;
    j["a_re"] = cfg.spec.a.real();
    j["a_im"] = cfg.spec.a.imag();
    j["b_re"] = cfg.spec.b.real();
    j["b_im"] = cfg.spec.b.imag();
    j["ell_over_lambda"] = cfg.setup.ell / cfg.setup.lambda_w;
    j["points_per_wavelength"] = cfg.points_per_wavelength;
    j["n_source_modes"] = cfg.n_source_modes;
    j["gmres_tol"] = cfg.gmres_tol;
    j["gmres_maxit"] = cfg.gmres_maxit;
    j["gamma_inf_literal"] = cfg.gamma_inf_literal;
    j["n_modes"] = c.n_modes;
    return j;
}

inline LoadedConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse config file " + path + ": " + e.what());
    }
    return config_from_json(j);
}

}  // namespace helmdd

#endif

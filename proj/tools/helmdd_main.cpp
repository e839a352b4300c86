// Experiment runner: analytic symbol/radius sweeps, per-mode Schwarz
// verification, the discrete two-subdomain solver with GMRES, and spectra
// of the interface iteration operator.  All artifacts are CSV/JSON files;
// reruns with the same configuration reproduce them byte for byte.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "helmdd/io.hpp"

namespace fs = std::filesystem;
using namespace helmdd;

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir = ".";
    LoadedConfig loaded;

    // per-command knobs
    std::vector<double> k_multipliers{1.0};
    double s_max_over_k = 3.0;
    int n_points = 400;
    int n_pairs = 4;
    double exclusion_over_k = 0.05;
    std::string spectrum_source = "modal";
    bool export_eigenvectors = false;
    bool both_scenarios = false;
};

std::ofstream open_artifact(const CliOptions& opt, const std::string& name) {
    fs::create_directories(opt.out_dir);
    const fs::path p = fs::path(opt.out_dir) / name;
    std::ofstream os(p);
    if (!os) throw ConfigError("cannot open output file: " + p.string());
    os.precision(17);
    return os;
}

/// Default second-order coefficients: min-max fit over the transverse mode
/// grid of the active experiment with a band around s = k removed.
Oo2Fit fit_oo2_for(const ExperimentConfig& cfg, double exclusion_over_k) {
    const Grid2D grid = cfg.make_grid();
    std::vector<double> s_grid;
    for (int m = 1; m <= grid.ny; ++m) s_grid.push_back(m * pi / cfg.setup.h);
    return optimize_oo2(cfg.setup, s_grid, exclusion_over_k * cfg.setup.k);
}

void resolve_operator(CliOptions& opt) {
    if (opt.loaded.experiment.spec.kind == SymbolKind::oo2 && opt.loaded.oo2_needs_fit) {
        const Oo2Fit fit = fit_oo2_for(opt.loaded.experiment, opt.exclusion_over_k);
        opt.loaded.experiment.spec.a = fit.a;
        opt.loaded.experiment.spec.b = fit.b;
        opt.loaded.oo2_needs_fit = false;
        std::cout << "oo2 coefficients from fit: a = " << fit.a << ", b = " << fit.b
                  << ", max |rho_open| = " << fit.max_abs_rho_open << "\n";
    }
}

std::string op_tag(const SymbolSpec& spec) { return to_string(spec.kind); }

void cmd_sweep_lambda(CliOptions& opt) {
    std::vector<PhysicalSetup> setups;
    for (double mult : opt.k_multipliers) {
        PhysicalSetup s = opt.loaded.experiment.setup;
        s.k *= mult;
        s.lambda_w /= mult;
        setups.push_back(s);
    }
    auto os = open_artifact(opt, "sweep_lambda.csv");
    write_sweep_lambda_csv(os, setups, opt.n_points, opt.s_max_over_k);
    std::cout << "wrote sweep_lambda.csv (" << setups.size() << " wavenumber(s))\n";
}

void cmd_sweep_rho(CliOptions& opt) {
    resolve_operator(opt);
    const ExperimentConfig& cfg = opt.loaded.experiment;
    const auto grid = make_sweep_grid(cfg.setup, opt.s_max_over_k * cfg.setup.k, opt.n_points);
    {
        auto os = open_artifact(opt, "rho_" + op_tag(cfg.spec) + ".csv");
        write_sweep_rho_csv(os, cfg.spec, cfg.setup, grid);
    }
    std::cout << "wrote rho_" << op_tag(cfg.spec) << ".csv\n";
    if (cfg.spec.kind == SymbolKind::pade) {
        // limit curve of the localized family: the square-root operator itself
        auto os = open_artifact(opt, "rho_opt-open.csv");
        write_sweep_rho_csv(os, SymbolSpec::opt_open(), cfg.setup, grid);
        std::cout << "wrote rho_opt-open.csv (square-root limit curve)\n";
    }
}

void cmd_modal_verify(CliOptions& opt) {
    resolve_operator(opt);
    const ExperimentConfig& cfg = opt.loaded.experiment;
    {
        auto os = open_artifact(opt, "modal_verify_" + op_tag(cfg.spec) + ".csv");
        write_modal_verify_csv(os, cfg.spec, cfg.setup, opt.loaded.n_modes, opt.n_pairs);
    }
    std::vector<ModalState> states;
    for (int m = 1; m <= opt.loaded.n_modes; ++m) {
        ModalState st = make_modal_state(make_mode(m, cfg.setup), Complex(1.0, 0.0),
                                         Complex(0.0, 0.0));
        try {
            for (int n = 0; n < 2 * opt.n_pairs; ++n)
                st = schwarz_modal_step(st, cfg.spec, cfg.setup);
        } catch (const Error&) {
            // divergent or degenerate mode: keep the partial history
        }
        states.push_back(std::move(st));
    }
    auto os = open_artifact(opt, "modal_history_" + op_tag(cfg.spec) + ".json");
    os << modal_history_json(states).dump(1) << "\n";
    std::cout << "wrote modal_verify_" << op_tag(cfg.spec) << ".csv and history json\n";
}

void run_profile(CliOptions& opt, const ExperimentConfig& cfg) {
    const SchwarzSystem system(cfg);
    const GmresTrace trace = system.solve();
    const std::string name =
        "gmres_" + std::string(to_string(cfg.scenario)) + "_" + op_tag(cfg.spec) + ".csv";
    auto os = open_artifact(opt, name);
    write_gmres_trace_csv(os, trace);
    std::cout << "wrote " << name << ": " << trace.iterations << " iterations, final residual "
              << trace.residuals.back() << (trace.converged ? "" : " (not converged)") << "\n";
}

void cmd_gmres_profile(CliOptions& opt) {
    resolve_operator(opt);
    ExperimentConfig cfg = opt.loaded.experiment;
    if (opt.both_scenarios) {
        cfg.scenario = Scenario::waveguide;
        run_profile(opt, cfg);
        cfg.scenario = Scenario::cavity;
        run_profile(opt, cfg);
    } else {
        run_profile(opt, cfg);
    }
}

void cmd_solve(CliOptions& opt) {
    resolve_operator(opt);
    const ExperimentConfig& cfg = opt.loaded.experiment;
    const SchwarzSystem system(cfg);
    const GmresTrace trace = system.solve();
    if (!trace.converged)
        std::cout << "warning: GMRES stopped at residual " << trace.residuals.back() << "\n";
    const FieldSolution field = reconstruct_solution(trace.solution, system);
    const std::string tag =
        std::string(to_string(cfg.scenario)) + "_" + op_tag(cfg.spec);
    {
        auto os = open_artifact(opt, "field_" + tag + ".csv");
        write_field_csv(os, field);
    }
    {
        auto os = open_artifact(opt, "gmres_" + tag + ".csv");
        write_gmres_trace_csv(os, trace);
    }
    std::cout << "wrote field_" << tag << ".csv; iterations = " << trace.iterations
              << ", interface jumps: p " << field.interface_jump_p << ", robin "
              << field.interface_jump_robin << "\n";
}

void cmd_spectrum(CliOptions& opt) {
    resolve_operator(opt);
    const ExperimentConfig& cfg = opt.loaded.experiment;
    SpectrumReport rep;
    std::vector<FourierMode> modes;
    double tol = 1e-2;
    Eigen::MatrixXcd vectors;
    const std::string tag = (opt.spectrum_source == "modal" ? "modal_" : "fd2d_") +
                            std::string(to_string(cfg.scenario)) + "_" + op_tag(cfg.spec);
    if (opt.spectrum_source == "modal") {
        tol = 1e-8;
        for (int m = 1; m <= opt.loaded.n_modes; ++m) modes.push_back(make_mode(m, cfg.setup));
        if (opt.export_eigenvectors) {
            const auto rhos = modal_radii(cfg.spec, modes, cfg.setup);
            const auto M = assemble_dense(
                [&](const Eigen::VectorXcd& v) {
                    return (v - modal_apply_A(rhos, v)).eval();
                },
                2 * static_cast<int>(modes.size()));
            std::tie(rep, vectors) = spectrum_with_vectors(M);
        } else {
            rep = modal_iteration_spectrum(cfg.spec, modes, cfg.setup);
        }
    } else if (opt.spectrum_source == "fd2d") {
        const SchwarzSystem system(cfg);
        const auto M = assemble_dense(
            [&](const Eigen::VectorXcd& v) { return system.apply_ImA(v); }, system.dim());
        if (opt.export_eigenvectors) std::tie(rep, vectors) = spectrum_with_vectors(M);
        else rep = spectrum(M);
    } else {
        throw ConfigError("spectrum: --source must be modal or fd2d");
    }

    {
        auto os = open_artifact(opt, "spectrum_" + tag + ".csv");
        write_spectrum_csv(os, rep);
    }
    {
        auto os = open_artifact(opt, "spectrum_" + tag + ".json");
        os << spectrum_json(rep, modes).dump(1) << "\n";
    }
    if (opt.export_eigenvectors && vectors.size() > 0) {
        auto os = open_artifact(opt, "eigenvectors_" + tag + ".csv");
        os << "eigen_index,component,re_v,im_v\n";
        for (int c = 0; c < vectors.cols(); ++c)
            for (int r = 0; r < vectors.rows(); ++r)
                os << c << ',' << r << ',' << fmt(vectors(r, c).real()) << ','
                   << fmt(vectors(r, c).imag()) << '\n';
    }
    std::cout << "spectrum_" << tag << ": dim " << rep.dim << ", on-circle "
              << rep.count_on_circle(tol) << ", outside " << rep.count_outside_circle(tol)
              << ", inside " << rep.count_inside_circle(tol) << " (tolerance " << tol << ")\n";
}

void cmd_oo2_fit(CliOptions& opt) {
    const Oo2Fit fit = fit_oo2_for(opt.loaded.experiment, opt.exclusion_over_k);
    nlohmann::json j = {{"a_re", fit.a.real()}, {"a_im", fit.a.imag()},
                        {"b_re", fit.b.real()}, {"b_im", fit.b.imag()},
                        {"max_abs_rho_open", fit.max_abs_rho_open}};
    auto os = open_artifact(opt, "oo2_fit.json");
    os << j.dump(1) << "\n";
    std::cout << "oo2 fit: a = " << fit.a << ", b = " << fit.b << ", max |rho_open| = "
              << fit.max_abs_rho_open << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimized-Schwarz transmission-condition laboratory for "
                 "closed-cavity and waveguide Helmholtz problems"};
    app.require_subcommand(1);
    app.fallthrough();  // shared flags may follow the subcommand

    CliOptions opt;
    nlohmann::json overrides;

    app.add_option("--config", opt.config_path, "JSON configuration file");
    app.add_option("--out", opt.out_dir, "artifact output directory");

    // flags mirroring the configuration keys
    std::string operator_name, scenario_name;
    double epsilon = 0, xi = 0, a_re = 0, a_im = 0, b_re = 0, b_im = 0;
    double ell_over_lambda = 0, gmres_tol = 0;
    int n_pade = 0, ppw = 0, n_source_modes = -1, gmres_maxit = -1, n_modes = 0;
    bool gamma_inf_literal = false;
    auto* o_op = app.add_option("--operator", operator_name,
                                "oo0 | emda | oo2 | pade | opt-close | opt-open");
    auto* o_sc = app.add_option("--scenario", scenario_name, "cavity | waveguide");
    auto* o_ep = app.add_option("--epsilon", epsilon, "damping coefficient");
    auto* o_np = app.add_option("--n-pade", n_pade, "number of rational terms");
    auto* o_xi = app.add_option("--xi", xi, "branch rotation angle");
    auto* o_ar = app.add_option("--a-re", a_re, "oo2 coefficient a, real part");
    auto* o_ai = app.add_option("--a-im", a_im, "oo2 coefficient a, imaginary part");
    auto* o_br = app.add_option("--b-re", b_re, "oo2 coefficient b, real part");
    auto* o_bi = app.add_option("--b-im", b_im, "oo2 coefficient b, imaginary part");
    auto* o_el = app.add_option("--ell-over-lambda", ell_over_lambda, "domain length in wavelengths");
    auto* o_pw = app.add_option("--points-per-wavelength", ppw, "grid resolution");
    auto* o_ns = app.add_option("--n-source-modes", n_source_modes, "modes in the source sum");
    auto* o_gt = app.add_option("--gmres-tol", gmres_tol, "relative residual tolerance");
    auto* o_gm = app.add_option("--gmres-maxit", gmres_maxit, "iteration cap (0 = dimension)");
    auto* o_nm = app.add_option("--n-modes", n_modes, "transverse modes for modal commands");
    auto* o_gl = app.add_flag("--gamma-inf-literal", gamma_inf_literal,
                              "use the inhomogeneous j*k Robin data on the outer wall");

    auto* sweep_lambda = app.add_subcommand("sweep-lambda", "transparent symbols over s");
    sweep_lambda->add_option("--k-mult", opt.k_multipliers,
                             "wavenumber multipliers, one sweep block each");
    auto* sweep_rho = app.add_subcommand("sweep-rho", "radius moduli of the active operator");
    auto* modal_verify = app.add_subcommand("modal-verify",
                                            "per-mode iteration against the analytic radius");
    modal_verify->add_option("--n-pairs", opt.n_pairs, "two-step ratio pairs");
    auto* solve = app.add_subcommand("solve", "run the discrete solver and export the field");
    auto* gmres_profile = app.add_subcommand("gmres-profile", "iteration/residual history");
    gmres_profile->add_flag("--both-scenarios", opt.both_scenarios,
                            "run waveguide and cavity back to back");
    auto* spectrum_cmd = app.add_subcommand("spectrum", "eigenvalues of I - A");
    spectrum_cmd->add_option("--source", opt.spectrum_source, "modal | fd2d");
    spectrum_cmd->add_flag("--export-eigenvectors", opt.export_eigenvectors,
                           "write interface eigenvector profiles");
    auto* oo2_fit = app.add_subcommand("oo2-fit", "min-max fit of the second-order symbol");
    oo2_fit->add_option("--exclusion", opt.exclusion_over_k,
                        "half-width of the removed band around s = k, in units of k");
    for (auto* c : {sweep_lambda, sweep_rho}) {
        c->add_option("--s-max-over-k", opt.s_max_over_k, "sweep upper bound in units of k");
        c->add_option("--n-points", opt.n_points, "sweep grid size");
    }

    try {
        app.parse(argc, argv);

        nlohmann::json j = nlohmann::json::object();
        if (!opt.config_path.empty()) {
            std::ifstream in(opt.config_path);
            if (!in) throw ConfigError("cannot open config file: " + opt.config_path);
            in >> j;
        }
        if (o_op->count()) j["operator"] = operator_name;
        if (o_sc->count()) j["scenario"] = scenario_name;
        if (o_ep->count()) j["epsilon"] = epsilon;
        if (o_np->count()) j["n_pade"] = n_pade;
        if (o_xi->count()) j["xi"] = xi;
        if (o_ar->count()) j["a_re"] = a_re;
        if (o_ai->count()) j["a_im"] = a_im;
        if (o_br->count()) j["b_re"] = b_re;
        if (o_bi->count()) j["b_im"] = b_im;
        if (o_el->count()) j["ell_over_lambda"] = ell_over_lambda;
        if (o_pw->count()) j["points_per_wavelength"] = ppw;
        if (o_ns->count()) j["n_source_modes"] = n_source_modes;
        if (o_gt->count()) j["gmres_tol"] = gmres_tol;
        if (o_gm->count()) j["gmres_maxit"] = gmres_maxit;
        if (o_nm->count()) j["n_modes"] = n_modes;
        if (o_gl->count()) j["gamma_inf_literal"] = gamma_inf_literal;

        opt.loaded = config_from_json(j);
        opt.loaded.experiment.validate();

        if (sweep_lambda->parsed()) cmd_sweep_lambda(opt);
        else if (sweep_rho->parsed()) cmd_sweep_rho(opt);
        else if (modal_verify->parsed()) cmd_modal_verify(opt);
        else if (solve->parsed()) cmd_solve(opt);
        else if (gmres_profile->parsed()) cmd_gmres_profile(opt);
        else if (spectrum_cmd->parsed()) cmd_spectrum(opt);
        else if (oo2_fit->parsed()) cmd_oo2_fit(opt);
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 3;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 3;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 2;
    }
}

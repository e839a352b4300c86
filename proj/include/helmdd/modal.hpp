#ifndef HELMDD_MODAL_HPP
#define HELMDD_MODAL_HPP

#include <utility>
#include <vector>

#include "helmdd/krylov.hpp"
#include "helmdd/symbols.hpp"

namespace helmdd {

/**
 * Closed-form solution of one subdomain for a single transverse mode:
 *   p(x) = A*exp(+alpha*x) + B*exp(-alpha*x)          for s^2 != k^2,
 *   p(x) = linear_slope*x + linear_offset              for s^2  = k^2,
 * vanishing at the outer wall x = -/+ ell/2 and equal to the prescribed
 * trace at the interface x = 0.
 */
struct ClosedFormSolution {
    Side side = Side::left;
    FourierMode mode;
    Complex A{0.0, 0.0};
    Complex B{0.0, 0.0};
    Complex linear_slope{0.0, 0.0};
    Complex linear_offset{0.0, 0.0};
    Complex trace{0.0, 0.0};      // value at x = 0
    double half_length = 0.0;     // ell/2
    bool affine = false;

    Complex evaluate(double x) const {
        if (affine) return linear_slope * x + linear_offset;
        const Complex al = mode.alpha;
        // sinh-ratio form, stable for strongly evanescent modes
        const Complex num_arg = side == Side::left ? al * (x + half_length)
                                                   : al * (half_length - x);
        const Complex den_arg = al * half_length;
        if (std::abs(den_arg.real()) > 350.0) {
            // pure exponential regime; both arguments have positive real part
            const Complex e = std::exp(num_arg - den_arg);
            const Complex c1 = 1.0 - std::exp(-2.0 * num_arg);
            const Complex c2 = 1.0 - std::exp(-2.0 * den_arg);
            return trace * e * c1 / c2;
        }
        return trace * std::sinh(num_arg) / std::sinh(den_arg);
    }
};

/**
 * Solves one subdomain for interface trace P: the mode ODE
 * d^2p/dx^2 + (k^2 - s^2) p = 0 with p = 0 at the outer wall and p = P at
 * the interface.  Throws ResonantModeError when sinh(alpha*ell/2)
 * underflows (mode resonant with the subdomain length).
 */
inline ClosedFormSolution solve_subdomain(Complex P, const FourierMode& mode, Side side,
                                          const PhysicalSetup& setup) {
    ClosedFormSolution sol;
    sol.side = side;
    sol.mode = mode;
    sol.trace = P;
    sol.half_length = setup.ell / 2.0;

    const Complex al = mode.alpha;
    if (al == Complex(0.0, 0.0)) {
        sol.affine = true;
        const double slope_mag = 2.0 / setup.ell;
        sol.linear_slope = (side == Side::left ? slope_mag : -slope_mag) * P;
        sol.linear_offset = P;
        return sol;
    }

    const Complex arg = al * sol.half_length;
    const Complex sh = std::abs(arg.real()) > 350.0
        ? 0.5 * std::exp(arg) * (1.0 - std::exp(-2.0 * arg))
        : std::sinh(arg);
    if (std::abs(sh) < 1e-14)
        throw ResonantModeError("solve_subdomain: mode resonant with subdomain length (m = "
                                + std::to_string(mode.m) + ")");
    const Complex ep = std::exp(arg), em = std::exp(-arg);
    if (side == Side::left) {
        sol.A = P * ep / (2.0 * sh);
        sol.B = -P * em / (2.0 * sh);
    } else {
        sol.A = -P * em / (2.0 * sh);   // 2 sinh(-arg) = -2 sinh(arg)
        sol.B = P * ep / (2.0 * sh);
    }
    return sol;
}

/**
 * x-derivative of the closed-form solution at the interface x = 0:
 * alpha*P*coth(+/- alpha*ell/2) in the oscillatory/evanescent case and the
 * affine slope at cut-on.
 */
inline Complex interface_normal_derivative(const ClosedFormSolution& sol) {
    if (sol.affine) return sol.linear_slope;
    const Complex arg = sol.mode.alpha * sol.half_length;
    const Complex cth = std::abs(arg.real()) > 350.0
        ? Complex(arg.real() > 0.0 ? 1.0 : -1.0, 0.0)
        : std::cosh(arg) / std::sinh(arg);
    const Complex d = sol.mode.alpha * sol.trace * cth;
    return sol.side == Side::left ? d : -d;
}

/// Interface traces of the per-mode Schwarz iteration and their history.
struct ModalState {
    FourierMode mode;
    Complex P0{0.0, 0.0};   // trace on the left interface
    Complex P1{0.0, 0.0};   // trace on the right interface
    int iteration = 0;
    std::vector<std::pair<Complex, Complex>> history;
};

inline ModalState make_modal_state(const FourierMode& mode, Complex P0, Complex P1) {
    ModalState st;
    st.mode = mode;
    st.P0 = P0;
    st.P1 = P1;
    st.history.push_back({P0, P1});
    return st;
}

/**
 * One half-sweep of the two-subdomain fixed point in Fourier space.  Each
 * side receives the Robin data d/dx p + lambda p of the other side's
 * previous solution and solves for its new interface trace; both normal
 * derivatives are eliminated through interface_normal_derivative.
 */
inline ModalState schwarz_modal_step(const ModalState& state, const SymbolSpec& spec,
                                     const PhysicalSetup& setup) {
    const FourierMode& mode = state.mode;
    const Complex lam = lambda_symbol(spec, mode.s, setup);

    const Complex unit_left = interface_normal_derivative(
        solve_subdomain(Complex(1.0, 0.0), mode, Side::left, setup));
    const Complex unit_right = interface_normal_derivative(
        solve_subdomain(Complex(1.0, 0.0), mode, Side::right, setup));
    const Complex denom_left = unit_left + lam;     // +d/dx + lambda on the left trace
    const Complex denom_right = -unit_right + lam;  // -d/dx + lambda on the right trace
    if (std::abs(denom_left) < 1e-14 || std::abs(denom_right) < 1e-14)
        throw DegenerateError("schwarz_modal_step: transmission response is degenerate");

    const auto sol_left = solve_subdomain(state.P0, mode, Side::left, setup);
    const auto sol_right = solve_subdomain(state.P1, mode, Side::right, setup);
    const Complex g0 = interface_normal_derivative(sol_right) + lam * state.P1;
    const Complex g1 = -interface_normal_derivative(sol_left) + lam * state.P0;

    ModalState next = state;
    next.P0 = g0 / denom_left;
    next.P1 = g1 / denom_right;
    next.iteration = state.iteration + 1;
    next.history.push_back({next.P0, next.P1});
    return next;
}

/**
 * Contraction modulus observed from the iteration itself, seeded with a
 * unit impulse on one interface (P0 = 1, P1 = 0).  Uses the two-step
 * ratios P^{n+1}/P^{n-1} (one-step ratios alternate interface), returning
 * the geometric mean of their square roots.  Traces that decay below
 * 1e-300 stop the collection; growth beyond 1e300 raises
 * DivergenceOverflow.
 */
inline double empirical_radius(const SymbolSpec& spec, const FourierMode& mode,
                               const PhysicalSetup& setup, int n_pairs) {
    if (n_pairs < 2) throw ConfigError("empirical_radius: need at least two pairs");
    ModalState st = make_modal_state(mode, Complex(1.0, 0.0), Complex(0.0, 0.0));
    std::vector<double> ratios;
    for (int n = 1; n <= 2 * n_pairs; ++n) {
        st = schwarz_modal_step(st, spec, setup);
        const double mag = std::max(std::abs(st.P0), std::abs(st.P1));
        if (mag > 1e300)
            throw DivergenceOverflow("empirical_radius: traces exceeded 1e300");
        if (n >= 2) {
            const auto& prev = st.history[n - 2];
            const auto& cur = st.history[n];
            if (std::abs(prev.first) > 1e-300)
                ratios.push_back(std::abs(cur.first / prev.first));
            if (std::abs(prev.second) > 1e-300)
                ratios.push_back(std::abs(cur.second / prev.second));
        }
        if (mag < 1e-300 && !ratios.empty()) break;
    }
    if (ratios.empty()) return 0.0;
    double log_acc = 0.0;
    for (double r : ratios) {
        if (r == 0.0) return 0.0;
        log_acc += 0.5 * std::log(r);
    }
    return std::exp(log_acc / static_cast<double>(ratios.size()));
}

/// Per-mode radii rho_close(spec, s_m); DegenerateError propagates.
inline std::vector<Complex> modal_radii(const SymbolSpec& spec,
                                        const std::vector<FourierMode>& modes,
                                        const PhysicalSetup& setup) {
    std::vector<Complex> rhos;
    rhos.reserve(modes.size());
    for (const auto& m : modes) rhos.push_back(rho_close(spec, m.s, setup));
    return rhos;
}

/**
 * Spectrum of I - A for the analytic per-mode operator: A acts on each
 * mode's trace pair as the swap-and-scale [[0, rho], [rho, 0]], so the
 * eigenvalues come in pairs {1 - rho(s_m), 1 + rho(s_m)}.
 */
inline SpectrumReport modal_iteration_spectrum(const SymbolSpec& spec,
                                               const std::vector<FourierMode>& modes,
                                               const PhysicalSetup& setup) {
    if (modes.empty()) throw ConfigError("modal_iteration_spectrum: empty mode set");
    SpectrumReport rep;
    rep.dim = 2 * static_cast<int>(modes.size());
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const Complex rho = rho_close(spec, modes[i].s, setup);
        for (const Complex mu : {1.0 - rho, 1.0 + rho}) {
            rep.eigenvalues.push_back(mu);
            rep.unit_circle_distances.push_back(std::abs(std::abs(1.0 - mu) - 1.0));
            rep.mode_index.push_back(static_cast<int>(i));
        }
    }
    return rep;
}

/// Matrix-free action of the modal fixed-point operator A on the stacked
/// trace vector [P0 block; P1 block].
inline Eigen::VectorXcd modal_apply_A(const std::vector<Complex>& rhos,
                                      const Eigen::VectorXcd& d) {
    const int n = static_cast<int>(rhos.size());
    if (d.size() != 2 * n) throw ConfigError("modal_apply_A: dimension mismatch");
    Eigen::VectorXcd out(2 * n);
    for (int i = 0; i < n; ++i) {
        out(i) = rhos[i] * d(n + i);
        out(n + i) = rhos[i] * d(i);
    }
    return out;
}

}  // namespace helmdd

#endif

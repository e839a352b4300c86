#ifndef HELMDD_SYMBOLS_HPP
#define HELMDD_SYMBOLS_HPP

#include <algorithm>
#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "helmdd/core.hpp"

namespace helmdd {

/// Transmission-condition families evaluated by this module.
enum class SymbolKind { oo0, emda, oo2, pade, opt_close, opt_open };

inline const char* to_string(SymbolKind k) {
    switch (k) {
        case SymbolKind::oo0:       return "oo0";
        case SymbolKind::emda:      return "emda";
        case SymbolKind::oo2:       return "oo2";
        case SymbolKind::pade:      return "pade";
        case SymbolKind::opt_close: return "opt-close";
        default:                    return "opt-open";
    }
}

/**
 * A tagged choice of transmission symbol with its free parameters.
 *
 * oo0        lambda = -j*k
 * emda       lambda = -j*(1 + j*epsilon)*k
 * oo2        lambda = a + b*s^2
 * pade       rational localization of the square-root symbol with n_terms
 *            terms, branch rotation xi and damping epsilon
 * opt_close  exact closed-domain symbol alpha(s)*coth(alpha(s)*ell/2)
 * opt_open   exact open-domain symbol -j*k*sqrt(1 - s^2/k^2)
 */
struct SymbolSpec {
    SymbolKind kind = SymbolKind::oo0;
    double epsilon = 0.0;      // emda / pade damping
    Complex a{0.0, 0.0};       // oo2
    Complex b{0.0, 0.0};       // oo2
    int n_terms = 4;           // pade
    double xi = pi / 4.0;      // pade

    static SymbolSpec oo0() { return {}; }
    static SymbolSpec emda(double eps) {
        SymbolSpec s; s.kind = SymbolKind::emda; s.epsilon = eps; s.validate(); return s;
    }
    static SymbolSpec oo2(Complex a, Complex b) {
        SymbolSpec s; s.kind = SymbolKind::oo2; s.a = a; s.b = b; return s;
    }
    static SymbolSpec pade(int n_terms, double xi = pi / 4.0, double eps = 0.0) {
        SymbolSpec s; s.kind = SymbolKind::pade; s.n_terms = n_terms; s.xi = xi;
        s.epsilon = eps; s.validate(); return s;
    }
    static SymbolSpec opt_close() { SymbolSpec s; s.kind = SymbolKind::opt_close; return s; }
    static SymbolSpec opt_open() { SymbolSpec s; s.kind = SymbolKind::opt_open; return s; }

    void validate() const {
        if (kind == SymbolKind::emda && epsilon < 0.0)
            throw ConfigError("SymbolSpec: emda damping must be >= 0");
        if (kind == SymbolKind::pade) {
            if (n_terms < 1) throw ConfigError("SymbolSpec: pade needs at least one term");
            if (!(xi > 0.0) || xi > pi / 2.0)
                throw ConfigError("SymbolSpec: pade branch rotation must lie in (0, pi/2]");
            if (epsilon < 0.0) throw ConfigError("SymbolSpec: pade damping must be >= 0");
        }
    }
};

/**
 * Symbol of the exact transparent condition of the closed rectangle,
 *   sqrt(k^2-s^2) * cot(sqrt(k^2-s^2) * ell/2)   for s^2 < k^2,
 *   2/ell                                        for s^2 = k^2,
 *   sqrt(s^2-k^2) * coth(sqrt(s^2-k^2) * ell/2)  for s^2 > k^2.
 * Always real.  Throws PoleError when the cotangent argument is within
 * `pole_window` of a nonzero multiple of pi.
 */
inline double lambda_opt_close(double s, const PhysicalSetup& setup,
                               double pole_window = 1e-10) {
    const double k = setup.k, ell = setup.ell;
    const double d = k * k - s * s;
    if (d == 0.0) return 2.0 / ell;
    if (d > 0.0) {
        const double w = std::sqrt(d);
        const double x = w * ell / 2.0;
        const double n = std::round(x / pi);
        if (n >= 1.0 && std::abs(x - n * pi) < pole_window)
            throw PoleError("lambda_opt_close: cotangent pole at s = " + std::to_string(s));
        return w * std::cos(x) / std::sin(x);
    }
    const double w = std::sqrt(-d);
    return w / std::tanh(w * ell / 2.0);
}

/// Symbol of the transparent condition of the unbounded problem,
/// -j*k*sqrt(1 - s^2/k^2); coincides with alpha(s, k) on both branches.
inline Complex lambda_opt_open(double s, double k) {
    return alpha(s, k);
}

/**
 * Rational square-root localization coefficients for a given number of
 * terms and branch rotation xi.  a_p, b_p are the real coefficients of the
 * classical approximation R_N(z) = 1 + sum a_p z / (1 + b_p z) of
 * sqrt(1+z); C0, A_p, B_p absorb the rotation of the branch cut.
 */
struct PadeCoefficients {
    int n_terms = 0;
    double xi = 0.0;
    std::vector<double> a, b;
    Complex c0{1.0, 0.0};
    std::vector<Complex> A, B;
};

/// Real-coefficient rational approximation R_N(z) of sqrt(1+z).
inline Complex pade_sqrt_rational(int n_terms, Complex z) {
    Complex r{1.0, 0.0};
    for (int p = 1; p <= n_terms; ++p) {
        const double t = p * pi / (2.0 * n_terms + 1.0);
        const double ap = 2.0 / (2.0 * n_terms + 1.0) * std::sin(t) * std::sin(t);
        const double bp = std::cos(t) * std::cos(t);
        r += ap * z / (1.0 + bp * z);
    }
    return r;
}

inline PadeCoefficients pade_coefficients(int n_terms, double xi) {
    if (n_terms < 1) throw ConfigError("pade_coefficients: n_terms must be >= 1");
    PadeCoefficients c;
    c.n_terms = n_terms;
    c.xi = xi;
    const Complex u = std::exp(Complex(0.0, -xi)) - 1.0;
    for (int p = 1; p <= n_terms; ++p) {
        const double t = p * pi / (2.0 * n_terms + 1.0);
        const double ap = 2.0 / (2.0 * n_terms + 1.0) * std::sin(t) * std::sin(t);
        const double bp = std::cos(t) * std::cos(t);
        c.a.push_back(ap);
        c.b.push_back(bp);
        const Complex den = 1.0 + bp * u;
        c.A.push_back(std::exp(Complex(0.0, -xi / 2.0)) * ap / (den * den));
        c.B.push_back(std::exp(Complex(0.0, -xi)) * bp / den);
    }
    c.c0 = std::exp(Complex(0.0, xi / 2.0)) * pade_sqrt_rational(n_terms, u);
    return c;
}

/**
 * Evaluates the chosen transmission symbol at the Fourier variable s.
 *
 * The rational square-root family acts on the tangential operator, whose
 * symbol is -s^2; with z = -s^2/k_eps^2 and k_eps = (1 + j*eps)*k,
 *   lambda = -j*k*(C0 + sum A_p z / (1 + B_p z)),
 * which converges to lambda_opt_open as the number of terms grows.
 */
inline Complex lambda_symbol(const SymbolSpec& spec, double s, const PhysicalSetup& setup) {
    const double k = setup.k;
    switch (spec.kind) {
        case SymbolKind::oo0:
            return -jj * k;
        case SymbolKind::emda:
            return -jj * (1.0 + jj * spec.epsilon) * k;
        case SymbolKind::oo2:
            return spec.a + spec.b * (s * s);
        case SymbolKind::pade: {
            const PadeCoefficients c = pade_coefficients(spec.n_terms, spec.xi);
            const Complex keps = (1.0 + jj * spec.epsilon) * k;
            const Complex z = -Complex(s * s) / (keps * keps);
            Complex acc = c.c0;
            for (int p = 0; p < c.n_terms; ++p) {
                const Complex den = 1.0 + c.B[p] * z;
                if (std::abs(den) < 1e-14)
                    throw DivergentTermError("lambda_symbol: rational term denominator collapsed");
                acc += c.A[p] * z / den;
            }
            return -jj * k * acc;
        }
        case SymbolKind::opt_close:
            return Complex(lambda_opt_close(s, setup), 0.0);
        default:
            return lambda_opt_open(s, k);
    }
}

/**
 * Per-mode contraction factor of the two-subdomain Schwarz fixed point on
 * the closed rectangle,
 *   rho = (lambda(s) - lambda_opt_close(s)) / (lambda(s) + lambda_opt_close(s)).
 * Returns 0 identically for the opt_close spec and exactly -1 at cotangent
 * poles of lambda_opt_close (the limit value).  Throws DegenerateError when
 * the denominator falls below 1e-14.
 */
inline Complex rho_close(const SymbolSpec& spec, double s, const PhysicalSetup& setup) {
    if (spec.kind == SymbolKind::opt_close) return Complex(0.0, 0.0);
    double L;
    try {
        L = lambda_opt_close(s, setup);
    } catch (const PoleError&) {
        return Complex(-1.0, 0.0);
    }
    const Complex lam = lambda_symbol(spec, s, setup);
    const Complex den = lam + L;
    if (std::abs(den) < 1e-14)
        throw DegenerateError("rho_close: symbol hits the resonance of the denominator");
    return (lam - L) / den;
}

/// Open-domain analogue of rho_close, normalized against lambda_opt_open.
inline Complex rho_open(const SymbolSpec& spec, double s, const PhysicalSetup& setup) {
    if (spec.kind == SymbolKind::opt_open) return Complex(0.0, 0.0);
    const Complex L = lambda_opt_open(s, setup.k);
    const Complex lam = lambda_symbol(spec, s, setup);
    const Complex den = lam + L;
    if (std::abs(den) < 1e-14)
        throw DegenerateError("rho_open: symbol hits the resonance of the denominator");
    return (lam - L) / den;
}

inline Complex rho_open(const SymbolSpec& spec, double s, double k) {
    PhysicalSetup setup;
    setup.k = k;
    setup.lambda_w = 2.0 * pi / k;
    return rho_open(spec, s, setup);
}

/**
 * Difference lambda_opt_close(s) - lambda_opt_open(s).  The evanescent
 * branch uses the cancellation-free form 2*w / (exp(ell*w) - 1) with
 * w = sqrt(s^2 - k^2); the propagating branch inherits PoleError.
 */
inline Complex symbol_gap(double s, const PhysicalSetup& setup) {
    const double k = setup.k;
    const double d = k * k - s * s;
    if (d == 0.0) return Complex(2.0 / setup.ell, 0.0);
    if (d > 0.0)
        return Complex(lambda_opt_close(s, setup), std::sqrt(d));
    const double w = std::sqrt(-d);
    return Complex(2.0 * w / std::expm1(setup.ell * w), 0.0);
}

struct RadiusSample {
    double s = 0.0;
    Complex rho{0.0, 0.0};
    Regime regime = Regime::propagating;
};

/**
 * Strictly increasing sweep grid over [0, s_max] with geometric refinement
 * towards s = k inside [0.8k, 1.2k]; the point s = k itself is included.
 */
inline std::vector<double> make_sweep_grid(const PhysicalSetup& setup, double s_max,
                                           int n_points = 400) {
    const double k = setup.k;
    if (!(s_max > 0.0) || n_points < 16)
        throw ConfigError("make_sweep_grid: need s_max > 0 and at least 16 points");
    std::vector<double> g;
    const double lo = 0.8 * k, hi = std::min(1.2 * k, s_max);
    const int n_band = n_points / 2;
    const int n_out = n_points - n_band;
    // uniform part below and above the band, proportional to length
    const double len_below = std::min(lo, s_max);
    const double len_above = s_max > hi ? s_max - hi : 0.0;
    const int n_below = len_above > 0.0
        ? std::max(4, static_cast<int>(n_out * len_below / (len_below + len_above)))
        : n_out;
    const int n_above = n_out - n_below;
    for (int i = 0; i < n_below; ++i) g.push_back(len_below * i / n_below);
    if (s_max > lo) {
        // geometric clustering towards k from both sides
        const int half = n_band / 2;
        const double ratio = 1e-6;  // innermost offset relative to band width
        for (int i = 0; i < half; ++i) {
            const double t = std::pow(ratio, static_cast<double>(i) / (half - 1));
            g.push_back(k - (k - lo) * t);
        }
        g.push_back(k);
        if (s_max > k) {
            const double top = hi - k;
            for (int i = half - 1; i >= 0; --i) {
                const double t = std::pow(ratio, static_cast<double>(i) / (half - 1));
                g.push_back(k + top * t);
            }
        }
        for (int i = 1; i <= n_above; ++i) g.push_back(hi + (s_max - hi) * i / n_above);
    }
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end(),
                        [](double x, double y) { return std::abs(x - y) < 1e-15; }),
            g.end());
    return g;
}

enum class Codomain { real, imaginary, split_by_regime, complex_mixed };

inline const char* to_string(Codomain c) {
    switch (c) {
        case Codomain::real:            return "real";
        case Codomain::imaginary:       return "imaginary";
        case Codomain::split_by_regime: return "imaginary(s<k)/real(s>k)";
        default:                        return "complex";
    }
}

/**
 * Zero/pole/codomain summary of a symbol over a grid.  The report carries
 * the symbol value both at s = 0 and at the cut-on point s = k, with a
 * flag when the two differ: the two reference points are easy to conflate
 * and published tables have mixed them up.
 */
struct SymbolPropertyReport {
    int zero_count = 0;
    int pole_count = 0;
    Codomain codomain = Codomain::complex_mixed;
    Complex value_at_zero{0.0, 0.0};
    Complex value_at_cut_on{0.0, 0.0};
    bool cut_on_differs = false;
};

namespace detail {

inline std::optional<Complex> try_symbol(const SymbolSpec& spec, double s,
                                         const PhysicalSetup& setup) {
    try {
        return lambda_symbol(spec, s, setup);
    } catch (const PoleError&) {
        return std::nullopt;
    }
}

}  // namespace detail

inline SymbolPropertyReport tabulate_symbol_properties(const SymbolSpec& spec,
                                                       const PhysicalSetup& setup,
                                                       const std::vector<double>& s_grid) {
    if (s_grid.size() < 2 || !std::is_sorted(s_grid.begin(), s_grid.end()))
        throw ConfigError("tabulate_symbol_properties: grid must be increasing");
    SymbolPropertyReport rep;

    std::vector<std::optional<Complex>> vals(s_grid.size());
    double scale = 0.0;
    double re_max = 0.0, im_max = 0.0;
    double stray_re_prop = 0.0, stray_im_evan = 0.0;
    for (std::size_t i = 0; i < s_grid.size(); ++i) {
        vals[i] = detail::try_symbol(spec, s_grid[i], setup);
        if (!vals[i]) { ++rep.pole_count; continue; }
        const Complex v = *vals[i];
        scale = std::max(scale, std::abs(v));
        re_max = std::max(re_max, std::abs(v.real()));
        im_max = std::max(im_max, std::abs(v.imag()));
        if (regime_of(s_grid[i], setup.k) == Regime::propagating)
            stray_re_prop = std::max(stray_re_prop, std::abs(v.real()));
        else
            stray_im_evan = std::max(stray_im_evan, std::abs(v.imag()));
    }
    if (scale == 0.0) scale = 1.0;

    if (im_max < 1e-12 * scale) rep.codomain = Codomain::real;
    else if (re_max < 1e-12 * scale) rep.codomain = Codomain::imaginary;
    else if (stray_re_prop < 1e-12 * scale && stray_im_evan < 1e-12 * scale)
        rep.codomain = Codomain::split_by_regime;

    // exact zeros sitting on grid points
    for (std::size_t i = 0; i < s_grid.size(); ++i)
        if (vals[i] && std::abs(*vals[i]) < 1e-12 * scale) ++rep.zero_count;

    // sign changes of the real part between finite neighbours: bisect and
    // classify by whether the modulus collapses (zero) or blows up (pole)
    for (std::size_t i = 0; i + 1 < s_grid.size(); ++i) {
        if (!vals[i] || !vals[i + 1]) continue;
        const Complex va = *vals[i], vb = *vals[i + 1];
        if (std::abs(va) < 1e-12 * scale || std::abs(vb) < 1e-12 * scale) continue;
        if ((va.real() > 0.0) == (vb.real() > 0.0)) continue;
        if (std::abs(va.imag()) > 1e-9 * scale || std::abs(vb.imag()) > 1e-9 * scale) continue;
        double a = s_grid[i], b = s_grid[i + 1];
        double fa = va.real();
        double mod_mid = std::abs(va);
        for (int it = 0; it < 60; ++it) {
            const double m = 0.5 * (a + b);
            const auto vm = detail::try_symbol(spec, m, setup);
            if (!vm) { mod_mid = std::numeric_limits<double>::infinity(); break; }
            mod_mid = std::abs(*vm);
            if ((vm->real() > 0.0) == (fa > 0.0)) { a = m; fa = vm->real(); }
            else b = m;
        }
        if (mod_mid > 1e6 * scale || std::isinf(mod_mid)) ++rep.pole_count;
        else ++rep.zero_count;
    }

    rep.value_at_zero = lambda_symbol(spec, 0.0, setup);
    rep.value_at_cut_on = lambda_symbol(spec, setup.k, setup);
    rep.cut_on_differs =
        std::abs(rep.value_at_zero - rep.value_at_cut_on) > 1e-12 * (1.0 + scale);
    return rep;
}

namespace detail {

/// Plain Nelder-Mead on R^n, deterministic, no restarts.
inline std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x0, int max_iter = 4000,
                                       double ftol = 1e-13, double xtol = 1e-11) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> sim(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i) {
        if (sim[i + 1][i] != 0.0) sim[i + 1][i] *= 1.05;
        else sim[i + 1][i] = 0.00025;
    }
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(sim[i]);

    auto order = [&] {
        std::vector<std::size_t> idx(n + 1);
        for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        std::vector<std::vector<double>> s2;
        std::vector<double> f2;
        for (auto i : idx) { s2.push_back(sim[i]); f2.push_back(fv[i]); }
        sim.swap(s2); fv.swap(f2);
    };
    order();

    for (int it = 0; it < max_iter; ++it) {
        double fspread = std::abs(fv[n] - fv[0]);
        double xspread = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            xspread = std::max(xspread, std::abs(sim[n][i] - sim[0][i]));
        if (fspread < ftol && xspread < xtol) break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) centroid[j] += sim[i][j];
        }
        for (auto& c : centroid) c /= static_cast<double>(n);

        auto blend = [&](double t) {
            std::vector<double> x(n);
            for (std::size_t j = 0; j < n; ++j)
                x[j] = centroid[j] + t * (sim[n][j] - centroid[j]);
            return x;
        };
        const auto xr = blend(-1.0);
        const double fr = f(xr);
        if (fr < fv[0]) {
            const auto xe = blend(-2.0);
            const double fe = f(xe);
            if (fe < fr) { sim[n] = xe; fv[n] = fe; }
            else { sim[n] = xr; fv[n] = fr; }
        } else if (fr < fv[n - 1]) {
            sim[n] = xr; fv[n] = fr;
        } else {
            const bool outside = fr < fv[n];
            const auto xc = blend(outside ? -0.5 : 0.5);
            const double fc = f(xc);
            if (fc < std::min(fr, fv[n])) { sim[n] = xc; fv[n] = fc; }
            else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t j = 0; j < n; ++j)
                        sim[i][j] = sim[0][j] + 0.5 * (sim[i][j] - sim[0][j]);
                    fv[i] = f(sim[i]);
                }
            }
        }
        order();
    }
    return sim[0];
}

}  // namespace detail

struct Oo2Fit {
    Complex a{0.0, 0.0};
    Complex b{0.0, 0.0};
    double max_abs_rho_open = 0.0;
};

/**
 * Min-max fit of the second-order symbol a + b*s^2 against the open-domain
 * radius on a grid with a band of half-width `exclusion_halfwidth` removed
 * around s = k.  Derivative-free search over the four real parameters,
 * started from a two-point interpolation of lambda_opt_open (one
 * propagating point, one evanescent when available).  Throws
 * OptimizationFailure if the achieved max modulus reaches 1.
 */
inline Oo2Fit optimize_oo2(const PhysicalSetup& setup, const std::vector<double>& s_grid,
                           double exclusion_halfwidth) {
    if (!(exclusion_halfwidth > 0.0))
        throw ConfigError("optimize_oo2: exclusion half-width must be positive");
    const double k = setup.k;
    std::vector<double> grid;
    for (double s : s_grid)
        if (std::abs(s - k) > exclusion_halfwidth) grid.push_back(s);
    if (grid.empty()) throw ConfigError("optimize_oo2: no grid points retained");

    const auto objective = [&](const std::vector<double>& x) {
        const Complex a(x[0], x[1]), b(x[2], x[3]);
        double worst = 0.0;
        for (double s : grid) {
            const Complex lam = a + b * (s * s);
            const Complex L = lambda_opt_open(s, k);
            const Complex den = lam + L;
            if (std::abs(den) < 1e-14) return 1e6;
            worst = std::max(worst, std::abs((lam - L) / den));
        }
        return worst;
    };

    // starting point: exact interpolation through two well-separated grid
    // points, one per regime when both regimes are present
    std::vector<double> prop, evan;
    for (double s : grid) (s < k ? prop : evan).push_back(s);
    Complex a0, b0;
    if (grid.size() == 1) {
        a0 = lambda_opt_open(grid[0], k);
        b0 = Complex(0.0, 0.0);
    } else {
        double s1, s2;
        if (!prop.empty() && !evan.empty()) {
            s1 = prop[prop.size() / 2];
            s2 = evan[std::min(evan.size() / 3, evan.size() - 1)];
        } else {
            s1 = grid[grid.size() / 4];
            s2 = grid[3 * grid.size() / 4];
        }
        const Complex l1 = lambda_opt_open(s1, k), l2 = lambda_opt_open(s2, k);
        b0 = (l2 - l1) / (s2 * s2 - s1 * s1);
        a0 = l1 - b0 * (s1 * s1);
    }

    const auto x = detail::nelder_mead(objective, {a0.real(), a0.imag(), b0.real(), b0.imag()});
    Oo2Fit fit;
    fit.a = Complex(x[0], x[1]);
    fit.b = Complex(x[2], x[3]);
    fit.max_abs_rho_open = objective(x);
    if (fit.max_abs_rho_open >= 1.0)
        throw OptimizationFailure("optimize_oo2: achieved max |rho_open| >= 1; "
                                  "check the grid and exclusion band");
    return fit;
}

}  // namespace helmdd

#endif

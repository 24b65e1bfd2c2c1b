#include "slowpassage/spectral.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "slowpassage/errors.hpp"
#include "slowpassage/stats.hpp"

namespace sp {

using cd = std::complex<double>;

std::vector<double> dispersion(const OperatorSpec& spec, const std::vector<double>& k_values) {
    std::vector<double> out;
    out.reserve(k_values.size());
    for (double k : k_values) out.push_back(spec.constant_shift - k * k);
    return out;
}

SpectrumReport discrete_spectrum(const OperatorSpec& spec, double half_width, int n, double zero_tol) {
    if (n > 8192) throw PreconditionError("discrete_spectrum: n must not exceed 8192");
    if (n < 8 || n % 2 == 0) throw PreconditionError("discrete_spectrum: n must be odd and at least 8");
    if (!(half_width > 0)) throw DomainError("discrete_spectrum: half_width must be positive");
    const double h = 2 * half_width / (n - 1);
    const double ih2 = 1.0 / (h * h);
    // Neumann matrix (mirrored ghost nodes) symmetrised by the trapezoid weights: the
    // first and last off-diagonals become sqrt(2)/h^2.
    std::vector<double> d(n, -2 * ih2 + spec.constant_shift), e(n, ih2);
    e[0] = std::sqrt(2.0) * ih2;
    e[n - 2] = std::sqrt(2.0) * ih2;

    SpectrumReport rep;
    {
        std::vector<double> dd(d), ee(e), w(n);
        std::vector<lapack_int> isuppz(2 * n);
        lapack_int m = 0;
        const lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'N', 'A', n, dd.data(), ee.data(), 0, 0, 0, 0,
                                               0.0, &m, w.data(), nullptr, 1, isuppz.data());
        if (info != 0) throw Error("discrete_spectrum: eigenvalue solver failed (info " + std::to_string(info) + ")");
        w.resize(m);
        rep.diffusion_eigenvalues = w;
        rep.max_diffusion_eigenvalue = w.back();
    }
    int diffusion_zeros = 0;
    for (double v : rep.diffusion_eigenvalues)
        if (std::abs(v) <= zero_tol) ++diffusion_zeros;
    if (diffusion_zeros > 0) {
        std::vector<double> dd(d), ee(e), w(n), z(static_cast<std::size_t>(n) * n);
        std::vector<lapack_int> isuppz(2 * n);
        lapack_int m = 0;
        const lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'V', n, dd.data(), ee.data(), -zero_tol,
                                               zero_tol, 0, 0, 0.0, &m, w.data(), z.data(), n, isuppz.data());
        if (info != 0) throw Error("discrete_spectrum: eigenvector solver failed (info " + std::to_string(info) + ")");
        for (lapack_int k = 0; k < m; ++k) {
            double nrm = 0;
            for (int i = 0; i < n; ++i) nrm += z[k * n + i] * z[k * n + i];
            rep.center_diffusion_component = std::max(rep.center_diffusion_component, std::sqrt(nrm));
        }
    }
    // The scalar block contributes the unit vectors (0,1,0) and (0,0,1) with eigenvalue 0.
    rep.zero_multiplicity = diffusion_zeros + (spec.include_scalar_block ? 2 : 0);
    rep.center_on_scalar_block = rep.center_diffusion_component <= 1e-12;
    return rep;
}

ResolventSolution resolvent_apply(double omega, const GridFunction& b, double tol) {
    const int n = b.n();
    const double h = b.h();
    const auto& bv = b.values();
    const double bsup = b.sup();
    {
        const auto db = derivative1(b);
        const int outer = std::max(1, n / 10);
        double flat = 0;
        for (int i = 0; i < outer; ++i) flat = std::max({flat, std::abs(db[i]), std::abs(db[n - 1 - i])});
        if (flat > 1e-6 * std::max(bsup, 1e-300))
            throw PreconditionError("resolvent_apply: b must be flat in the outer 10% of the domain");
    }
    const cd eta = std::sqrt(cd(1.0, omega));
    const cd E = std::exp(-eta * h);
    const cd w0 = (1.0 - E) / eta;
    const cd w1 = (1.0 - E * (1.0 + eta * h)) / (eta * eta * h);

    // JR_j = int_{x_j}^inf e^{-eta (xi - x_j)} b, JL_j = int_{-inf}^{x_j} e^{-eta (x_j - xi)} b,
    // KR, KL the same transforms of b' (piecewise constant per cell).
    std::vector<cd> JR(n), JL(n), KR(n), KL(n);
    JR[n - 1] = bv[n - 1] / eta;
    KR[n - 1] = 0;
    for (int j = n - 2; j >= 0; --j) {
        JR[j] = bv[j] * (w0 - w1) + bv[j + 1] * w1 + E * JR[j + 1];
        KR[j] = (bv[j + 1] - bv[j]) / h * w0 + E * KR[j + 1];
    }
    JL[0] = bv[0] / eta;
    KL[0] = 0;
    for (int j = 1; j < n; ++j) {
        JL[j] = bv[j] * (w0 - w1) + bv[j - 1] * w1 + E * JL[j - 1];
        KL[j] = (bv[j] - bv[j - 1]) / h * w0 + E * KL[j - 1];
    }
    ResolventSolution sol;
    for (ComplexGrid* g : {&sol.a, &sol.da, &sol.d2a}) {
        g->half_width = b.half_width();
        g->n = n;
        g->v.resize(n);
    }
    const cd eta2 = eta * eta;
    double res = 0;
    for (int j = 0; j < n; ++j) {
        sol.a.v[j] = (JR[j] + JL[j]) / (2.0 * eta);
        sol.da.v[j] = (KR[j] + KL[j]) / (2.0 * eta);
        sol.d2a.v[j] = 0.5 * (KR[j] - KL[j]);
        res = std::max(res, std::abs(sol.d2a.v[j] - eta2 * sol.a.v[j] + bv[j]));
    }
    sol.residual = res;
    if (res > tol * bsup) {
        std::ostringstream os;
        os << "resolvent_apply: ODE residual " << res << " exceeds " << tol << " * |b|_inf at omega = " << omega;
        throw QuadratureFailure(os.str(), res);
    }
    return sol;
}

std::vector<BatteryMember> default_battery(double half_width, int n) {
    auto sech = [](double x) { return 1.0 / std::cosh(x); };
    return {
        {"constant", GridFunction(half_width, n, 1.0)},
        {"gaussian", GridFunction::sample(half_width, n, [](double x) { return std::exp(-x * x); })},
        {"sech", GridFunction::sample(half_width, n, sech)},
        {"sech_sin3", GridFunction::sample(half_width, n, [&](double x) { return sech(x) * std::sin(3 * x); })},
        {"tent", GridFunction::sample(half_width, n, [](double x) { return std::max(0.0, 1.0 - std::abs(x)); })},
    };
}

BoundReport verify_resolvent_bounds(const std::vector<double>& omegas, const std::vector<BatteryMember>& battery) {
    for (double w : omegas)
        if (!(std::abs(w) >= 1)) throw PreconditionError("verify_resolvent_bounds: every |omega| must be >= 1");
    BoundReport rep;
    std::map<double, double> zy_sup;
    for (double w : omegas) {
        const double aw = std::abs(w);
        for (const auto& m : battery) {
            BoundRow row;
            row.omega = w;
            row.id = m.id;
            const double bsup = m.b.sup();
            if (bsup == 0) {
                rep.rows.push_back(row);
                zy_sup[aw] = std::max(zy_sup[aw], 0.0);
                continue;
            }
            const auto sol = resolvent_apply(w, m.b, INFINITY);
            const auto db = derivative1(m.b);
            double a_sup = 0, a_z = 0, a1w = 0, a2w = 0, b1w = 0;
            for (int i = 0; i < m.b.n(); ++i) {
                const double x = m.b.x(i);
                a_sup = std::max(a_sup, std::abs(sol.a.v[i]));
                a1w = std::max(a1w, (1 + std::abs(x)) * std::abs(sol.da.v[i]));
                a2w = std::max(a2w, (1 + x * x) * std::abs(sol.d2a.v[i]));
                b1w = std::max(b1w, (1 + std::abs(x)) * std::abs(db[i]));
            }
            a_z = a_sup + a1w + a2w;
            const double b_y = bsup + b1w;
            row.x_ratio = std::max(a_sup / bsup, 1.0 / aw);
            row.zy_ratio = a_z / b_y;
            row.appc_ratio = b1w > 0 ? a2w / b1w : 0.0;
            row.residual_rel = sol.residual / bsup;
            if (row.x_ratio * aw > 2) {
                rep.x_ok = false;
                rep.violations.push_back("(omega=" + std::to_string(w) + ", " + m.id + "): X-ratio * |omega| > 2");
            }
            if (row.residual_rel > 1e-6) {
                rep.residual_ok = false;
                rep.violations.push_back("(omega=" + std::to_string(w) + ", " + m.id + "): ODE residual too large");
            }
            rep.zy_scaled_sup = std::max(rep.zy_scaled_sup, row.zy_ratio * std::sqrt(aw));
            rep.appc_scaled_sup = std::max(rep.appc_scaled_sup, row.appc_ratio * std::sqrt(aw));
            zy_sup[aw] = std::max(zy_sup[aw], row.zy_ratio);
            rep.rows.push_back(row);
        }
    }
    std::vector<double> lx, ly;
    for (const auto& [w, z] : zy_sup)
        if (z > 0) {
            lx.push_back(std::log(w));
            ly.push_back(std::log(z));
        }
    if (lx.size() >= 2) rep.zy_slope = linear_fit(lx, ly).slope;
    return rep;
}

void write_bounds_csv(const std::string& path, const BoundReport& report) {
    std::ofstream f(path);
    if (!f) throw Error("cannot open " + path);
    f << std::setprecision(17) << "omega,test_id,x_ratio,zy_ratio,appc_ratio,residual_rel\n";
    for (const auto& r : report.rows)
        f << r.omega << ',' << r.id << ',' << r.x_ratio << ',' << r.zy_ratio << ',' << r.appc_ratio << ','
          << r.residual_rel << '\n';
}

void write_bounds_matrix_csv(const std::string& path, const BoundReport& report) {
    std::vector<std::string> ids;
    std::vector<double> omegas;
    for (const auto& r : report.rows) {
        if (std::find(ids.begin(), ids.end(), r.id) == ids.end()) ids.push_back(r.id);
        if (std::find(omegas.begin(), omegas.end(), r.omega) == omegas.end()) omegas.push_back(r.omega);
    }
    std::ofstream f(path);
    if (!f) throw Error("cannot open " + path);
    f << std::setprecision(17) << "omega";
    for (const auto& id : ids) f << ',' << id;
    f << '\n';
    for (double w : omegas) {
        f << w;
        for (const auto& id : ids) {
            double v = 0;
            for (const auto& r : report.rows)
                if (r.omega == w && r.id == id) v = r.zy_ratio;
            f << ',' << v;
        }
        f << '\n';
    }
}

}  // namespace sp

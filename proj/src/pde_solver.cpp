#include "slowpassage/pde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace sp {

double EvolutionSpec::local_rhs(double u, const ScalarBlock& s, double t) const {
    double r = 0;
    if (linear_coeff) r += linear_coeff(s, t) * u;
    if (reaction) {
        const auto c = reaction(s, t);
        r += c[0] + u * (c[1] + u * (c[2] + u * (c[3] + u * c[4])));
    }
    if (source) r += source(s, t);
    return r;
}

double default_dt(const GridFunction& grid, double max_transport, double cfl_guard) {
    const double h = grid.h();
    double dt = 4 * h * h;
    if (max_transport > 0) dt = std::min(dt, cfl_guard * h / (max_transport * grid.half_width()));
    return 0.5 * dt;
}

namespace {

// Reaction + source + transport part of the right-hand side.
std::vector<double> nondiffusive_rhs(const GridFunction& g, const ScalarBlock& s, double t,
                                     const EvolutionSpec& spec, TransportScheme scheme) {
    const int n = g.n();
    const double h = g.h();
    const auto& u = g.values();
    const double lin = spec.linear_coeff ? spec.linear_coeff(s, t) : 0.0;
    std::array<double, 5> c{};
    if (spec.reaction) c = spec.reaction(s, t);
    const double src = spec.source ? spec.source(s, t) : 0.0;
    const double tc = spec.transport_coeff ? spec.transport_coeff(s, t) : 0.0;
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        const double ui = u[i];
        out[i] = lin * ui + c[0] + ui * (c[1] + ui * (c[2] + ui * (c[3] + ui * c[4]))) + src;
    }
    if (tc != 0.0) {
        for (int i = 0; i < n; ++i) {
            const double xi = g.x(i);
            const double cx = tc * xi;
            double d = 0.0;
            if (scheme == TransportScheme::upwind_first) {
                // u_t = cx u_x is advection with velocity -cx
                if (cx < 0) {
                    if (i > 0) d = (u[i] - u[i - 1]) / h;
                } else if (cx > 0) {
                    if (i < n - 1) d = (u[i + 1] - u[i]) / h;
                }
            } else if (i > 0 && i < n - 1) {
                d = (u[i + 1] - u[i - 1]) / (2 * h);
            }
            out[i] += cx * d;
        }
    }
    return out;
}

void check_cfl(const GridFunction& g, const EvolutionSpec& spec, const ScalarBlock& s, double t, double dt,
               double guard) {
    if (!spec.transport_coeff) return;
    const double c = std::abs(spec.transport_coeff(s, t));
    const double cfl = c * g.half_width() * dt / g.h();
    if (cfl > guard * (1 + 1e-12)) {
        std::ostringstream os;
        os << "CFL violation: |c| L dt / h = " << cfl << " exceeds " << guard << " at t = " << t
           << "; reduce dt below " << guard * g.h() / (c * g.half_width());
        throw SteppingError(os.str());
    }
}

}  // namespace

SolverState step(const SolverState& st, const EvolutionSpec& spec, const SolverConfig& cfg) {
    return step(st, spec, cfg, cfg.dt);
}

SolverState step(const SolverState& st, const EvolutionSpec& spec, const SolverConfig& cfg, double dt) {
    if (!(dt > 0)) throw DomainError("step: dt must be positive");
    const double t0 = st.t;
    check_cfl(st.u, spec, st.scalars, t0, dt, cfg.cfl_guard);

    GridFunction u0 = heat_step(st.u, 0.5 * dt);

    const ScalarBlock s0 = st.scalars;
    ScalarBlock s1;
    if (spec.scalar_flow) {
        s1 = spec.scalar_flow(s0, t0, dt);
    } else if (spec.scalar_drift) {
        const auto d = spec.scalar_drift(s0, t0);
        s1 = {s0[0] + dt * d[0], s0[1] + dt * d[1]};
    } else {
        s1 = s0;
    }
    check_cfl(st.u, spec, s1, t0 + dt, dt, cfg.cfl_guard);

    const int n = u0.n();
    const auto k1 = nondiffusive_rhs(u0, s0, t0, spec, cfg.transport);
    std::vector<double> v1(n);
    for (int i = 0; i < n; ++i) v1[i] = u0[i] + dt * k1[i];
    for (double v : v1)
        if (!std::isfinite(v)) throw BlowUpError("non-finite values during stage 1", t0);
    GridFunction u1 = u0.with_values(v1);
    const auto k2 = nondiffusive_rhs(u1, s1, t0 + dt, spec, cfg.transport);
    std::vector<double> v2(n);
    for (int i = 0; i < n; ++i) v2[i] = 0.5 * (u0[i] + v1[i] + dt * k2[i]);
    for (double v : v2)
        if (!std::isfinite(v)) throw BlowUpError("non-finite values during stage 2", t0 + dt);

    ScalarBlock s2 = s1;
    if (!spec.scalar_flow && spec.scalar_drift) {
        const auto d0 = spec.scalar_drift(s0, t0);
        const auto d1 = spec.scalar_drift(s1, t0 + dt);
        s2 = {s0[0] + 0.5 * dt * (d0[0] + d1[0]), s0[1] + 0.5 * dt * (d0[1] + d1[1])};
    }

    SolverState out{heat_step(u0.with_values(std::move(v2)), 0.5 * dt), s2, t0 + dt};
    return out;
}

namespace {
void check_escape(const SolverState& s, const SolverConfig& cfg) {
    if (std::isfinite(cfg.escape_ceiling) && s.u.sup() > cfg.escape_ceiling) {
        std::ostringstream os;
        os << "escape: |u| exceeded " << cfg.escape_ceiling << " at t = " << s.t;
        throw EscapeError(os.str(), s.t);
    }
}
}  // namespace

Trajectory run_until(const SolverState& state, const EvolutionSpec& spec, const SolverConfig& cfg,
                     const StopPredicate& stop, int sample_every, const StepObserver& observer) {
    Trajectory tr;
    tr.samples.push_back(state);
    if (stop(state)) {
        tr.stopped = true;
        return tr;
    }
    const double dt = cfg.dt;
    SolverState cur = state;
    const int every = std::max(1, sample_every);
    for (long k = 0; k < cfg.max_steps; ++k) {
        SolverState next = step(cur, spec, cfg, dt);
        check_escape(next, cfg);
        if (stop(next)) {
            double lo = 0.0, hi = 1.0;
            const double tol = std::min(dt * dt, cfg.event_tol);
            while ((hi - lo) * dt > tol) {
                const double mid = 0.5 * (lo + hi);
                if (stop(step(cur, spec, cfg, mid * dt)))
                    hi = mid;
                else
                    lo = mid;
            }
            SolverState fin = hi < 1.0 ? step(cur, spec, cfg, hi * dt) : std::move(next);
            if (observer) observer(fin);
            tr.samples.push_back(std::move(fin));
            tr.steps = k + 1;
            tr.stopped = true;
            return tr;
        }
        cur = std::move(next);
        if (observer) observer(cur);
        if ((k + 1) % every == 0) tr.samples.push_back(cur);
    }
    tr.steps = cfg.max_steps;
    throw TimeoutError("run_until: stop predicate not reached within max_steps", cur);
}

SolverState run_to_time(const SolverState& state, const EvolutionSpec& spec, const SolverConfig& cfg,
                        double t_end, const StepObserver& observer) {
    const double span = t_end - state.t;
    if (span <= 0) return state;
    const long nsteps = std::max<long>(1, static_cast<long>(std::ceil(span / cfg.dt - 1e-9)));
    if (nsteps > cfg.max_steps)
        throw TimeoutError("run_to_time: " + std::to_string(nsteps) + " steps exceed max_steps", state);
    const double dt = span / nsteps;
    SolverState cur = state;
    for (long k = 0; k < nsteps; ++k) {
        cur = step(cur, spec, cfg, dt);
        if (k == nsteps - 1) cur.t = t_end;
        check_escape(cur, cfg);
        if (observer) observer(cur);
    }
    return cur;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const std::vector<std::string>& scalar_names) {
    std::ofstream f(path);
    if (!f) throw Error("cannot open " + path);
    f << "time";
    for (const auto& n : scalar_names) f << ',' << n;
    f << ",sup,variance\n";
    f << std::setprecision(17);
    for (const auto& s : traj.samples) {
        f << s.t;
        for (std::size_t i = 0; i < scalar_names.size() && i < 2; ++i) f << ',' << s.scalars[i];
        f << ',' << s.u.sup() << ',' << s.u.variance() << '\n';
    }
}

}  // namespace sp

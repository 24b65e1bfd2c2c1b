#pragma once

#include <string>

#include "slowpassage/grid.hpp"
#include "slowpassage/normal_form.hpp"
#include "slowpassage/pde_solver.hpp"

namespace sp {

// K1: mu_bar = -1 (entry), K2: eps_bar = 1 (rescaling), K3: mu_bar = +1 (exit).
enum class ChartId { K1, K2, K3 };

std::string to_string(ChartId c);

// radial is r1, r2 or r3; slow is eps1, mu2 or eps3.
struct ChartState {
    ChartId chart = ChartId::K1;
    GridFunction u;
    double radial = 0;
    double slow = 0;
    double chart_time = 0;

    ScalarBlock scalars() const { return {radial, slow}; }
};

struct BlownDownState {
    GridFunction u;
    double mu = 0;
    double eps = 0;
};

// (u, mu, eps) = (r u_bar, r^{s-1} mu_bar, r^{2(s-1)} eps_bar), x = x_i / r^{(s-1)/2}.
BlownDownState blow_down(const ChartState& cs, int s);

// Inverse of blow_down for a target chart; radial is taken from the state.
ChartState blow_up(const BlownDownState& bd, ChartId chart, int s);

ChartState change_chart(const ChartState& cs, ChartId target, int s);

// Chart systems after desingularisation, scalars ordered as ChartState::scalars().
EvolutionSpec chart_spec(ChartId chart, const NormalFormModel& model);

// The blown-down system with scalar block (mu, eps).
EvolutionSpec blown_down_spec(const NormalFormModel& model);

// Coefficients c_a of u^a contributed by -u^s and the rescaled remainder in a chart.
std::array<double, 5> chart_reaction(ChartId chart, const NormalFormModel& model, const ScalarBlock& sc);

// dt_i/dt = r^{s-1}.
double desingularized_time_ratio(ChartId chart, double radial, int s);

}  // namespace sp

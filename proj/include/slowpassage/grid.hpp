#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace sp {

// Samples of a function on the uniform grid x_i = -L + i*h, h = 2L/(n-1).
// n is odd so that x = 0 is a node.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(double half_width, int n, std::vector<double> values);
    GridFunction(double half_width, int n, double fill = 0.0);

    static GridFunction sample(double half_width, int n, const std::function<double(double)>& f);

    double half_width() const { return L_; }
    int n() const { return n_; }
    double h() const { return 2.0 * L_ / (n_ - 1); }
    double x(int i) const;
    const std::vector<double>& values() const { return v_; }
    double operator[](int i) const { return v_[i]; }

    bool same_grid(const GridFunction& o) const;
    GridFunction with_values(std::vector<double> v) const;

    double sup() const;
    double mean() const;
    double variance() const;

private:
    double L_ = 1.0;
    int n_ = 0;
    std::vector<double> v_;
};

struct WeightedNormReport {
    double sup_norm = 0.0;
    double y_norm = 0.0;
    double z_norm = 0.0;
};

// First and second derivatives on the grid: second-order central differences in
// the interior and second-order one-sided stencils at the two end points.
std::vector<double> derivative1(const GridFunction& g);
std::vector<double> derivative2(const GridFunction& g);

WeightedNormReport weighted_norms(const GridFunction& g);

// u~(x~) = g(a x~) on [-L/a, L/a] with the same n (cubic interpolation).
GridFunction rescale_space(const GridFunction& g, double a);

// Cubic (Catmull-Rom / Lagrange four-point) interpolation of g at x; clamps to the
// end values outside the domain.
double interpolate(const GridFunction& g, double x);

GridFunction pointwise_product(const GridFunction& g1, const GridFunction& g2);
GridFunction operator-(const GridFunction& a, const GridFunction& b);
GridFunction operator+(const GridFunction& a, const GridFunction& b);
GridFunction operator*(double c, const GridFunction& a);

// One Crank-Nicolson step of u_t = u_xx with homogeneous Neumann conditions.
GridFunction heat_step(const GridFunction& g, double dt);

// Solves a tridiagonal system in place (Thomas algorithm); sub[0] and sup[n-1] unused.
void solve_tridiagonal(const std::vector<double>& sub, const std::vector<double>& diag,
                       const std::vector<double>& sup, std::vector<double>& rhs);

// Equivalence constants for a constant spatial scaling by a.
struct ScalingConstants {
    double lower;
    double upper;
};
// Constants as stated for the scaling norm equivalence: 2*min/max of C_j^{-/+}.
ScalingConstants scaling_constants_stated(double a);
// Constants that follow from the pointwise inequalities of the proof.
ScalingConstants scaling_constants_proof(double a);

void write_csv(std::ostream& os, const GridFunction& g);
void write_csv(const std::string& path, const GridFunction& g);
GridFunction read_csv(std::istream& is);
GridFunction read_csv(const std::string& path);

}  // namespace sp

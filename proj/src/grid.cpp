#include "slowpassage/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "slowpassage/errors.hpp"

namespace sp {

GridFunction::GridFunction(double half_width, int n, std::vector<double> values)
    : L_(half_width), n_(n), v_(std::move(values)) {
    if (!(half_width > 0.0) || !std::isfinite(half_width))
        throw DomainError("GridFunction: half_width must be positive and finite");
    if (n < 8 || n % 2 == 0)
        throw DomainError("GridFunction: n must be odd and >= 8, got " + std::to_string(n));
    if (static_cast<int>(v_.size()) != n)
        throw ShapeError("GridFunction: values size does not match n");
    for (double v : v_)
        if (!std::isfinite(v)) throw DomainError("GridFunction: non-finite value");
}

GridFunction::GridFunction(double half_width, int n, double fill)
    : GridFunction(half_width, n, std::vector<double>(std::max(n, 0), fill)) {}

GridFunction GridFunction::sample(double half_width, int n, const std::function<double(double)>& f) {
    std::vector<double> v(std::max(n, 0));
    const double h = 2.0 * half_width / (n - 1);
    for (int i = 0; i < n; ++i) v[i] = f(-half_width + i * h);
    return GridFunction(half_width, n, std::move(v));
}

double GridFunction::x(int i) const {
    // symmetric evaluation keeps x_{n-1-i} = -x_i exactly
    const int m = (n_ - 1) / 2;
    return (i - m) * h();
}

bool GridFunction::same_grid(const GridFunction& o) const {
    return n_ == o.n_ && std::abs(L_ - o.L_) <= 1e-12 * std::max(1.0, L_);
}

GridFunction GridFunction::with_values(std::vector<double> v) const {
    return GridFunction(L_, n_, std::move(v));
}

double GridFunction::sup() const {
    double m = 0.0;
    for (double v : v_) m = std::max(m, std::abs(v));
    return m;
}

double GridFunction::mean() const {
    double s = 0.0;
    for (double v : v_) s += v;
    return s / n_;
}

double GridFunction::variance() const {
    const double m = mean();
    double s = 0.0;
    for (double v : v_) s += (v - m) * (v - m);
    return s / n_;
}

std::vector<double> derivative1(const GridFunction& g) {
    const int n = g.n();
    const double h = g.h();
    const auto& v = g.values();
    std::vector<double> d(n);
    for (int i = 1; i < n - 1; ++i) d[i] = (v[i + 1] - v[i - 1]) / (2 * h);
    d[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h);
    d[n - 1] = (3 * v[n - 1] - 4 * v[n - 2] + v[n - 3]) / (2 * h);
    return d;
}

std::vector<double> derivative2(const GridFunction& g) {
    const int n = g.n();
    const double h2 = g.h() * g.h();
    const auto& v = g.values();
    std::vector<double> d(n);
    for (int i = 1; i < n - 1; ++i) d[i] = (v[i + 1] - 2 * v[i] + v[i - 1]) / h2;
    d[0] = (2 * v[0] - 5 * v[1] + 4 * v[2] - v[3]) / h2;
    d[n - 1] = (2 * v[n - 1] - 5 * v[n - 2] + 4 * v[n - 3] - v[n - 4]) / h2;
    return d;
}

WeightedNormReport weighted_norms(const GridFunction& g) {
    const auto d1 = derivative1(g);
    const auto d2 = derivative2(g);
    double s0 = 0, s1 = 0, s2 = 0;
    for (int i = 0; i < g.n(); ++i) {
        const double x = g.x(i);
        s0 = std::max(s0, std::abs(g[i]));
        s1 = std::max(s1, (1 + std::abs(x)) * std::abs(d1[i]));
        s2 = std::max(s2, (1 + x * x) * std::abs(d2[i]));
    }
    return {s0, s0 + s1, s0 + s1 + s2};
}

double interpolate(const GridFunction& g, double x) {
    const int n = g.n();
    const double h = g.h();
    const double L = g.half_width();
    if (x <= -L) return g[0];
    if (x >= L) return g[n - 1];
    const double s = (x + L) / h;
    int i = static_cast<int>(std::floor(s));
    double t = s - i;
    if (t < 1e-9) return g[std::clamp(i, 0, n - 1)];
    if (t > 1 - 1e-9) return g[std::clamp(i + 1, 0, n - 1)];
    // four-point Lagrange stencil i-1..i+2, shifted inward at the ends
    int i0 = std::clamp(i - 1, 0, n - 4);
    const double u = s - i0;  // position relative to node i0, in [0,3]
    const double p0 = g[i0], p1 = g[i0 + 1], p2 = g[i0 + 2], p3 = g[i0 + 3];
    const double l0 = -(u - 1) * (u - 2) * (u - 3) / 6.0;
    const double l1 = u * (u - 2) * (u - 3) / 2.0;
    const double l2 = -u * (u - 1) * (u - 3) / 2.0;
    const double l3 = u * (u - 1) * (u - 2) / 6.0;
    return l0 * p0 + l1 * p1 + l2 * p2 + l3 * p3;
}

GridFunction rescale_space(const GridFunction& g, double a) {
    if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("rescale_space: scale factor must be positive");
    if (a == 1.0) return g;
    const double Lt = g.half_width() / a;
    std::vector<double> v(g.n());
    const double ht = 2 * Lt / (g.n() - 1);
    const int m = (g.n() - 1) / 2;
    for (int j = 0; j < g.n(); ++j) v[j] = interpolate(g, a * ((j - m) * ht));
    return GridFunction(Lt, g.n(), std::move(v));
}

GridFunction pointwise_product(const GridFunction& g1, const GridFunction& g2) {
    if (!g1.same_grid(g2)) throw ShapeError("pointwise_product: grids differ");
    std::vector<double> v(g1.n());
    for (int i = 0; i < g1.n(); ++i) v[i] = g1[i] * g2[i];
    return g1.with_values(std::move(v));
}

GridFunction operator-(const GridFunction& a, const GridFunction& b) {
    if (!a.same_grid(b)) throw ShapeError("difference of functions on different grids");
    std::vector<double> v(a.n());
    for (int i = 0; i < a.n(); ++i) v[i] = a[i] - b[i];
    return a.with_values(std::move(v));
}

GridFunction operator+(const GridFunction& a, const GridFunction& b) {
    if (!a.same_grid(b)) throw ShapeError("sum of functions on different grids");
    std::vector<double> v(a.n());
    for (int i = 0; i < a.n(); ++i) v[i] = a[i] + b[i];
    return a.with_values(std::move(v));
}

GridFunction operator*(double c, const GridFunction& a) {
    std::vector<double> v(a.values());
    for (double& x : v) x *= c;
    return a.with_values(std::move(v));
}

void solve_tridiagonal(const std::vector<double>& sub, const std::vector<double>& diag,
                       const std::vector<double>& sup, std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    std::vector<double> c(n);
    double beta = diag[0];
    rhs[0] /= beta;
    for (std::size_t i = 1; i < n; ++i) {
        c[i] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * c[i];
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i + 1] * rhs[i + 1];
}

GridFunction heat_step(const GridFunction& g, double dt) {
    if (!(dt > 0.0)) throw DomainError("heat_step: dt must be positive");
    const int n = g.n();
    const double r = 0.5 * dt / (g.h() * g.h());
    const auto& u = g.values();
    std::vector<double> rhs(n), sub(n, -r), dia(n, 1 + 2 * r), sup(n, -r);
    // Neumann via mirrored ghost node: row 0 couples to node 1 with weight 2
    sup[0] = -2 * r;
    sub[n - 1] = -2 * r;
    rhs[0] = (1 - 2 * r) * u[0] + 2 * r * u[1];
    rhs[n - 1] = (1 - 2 * r) * u[n - 1] + 2 * r * u[n - 2];
    for (int i = 1; i < n - 1; ++i) rhs[i] = r * u[i - 1] + (1 - 2 * r) * u[i] + r * u[i + 1];
    solve_tridiagonal(sub, dia, sup, rhs);
    return g.with_values(std::move(rhs));
}

ScalingConstants scaling_constants_stated(double a) {
    const double c1m = std::min(1.0, 1 / a), c2m = std::min(1.0, 1 / (a * a));
    const double c1p = std::max(1.0, 1 / a), c2p = std::max(1.0, 1 / (a * a));
    return {2 * std::min(c1m, c2m), 2 * std::max(c1p, c2p)};
}

ScalingConstants scaling_constants_proof(double a) {
    const double c1m = std::min(1.0, 1 / a), c2m = std::min(1.0, 1 / (a * a));
    const double c1p = std::max(1.0, 1 / a), c2p = std::max(1.0, 1 / (a * a));
    return {std::min(c1m, c2m), std::max(c1p, c2p)};
}

void write_csv(std::ostream& os, const GridFunction& g) {
    os << "# half_width=" << std::setprecision(17) << g.half_width() << " n=" << g.n() << "\n";
    os << "x,value\n";
    for (int i = 0; i < g.n(); ++i) os << std::setprecision(17) << g.x(i) << ',' << g[i] << '\n';
}

void write_csv(const std::string& path, const GridFunction& g) {
    std::ofstream f(path);
    if (!f) throw Error("cannot open " + path + " for writing");
    write_csv(f, g);
}

GridFunction read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# half_width=", 0) != 0)
        throw Error("read_csv: missing metadata row");
    double L = 0;
    int n = 0;
    if (std::sscanf(line.c_str(), "# half_width=%lf n=%d", &L, &n) != 2) throw Error("read_csv: bad metadata row");
    std::getline(is, line);  // column header
    std::vector<double> v;
    v.reserve(n);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw Error("read_csv: malformed row");
        v.push_back(std::stod(line.substr(comma + 1)));
    }
    return GridFunction(L, n, std::move(v));
}

GridFunction read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open " + path);
    return read_csv(f);
}

}  // namespace sp

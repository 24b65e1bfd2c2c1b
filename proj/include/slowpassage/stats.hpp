#pragma once

#include <vector>

namespace sp {

struct LinearFit {
    double slope = 0;
    double intercept = 0;
    double r_squared = 0;
};

// Ordinary least squares y = slope * x + intercept; needs at least two distinct x.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace sp

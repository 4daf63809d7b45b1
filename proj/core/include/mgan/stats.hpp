#pragma once

#include <vector>

namespace mgan::stats {

// Spearman rank correlation with average ranks for ties.
double spearman_rho(const std::vector<float>& x, const std::vector<float>& y);

// Two-sided p-value of rho under the t-distribution approximation
// t = rho * sqrt((n-2)/(1-rho^2)) with n-2 degrees of freedom.
double spearman_p_value(double rho, std::size_t n);

// Regularized incomplete beta function I_x(a,b) (continued fraction).
double incomplete_beta(double a, double b, double x);

}  // namespace mgan::stats

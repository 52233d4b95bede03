#pragma once

#include <utility>
#include <vector>

namespace blockmix::math {

/// Moments of a Normal-Inverse-Gamma variational factor
///   sigma^2 ~ IG(g/2, h/2),  mu | sigma^2 ~ N(u, sigma^2 / r).
struct NigExpectations {
  double inv_var;          // E[1/sigma^2]
  double mean_over_var;    // E[mu/sigma^2]
  double meansq_over_var;  // E[mu^2/sigma^2]
  double log_var;          // E[log sigma^2]
};

/// psi(x) for x > 0. Throws std::domain_error otherwise.
double digamma(double x);

/// ln Gamma(x) for x > 0. Throws std::domain_error otherwise.
double log_gamma(double x);

/// E[log p_s] under Dir(t): psi(t_s) - psi(sum t).
std::vector<double> dirichlet_expected_log(const std::vector<double>& t);

/// (E[log w], E[log(1-w)]) under Beta(e, f).
std::pair<double, double> beta_expected_logs(double e, double f);

NigExpectations nig_expectations(double u, double r, double g, double h);

}  // namespace blockmix::math

#include "blockmix/math.hpp"

#include <cmath>
#include <stdexcept>

namespace blockmix::math {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

void require_positive(double x, const char* fn) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::domain_error(std::string(fn) + ": argument must be positive and finite");
  }
}

}  // namespace

double digamma(double x) {
  require_positive(x, "digamma");
  // Shift to x >= 10, then asymptotic series.
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli-number series: psi(x) ~ ln x - 1/(2x) - sum B_2n / (2n x^2n).
  double series = inv2 * (1.0 / 12.0 -
                  inv2 * (1.0 / 120.0 -
                  inv2 * (1.0 / 252.0 -
                  inv2 * (1.0 / 240.0 -
                  inv2 * (1.0 / 132.0 -
                  inv2 * (691.0 / 32760.0 -
                  inv2 * (1.0 / 12.0)))))));
  return acc + std::log(x) - 0.5 * inv - series;
}

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  double acc = 0.0;
  while (x < 10.0) {
    acc -= std::log(x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = inv * (1.0 / 12.0 -
                  inv2 * (1.0 / 360.0 -
                  inv2 * (1.0 / 1260.0 -
                  inv2 * (1.0 / 1680.0 -
                  inv2 * (1.0 / 1188.0 -
                  inv2 * (691.0 / 360360.0 -
                  inv2 * (1.0 / 156.0)))))));
  return acc + (x - 0.5) * std::log(x) - x + kHalfLog2Pi + series;
}

std::vector<double> dirichlet_expected_log(const std::vector<double>& t) {
  if (t.empty()) {
    throw std::domain_error("dirichlet_expected_log: empty parameter vector");
  }
  double total = 0.0;
  for (double v : t) {
    require_positive(v, "dirichlet_expected_log");
    total += v;
  }
  const double psi_total = digamma(total);
  std::vector<double> out(t.size());
  for (std::size_t s = 0; s < t.size(); ++s) {
    out[s] = digamma(t[s]) - psi_total;
  }
  return out;
}

std::pair<double, double> beta_expected_logs(double e, double f) {
  require_positive(e, "beta_expected_logs");
  require_positive(f, "beta_expected_logs");
  const double psi_sum = digamma(e + f);
  return {digamma(e) - psi_sum, digamma(f) - psi_sum};
}

NigExpectations nig_expectations(double u, double r, double g, double h) {
  require_positive(r, "nig_expectations");
  require_positive(g, "nig_expectations");
  require_positive(h, "nig_expectations");
  if (!std::isfinite(u)) {
    throw std::domain_error("nig_expectations: non-finite location");
  }
  NigExpectations m;
  m.inv_var = g / h;
  m.mean_over_var = u * m.inv_var;
  m.meansq_over_var = u * u * m.inv_var + 1.0 / r;
  m.log_var = std::log(h / 2.0) - digamma(g / 2.0);
  return m;
}

}  // namespace blockmix::math

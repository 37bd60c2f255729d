#pragma once

#include <cmath>

#include "crn/errors.hpp"

namespace crn {

// Smoothing width of the softplus surrogate for max(x, 0).
// epsilon == 0 selects the hard limit G_0(x) = max(x, 0).
struct SmoothingParam {
  double epsilon = 0.1;

  void validate_nonneg() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
      throw InvalidInputError("smoothing epsilon must be finite and >= 0");
  }
  void validate_pos() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
      throw InvalidInputError("smoothing epsilon must be finite and > 0");
  }
};

namespace detail {

// log(1 + e^u) without overflow: equals max(u,0) + log1p(e^{-|u|}).
inline double log1p_exp(double u) {
  return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u)));
}

inline double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

// Below this, ln(ln(1+e^u)) switches to its asymptotic expansion
// u + log1p(-e^u/2); the truncation error is O(e^{2u}).
constexpr double kDeepNegative = -30.0;

}  // namespace detail

// G_eps(x) = eps * ln(1 + e^{x/eps}); G_0(x) = max(x, 0).
inline double g_eps(double x, SmoothingParam eps) {
  eps.validate_nonneg();
  if (eps.epsilon == 0.0) return std::max(x, 0.0);
  return eps.epsilon * detail::log1p_exp(x / eps.epsilon);
}

// G'_eps(x) = e^{x/eps} / (1 + e^{x/eps}), in (0, 1).
inline double g_eps_prime(double x, SmoothingParam eps) {
  eps.validate_pos();
  return detail::sigmoid(x / eps.epsilon);
}

// G''_eps(x) = (1/eps) e^{x/eps} / (1 + e^{x/eps})^2, positive everywhere.
inline double g_eps_double_prime(double x, SmoothingParam eps) {
  eps.validate_pos();
  const double e = std::exp(-std::abs(x / eps.epsilon));
  const double q = 1.0 + e;
  return e / (q * q) / eps.epsilon;
}

// ln G_eps(x). For deeply negative x/eps this evaluates the expansion
// ln eps + x/eps + ln(1 - e^{x/eps}/2 + ...) in log space, so it stays
// finite for every finite input.
inline double ln_g_eps(double x, SmoothingParam eps) {
  eps.validate_pos();
  const double u = x / eps.epsilon;
  if (u < detail::kDeepNegative)
    return std::log(eps.epsilon) + u + std::log1p(-0.5 * std::exp(u));
  return std::log(eps.epsilon * detail::log1p_exp(u));
}

// (ln G_eps)'(x) = G'_eps(x) / G_eps(x).
inline double ln_g_eps_prime(double x, SmoothingParam eps) {
  eps.validate_pos();
  const double u = x / eps.epsilon;
  if (u < detail::kDeepNegative)
    return (1.0 - 0.5 * std::exp(u)) / eps.epsilon;
  return detail::sigmoid(u) / (eps.epsilon * detail::log1p_exp(u));
}

// (ln G_eps)''(x); negative for all x, tends to -1/x^2 for large x > 0
// and to 0 from below as x -> -inf.
inline double ln_g_eps_double_prime(double x, SmoothingParam eps) {
  eps.validate_pos();
  const double u = x / eps.epsilon;
  const double inv_eps2 = 1.0 / (eps.epsilon * eps.epsilon);
  if (u < detail::kDeepNegative) return -0.5 * std::exp(u) * inv_eps2;
  const double s = detail::sigmoid(u);
  const double one_minus_s = detail::sigmoid(-u);
  const double l1p = detail::log1p_exp(u);
  return inv_eps2 * (s / l1p) * (one_minus_s - s / l1p);
}

}  // namespace crn

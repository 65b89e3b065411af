#pragma once

// Co-occurrence proximity measures: PMI, NGD and the PMING blend of the two,
// plus the per-context normalization constants PMING needs.
//
// All functions are pure; logs are base 2 for PMI (NGD is a ratio of logs and
// does not depend on the base).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "cqe/error.hpp"

namespace cqe {

// Document counts for one term pair.
struct hit_counts {
  std::uint64_t f_x = 0;   // documents containing x
  std::uint64_t f_y = 0;   // documents containing y
  std::uint64_t f_xy = 0;  // documents containing x AND y
  std::uint64_t M = 1;     // documents indexed

  friend bool operator==(const hit_counts&, const hit_counts&) = default;
};

inline std::string to_string(const hit_counts& h) {
  return "(f_x=" + std::to_string(h.f_x) + ", f_y=" + std::to_string(h.f_y) +
         ", f_xy=" + std::to_string(h.f_xy) + ", M=" + std::to_string(h.M) +
         ")";
}

inline void validate(const hit_counts& h) {
  if (h.M < 1) throw domain_error("invalid hit counts: M must be >= 1");
  if (h.f_x > h.M || h.f_y > h.M)
    throw domain_error("invalid hit counts: f exceeds M " + to_string(h));
  if (h.f_xy > std::min(h.f_x, h.f_y))
    throw domain_error("invalid hit counts: f_xy exceeds min(f_x, f_y) " +
                       to_string(h));
}

// Returns the counts reordered so that f_x >= f_y.
inline hit_counts ordered(hit_counts h) noexcept {
  if (h.f_x < h.f_y) std::swap(h.f_x, h.f_y);
  return h;
}

// PMI of a pair with f_xy = 0.
inline constexpr double pmi_never_cooccur = -std::numeric_limits<double>::infinity();
// NGD of a pair with f_xy = 0.
inline constexpr double ngd_unrelated = std::numeric_limits<double>::infinity();

inline constexpr double default_rho = 0.3;
inline constexpr double default_epsilon = 1e-6;

namespace detail {

using wide = __int128;

// log(a / b) for a, b > 0, accurate to a few ulps even when a / b is close to
// 1 (log1p of the exact difference) or close to 0.
inline double log_ratio(wide a, wide b) {
  const wide diff = a - b;
  const double z = static_cast<double>(diff) / static_cast<double>(b);
  if (z > -0.5) return std::log1p(z);
  return std::log(static_cast<double>(a) / static_cast<double>(b));
}

inline void require_known(const hit_counts& h) {
  if (h.f_x == 0 || h.f_y == 0) throw domain_error("unknown term");
}

}  // namespace detail

// log2( f_xy * M / (f_x * f_y) ). Zero under independence, negative when the
// terms avoid each other, pmi_never_cooccur when f_xy = 0.
inline double pmi(const hit_counts& h) {
  validate(h);
  detail::require_known(h);
  if (h.f_xy == 0) return pmi_never_cooccur;
  const detail::wide joint = detail::wide(h.f_xy) * detail::wide(h.M);
  const detail::wide indep = detail::wide(h.f_x) * detail::wide(h.f_y);
  return detail::log_ratio(joint, indep) / std::numbers::ln2;
}

// (max{log f_x, log f_y} - log f_xy) / (log M - min{log f_x, log f_y}).
// Symmetric; 0 when both terms always occur together; ngd_unrelated when
// f_xy = 0.
inline double ngd(const hit_counts& raw) {
  validate(raw);
  detail::require_known(raw);
  const hit_counts h = ordered(raw);
  if (h.M <= h.f_x) throw domain_error("M too small " + to_string(raw));
  if (h.f_xy == 0) return ngd_unrelated;
  const double num = detail::log_ratio(h.f_x, h.f_xy);
  const double den = detail::log_ratio(h.M, h.f_y);
  return num / den;
}

// Local normalization state for one context W.
struct context_norms_t {
  double mu1 = 1.0;  // max PMI over W, floored at epsilon
  double mu2 = 1.0;  // max NGD over W, floored at epsilon
  double rho = default_rho;
  double epsilon = default_epsilon;
  std::optional<hit_counts> mu1_pair;  // the pair attaining mu1, if any
};

inline void validate(const context_norms_t& n) {
  if (!(n.rho >= 0.0 && n.rho <= 1.0))
    throw domain_error("rho must lie in [0, 1]");
  if (!(n.epsilon > 0.0)) throw domain_error("epsilon must be positive");
  if (!(n.mu1 >= n.epsilon) || !(n.mu2 >= n.epsilon))
    throw domain_error("mu1 and mu2 must be >= epsilon");
}

// mu1 = max PMI and mu2 = max NGD over the pairs of a context. Pairs that
// never co-occur carry no finite PMI/NGD and are left out of both maxima.
inline context_norms_t context_norms(std::span<const hit_counts> pairs,
                                     double rho = default_rho,
                                     double epsilon = default_epsilon) {
  if (pairs.empty()) throw domain_error("empty context");
  context_norms_t n;
  n.rho = rho;
  n.epsilon = epsilon;
  n.mu1 = epsilon;
  n.mu2 = epsilon;
  for (const auto& h : pairs) {
    const double p = pmi(h);
    const double d = ngd(h);
    if (h.f_xy == 0) continue;
    if (p > n.mu1) {
      n.mu1 = p;
      n.mu1_pair = h;
    }
    n.mu2 = std::max(n.mu2, d);
  }
  validate(n);
  return n;
}

inline double pming_from_components(double pmi_val, double ngd_val,
                                    const context_norms_t& norms) {
  validate(norms);
  const double v = norms.rho * (1.0 - pmi_val / norms.mu1) +
                   (1.0 - norms.rho) * (ngd_val / norms.mu2);
  if (std::isnan(v)) return 1.0;
  return std::clamp(v, 0.0, 1.0);
}

namespace detail {

// mu1 - PMI(h) when mu1 comes from pair a of the same context, as one log of
// exact integer products. Avoids cancelling two rounded PMIs when h is
// nearly as associated as a.
inline std::optional<double> pmi_gap(const hit_counts& a, const hit_counts& h) {
  constexpr std::uint64_t limit = std::uint64_t{1} << 42;  // keeps 3-way products in 128 bits
  if (a.M != h.M || h.M >= limit) return std::nullopt;
  const wide num = wide(a.f_xy) * wide(h.f_x) * wide(h.f_y);
  const wide den = wide(a.f_x) * wide(a.f_y) * wide(h.f_xy);
  return log_ratio(num, den) / std::numbers::ln2;
}

}  // namespace detail

// PMING distance in [0, 1]; 1.0 for pairs that never co-occur.
inline double pming(const hit_counts& h, const context_norms_t& norms) {
  const hit_counts o = ordered(h);
  const double p = pmi(o);
  const double d = ngd(o);
  if (o.f_xy == 0) return 1.0;
  if (norms.mu1_pair) {
    if (const auto gap = detail::pmi_gap(*norms.mu1_pair, o)) {
      validate(norms);
      const double v = norms.rho * (*gap / norms.mu1) + (1.0 - norms.rho) * (d / norms.mu2);
      return std::clamp(v, 0.0, 1.0);
    }
  }
  return pming_from_components(p, d, norms);
}

}  // namespace cqe

#pragma once

// Test-only oracles. Nothing here calls into the library's numeric or
// indexing code: measures are evaluated straight from their formulas in
// 256-bit MPFR arithmetic, and corpus statistics by scanning raw text.

#include <mpfr.h>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cqe/corpus_index.hpp"
#include "cqe/measures.hpp"

namespace oracle {

class big {
 public:
  big() { mpfr_init2(v_, 256); mpfr_set_zero(v_, 1); }
  explicit big(double d) : big() { mpfr_set_d(v_, d, MPFR_RNDN); }
  static big from_u64(std::uint64_t n) {
    big b;
    mpfr_set_uj(b.v_, n, MPFR_RNDN);
    return b;
  }
  big(const big& o) : big() { mpfr_set(v_, o.v_, MPFR_RNDN); }
  big& operator=(const big& o) { mpfr_set(v_, o.v_, MPFR_RNDN); return *this; }
  ~big() { mpfr_clear(v_); }

  friend big operator+(const big& a, const big& b) { big r; mpfr_add(r.v_, a.v_, b.v_, MPFR_RNDN); return r; }
  friend big operator-(const big& a, const big& b) { big r; mpfr_sub(r.v_, a.v_, b.v_, MPFR_RNDN); return r; }
  friend big operator*(const big& a, const big& b) { big r; mpfr_mul(r.v_, a.v_, b.v_, MPFR_RNDN); return r; }
  friend big operator/(const big& a, const big& b) { big r; mpfr_div(r.v_, a.v_, b.v_, MPFR_RNDN); return r; }
  friend big log2(const big& a) { big r; mpfr_log2(r.v_, a.v_, MPFR_RNDN); return r; }
  friend big ln(const big& a) { big r; mpfr_log(r.v_, a.v_, MPFR_RNDN); return r; }
  friend big max(const big& a, const big& b) { return mpfr_cmp(a.v_, b.v_) >= 0 ? a : b; }
  friend big min(const big& a, const big& b) { return mpfr_cmp(a.v_, b.v_) <= 0 ? a : b; }
  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }

 private:
  mpfr_t v_;
};

// log2( P(x,y) / (P(x) P(y)) ) with P(.) = f(.) / M, i.e. log2(f_xy M / (f_x f_y)).
// The products are exact at this precision, so the ratio is rounded once.
inline big pmi_big(const cqe::hit_counts& h) {
  const auto num = big::from_u64(h.f_xy) * big::from_u64(h.M);
  const auto den = big::from_u64(h.f_x) * big::from_u64(h.f_y);
  return log2(num / den);
}

// (max{ln f(x), ln f(y)} - ln f(x,y)) / (ln M - min{ln f(x), ln f(y)}).
inline big ngd_big(const cqe::hit_counts& h) {
  const auto lx = ln(big::from_u64(h.f_x));
  const auto ly = ln(big::from_u64(h.f_y));
  const auto num = max(lx, ly) - ln(big::from_u64(h.f_xy));
  const auto den = ln(big::from_u64(h.M)) - min(lx, ly);
  return num / den;
}

inline double pmi(const cqe::hit_counts& h) { return pmi_big(h).to_double(); }
inline double ngd(const cqe::hit_counts& h) { return ngd_big(h).to_double(); }

inline double pming(const cqe::hit_counts& h, const big& mu1, const big& mu2, double rho) {
  if (h.f_xy == 0) return 1.0;
  const auto one = big(1.0);
  const auto v = big(rho) * (one - pmi_big(h) / mu1) + (one - big(rho)) * (ngd_big(h) / mu2);
  return std::clamp(v.to_double(), 0.0, 1.0);
}

inline double pming(const cqe::hit_counts& h, double mu1, double mu2, double rho) {
  return pming(h, big(mu1), big(mu2), rho);
}

// Distances for a whole context, with the norms (largest PMI and NGD over
// co-occurring pairs, floored at epsilon) also derived at full precision.
inline std::vector<double> pming_context(const std::vector<cqe::hit_counts>& ctx, double rho,
                                         double epsilon) {
  big mu1(epsilon), mu2(epsilon);
  for (const auto& h : ctx)
    if (h.f_xy > 0) {
      mu1 = max(mu1, pmi_big(h));
      mu2 = max(mu2, ngd_big(h));
    }
  std::vector<double> out;
  for (const auto& h : ctx) out.push_back(pming(h, mu1, mu2, rho));
  return out;
}

// Independent lowercase/alnum tokenizer for ASCII test corpora.
inline std::set<std::string> token_set(const std::string& text) {
  std::set<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.insert(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.insert(cur);
  return out;
}

// Documents whose token set contains every token of every term.
inline std::uint64_t scan_count(const std::vector<cqe::doc_record>& docs,
                                const std::vector<std::string>& terms) {
  std::set<std::string> need;
  for (const auto& t : terms)
    for (const auto& tok : token_set(t)) need.insert(tok);
  if (need.empty()) return 0;
  std::uint64_t n = 0;
  for (const auto& d : docs) {
    const auto have = token_set(d.text);
    if (std::includes(have.begin(), have.end(), need.begin(), need.end())) ++n;
  }
  return n;
}

inline double scan_cond_prob(const std::vector<cqe::doc_record>& docs,
                             const std::string& target,
                             const std::vector<std::string>& given) {
  auto joint = given;
  joint.push_back(target);
  return static_cast<double>(scan_count(docs, joint)) /
         static_cast<double>(scan_count(docs, given));
}

// Every distinct token in the corpus.
inline std::set<std::string> scan_vocabulary(const std::vector<cqe::doc_record>& docs) {
  std::set<std::string> v;
  for (const auto& d : docs)
    for (const auto& t : token_set(d.text)) v.insert(t);
  return v;
}

// Random corpus: `docs` documents drawn from a Zipf-ish vocabulary of
// `vocab` words, with mixed case and punctuation to exercise tokenization.
inline std::vector<cqe::doc_record> synthetic_corpus(std::uint32_t seed, std::size_t docs,
                                                     std::size_t vocab = 40) {
  std::mt19937 rng(seed);
  std::vector<double> weights;
  for (std::size_t i = 0; i < vocab; ++i) weights.push_back(1.0 / static_cast<double>(i + 1));
  std::discrete_distribution<std::size_t> word(weights.begin(), weights.end());
  std::uniform_int_distribution<int> len(1, 12);
  std::uniform_int_distribution<int> coin(0, 9);
  const char* seps[] = {" ", "  ", ", ", ". ", "-", "!\n"};
  std::vector<cqe::doc_record> out;
  for (std::size_t d = 0; d < docs; ++d) {
    std::string text;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
      std::string w = "w" + std::to_string(word(rng));
      if (coin(rng) == 0) w[0] = 'W';
      text += w;
      text += seps[static_cast<std::size_t>(coin(rng)) % 6];
    }
    out.push_back({"doc" + std::to_string(d), text});
  }
  return out;
}

// Random consistent counts with f_xy <= min(f_x, f_y) <= max <= M <= max_m.
inline cqe::hit_counts random_counts(std::mt19937_64& rng, std::uint64_t max_m) {
  auto uniform = [&](std::uint64_t lo, std::uint64_t hi) {
    return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
  };
  // Log-uniform sizes so small and large magnitudes both show up.
  auto log_uniform = [&](std::uint64_t lo, std::uint64_t hi) {
    std::uniform_real_distribution<double> u(std::log(double(lo)), std::log(double(hi) + 1));
    return std::clamp<std::uint64_t>(static_cast<std::uint64_t>(std::exp(u(rng))), lo, hi);
  };
  cqe::hit_counts h;
  h.M = log_uniform(2, max_m);
  h.f_x = log_uniform(1, h.M - 1);
  h.f_y = log_uniform(1, h.M - 1);
  const auto cap = std::min(h.f_x, h.f_y);
  h.f_xy = uniform(0, 9) == 0 ? 0 : log_uniform(1, cap);
  return h;
}

// A context as the ranker sees it: one seed count against n candidates, all
// drawn from the same M.
inline std::vector<cqe::hit_counts> random_context(std::mt19937_64& rng, std::uint64_t max_m,
                                                   std::size_t n) {
  cqe::hit_counts first;
  do first = random_counts(rng, max_m);
  while (first.M <= std::max(first.f_x, first.f_y));
  std::vector<cqe::hit_counts> out{first};
  while (out.size() < n) {
    auto h = random_counts(rng, first.M);
    if (h.M != first.M) h.M = first.M;
    h.f_x = first.f_x;
    h.f_xy = std::min(h.f_xy, std::min(h.f_x, h.f_y));
    if (h.M <= std::max(h.f_x, h.f_y)) continue;
    out.push_back(h);
  }
  return out;
}

}  // namespace oracle

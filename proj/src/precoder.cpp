#include "rsma/precoder.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "rsma/csit.hpp"
#include "rsma/model.hpp"

namespace rsma {
namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr int kMaxQosPhases = 8;
constexpr double kQosTol = 1e-3;       // bps/Hz slack on the floor
constexpr double kPenaltyBase = 16.0;  // first-phase penalty weight scale

using Cvec = CVec<double>;
using Cmat = CMat<double>;
using Rvec = RVec<double>;

// ---------------------------------------------------------------------------
// Small Hermitian eigendecomposition (ascending eigenvalues).

struct EigH {
  Rvec d;
  Cmat U;
};

EigH eig_herm(const Cmat& A) {
  const Eigen::Index n = A.rows();
  EigH e;
  if (n == 2) {
    const double a = A(0, 0).real();
    const double c = A(1, 1).real();
    const std::complex<double> b = A(0, 1);
    const double mean = 0.5 * (a + c);
    const double delta = 0.5 * (a - c);
    const double r = std::sqrt(delta * delta + std::norm(b));
    e.d.resize(2);
    e.d << mean - r, mean + r;
    e.U.resize(2, 2);
    const double scale = std::abs(a) + std::abs(c) + std::abs(b);
    if (r <= 1e-15 * (scale + 1e-300)) {
      e.U.setIdentity();
      return e;
    }
    Cvec v(2);
    if (std::abs(b) > 1e-18 * (scale + 1e-300)) {
      v << b, std::complex<double>(e.d[1] - a, 0.0);
    } else {
      v = (a >= c) ? Cvec{{1.0, 0.0}} : Cvec{{0.0, 1.0}};
    }
    v.normalize();
    e.U.col(1) = v;
    e.U(0, 0) = -std::conj(v[1]);
    e.U(1, 0) = std::conj(v[0]);
    return e;
  }
  Eigen::SelfAdjointEigenSolver<Cmat> es(A);
  e.d = es.eigenvalues();
  e.U = es.eigenvectors();
  return e;
}

// ---------------------------------------------------------------------------
// Flattened conditional samples.

struct Samples {
  Cmat H;  // num_tx x (S*K); column m*K + k is user k's channel in sample m
  Rvec noise;
  int S = 0, K = 0, M = 0;
};

Samples flatten(const std::vector<ChannelSetd>& draws) {
  Samples s;
  s.S = static_cast<int>(draws.size());
  s.K = static_cast<int>(draws.front().num_users());
  s.M = static_cast<int>(draws.front().num_tx());
  s.H.resize(s.M, static_cast<Eigen::Index>(s.S) * s.K);
  for (int m = 0; m < s.S; ++m) s.H.middleCols(static_cast<Eigen::Index>(m) * s.K, s.K) = draws[m].true_channels;
  s.noise = draws.front().noise_vars;
  return s;
}

struct Slots {
  bool common = true;
  std::vector<char> priv;  // per-user private slot active
};

struct Weights {
  double common = 1.0;
  Rvec priv;
};

// ---------------------------------------------------------------------------
// Exact weighted objective: w_c * min_k mean log2(1+g_ck) + sum w_k mean log2(1+g_k).

struct Eval {
  double j = 0;
  Rvec rc, rp;  // per-user averaged common/private rates
  double min_rc = 0;

  [[nodiscard]] double plain_sum(bool common_active) const {
    return (common_active ? min_rc : 0.0) + rp.sum();
  }
};

Eval evaluate(const Samples& s, const Cvec& pc, const Cmat& pk, const Weights& w,
              const Slots& slots) {
  Eval ev;
  ev.rc = Rvec::Zero(s.K);
  ev.rp = Rvec::Zero(s.K);
  Cmat all(s.M, s.K + 1);
  all.col(0) = pc;
  all.rightCols(s.K) = pk;
  Cmat G(s.K, s.K + 1);
  for (int m = 0; m < s.S; ++m) {
    G.noalias() = s.H.middleCols(static_cast<Eigen::Index>(m) * s.K, s.K).adjoint() * all;
    for (int k = 0; k < s.K; ++k) {
      double sum_priv = 0;
      for (int i = 0; i < s.K; ++i) sum_priv += std::norm(G(k, 1 + i));
      const double sig = s.noise[k];
      const double own = std::norm(G(k, 1 + k));
      ev.rc[k] += std::log2(1.0 + std::norm(G(k, 0)) / (sum_priv + sig));
      ev.rp[k] += std::log2(1.0 + own / (sum_priv - own + sig));
    }
  }
  ev.rc /= double(s.S);
  ev.rp /= double(s.S);
  ev.min_rc = ev.rc.minCoeff();
  ev.j = (slots.common ? w.common * ev.min_rc : 0.0);
  for (int k = 0; k < s.K; ++k) ev.j += w.priv[k] * ev.rp[k];
  return ev;
}

// ---------------------------------------------------------------------------
// Concave quadratic surrogate coefficients (rate-MMSE minorants at the
// current precoders). Per user k the common-stream surrogate is
//   q_ck(p) = k0[k] + 2 Re{V[k]^H p_c} - sum_s p_s^H A[k] p_s,
// globally tight at the expansion point. Private-stream terms are aggregated
// directly into B (quadratic, all private slots) and v[k] (linear, own slot)
// with the QoS weights folded in.

struct Coeffs {
  std::vector<Cmat> A;
  std::vector<Cvec> V;
  Rvec k0;
  Cmat B;
  std::vector<Cvec> v;
  bool common_live = false;
};

Coeffs accumulate(const Samples& s, const Cvec& pc, const Cmat& pk, const Weights& w,
                  const Slots& slots) {
  Coeffs co;
  co.common_live = slots.common && pc.squaredNorm() > 0;
  co.A.assign(s.K, Cmat::Zero(s.M, s.M));
  co.V.assign(s.K, Cvec::Zero(s.M));
  co.k0 = Rvec::Zero(s.K);
  co.B = Cmat::Zero(s.M, s.M);
  co.v.assign(s.K, Cvec::Zero(s.M));

  Cmat all(s.M, s.K + 1);
  all.col(0) = pc;
  all.rightCols(s.K) = pk;
  Cmat G(s.K, s.K + 1);
  const double inv_s = 1.0 / double(s.S);

  for (int m = 0; m < s.S; ++m) {
    const auto Hm = s.H.middleCols(static_cast<Eigen::Index>(m) * s.K, s.K);
    G.noalias() = Hm.adjoint() * all;
    for (int k = 0; k < s.K; ++k) {
      const auto h = Hm.col(k);
      double sum_priv = 0;
      for (int i = 0; i < s.K; ++i) sum_priv += std::norm(G(k, 1 + i));
      const double sig = s.noise[k];

      if (co.common_live) {
        const std::complex<double> uc = G(k, 0);
        const double tc = std::norm(uc) + sum_priv + sig;
        const double ec = (sum_priv + sig) / tc;  // MMSE of the common decode
        const std::complex<double> gc = uc / tc;
        const double c0 = inv_s / (ec * kLn2);
        co.A[k].noalias() += (c0 * std::norm(gc)) * (h * h.adjoint());
        co.V[k].noalias() += (c0 * gc) * h;
        co.k0[k] += (1.0 - std::log(ec)) * inv_s / kLn2 - c0 * (std::norm(gc) * sig + 1.0);
      }

      if (slots.priv[k]) {
        const std::complex<double> up = G(k, 1 + k);
        const double tp = sum_priv + sig;
        const double ep = (tp - std::norm(up)) / tp;
        const std::complex<double> gp = up / tp;
        const double b0 = w.priv[k] * inv_s / (ep * kLn2);
        co.B.noalias() += (b0 * std::norm(gp)) * (h * h.adjoint());
        co.v[k].noalias() += (b0 * gp) * h;
      }
    }
  }
  return co;
}

// ---------------------------------------------------------------------------
// Power-constrained quadratic maximization: maximize
//   sum_s 2 Re{v_s^H p_s} - p_s^H M_s p_s   s.t.  sum_s ||p_s||^2 <= P.
// Solved exactly through the eigenbasis of each slot matrix with a Newton/
// bisection search on the power multiplier eta.

struct SlotBasis {
  EigH eig;
  Cvec ut;  // U^H v
};

double slot_power(const SlotBasis& b, double eta) {
  double p = 0;
  for (Eigen::Index i = 0; i < b.ut.size(); ++i) {
    const double den = std::max(b.eig.d[i], 0.0) + eta;
    const double u2 = std::norm(b.ut[i]);
    if (u2 == 0.0) continue;
    if (den < 1e-280) return std::numeric_limits<double>::infinity();
    p += u2 / (den * den);
  }
  return p;
}

double slot_power_deriv(const SlotBasis& b, double eta) {
  double p = 0;
  for (Eigen::Index i = 0; i < b.ut.size(); ++i) {
    const double den = std::max(b.eig.d[i], 0.0) + eta;
    const double u2 = std::norm(b.ut[i]);
    if (u2 == 0.0) continue;
    p += -2.0 * u2 / (den * den * den);
  }
  return p;
}

Cvec slot_solution(const SlotBasis& b, double eta) {
  Cvec y(b.ut.size());
  for (Eigen::Index i = 0; i < b.ut.size(); ++i) {
    const double den = std::max(b.eig.d[i], 0.0) + eta;
    y[i] = (std::norm(b.ut[i]) == 0.0) ? std::complex<double>(0) : b.ut[i] / den;
  }
  return b.eig.U * y;
}

double solve_eta(const std::vector<const SlotBasis*>& parts, double budget) {
  double total_u2 = 0;
  for (const auto* b : parts) total_u2 += b->ut.squaredNorm();
  if (total_u2 == 0.0) return 0.0;

  auto phi = [&](double eta) {
    double p = 0;
    for (const auto* b : parts) p += slot_power(*b, eta);
    return p;
  };
  if (phi(0.0) <= budget) return 0.0;

  double lo = 0.0;
  double hi = std::sqrt(total_u2 / budget);
  while (phi(hi) > budget) hi *= 2.0;  // safety; the bound above normally suffices
  double eta = 0.5 * (lo + hi);
  const double rt_budget = 1.0 / std::sqrt(budget);
  for (int it = 0; it < 100; ++it) {
    const double p = phi(eta);
    if (std::abs(p - budget) <= 1e-13 * budget) break;
    if (p > budget)
      lo = eta;
    else
      hi = eta;
    // Newton step on 1/sqrt(phi) - 1/sqrt(budget), nearly linear in eta.
    double dp = 0;
    for (const auto* b : parts) dp += slot_power_deriv(*b, eta);
    const double f = 1.0 / std::sqrt(p) - rt_budget;
    const double fp = -dp / (2.0 * std::pow(p, 1.5));
    double next = (fp > 0) ? eta - f / fp : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    eta = next;
    if (hi - lo <= 1e-16 * (1.0 + hi)) break;
  }
  return eta;
}

struct SubSolution {
  Cvec pc;
  Cmat pk;
  Rvec q_common;  // per-user surrogate common rates at the solution
};

// Inner solve for a fixed simplex weight lambda on the common min-rate.
SubSolution solve_at_lambda(const Coeffs& co, const Slots& slots, double w_common,
                            const Rvec& lambda, double budget, int M, int K) {
  SubSolution out;
  out.pc = Cvec::Zero(M);
  out.pk = Cmat::Zero(M, K);

  Cmat mc = Cmat::Zero(M, M);
  Cvec vc = Cvec::Zero(M);
  if (co.common_live) {
    for (int k = 0; k < K; ++k) {
      mc.noalias() += lambda[k] * co.A[k];
      vc.noalias() += lambda[k] * co.V[k];
    }
    mc *= w_common;
    vc *= w_common;
  }
  const Cmat mp = mc + co.B;

  std::vector<SlotBasis> bases;
  std::vector<const SlotBasis*> parts;
  std::vector<int> priv_slot_of(K, -1);
  bases.reserve(1 + K);

  int common_idx = -1;
  if (co.common_live) {
    SlotBasis b{eig_herm(mc), {}};
    b.ut = b.eig.U.adjoint() * vc;
    bases.push_back(std::move(b));
    common_idx = 0;
  }
  const EigH ep = eig_herm(mp);  // shared by every private slot
  for (int k = 0; k < K; ++k) {
    if (!slots.priv[k]) continue;
    SlotBasis b{ep, ep.U.adjoint() * co.v[k]};
    priv_slot_of[k] = static_cast<int>(bases.size());
    bases.push_back(std::move(b));
  }
  for (const auto& b : bases) parts.push_back(&b);

  const double eta = solve_eta(parts, budget);
  if (common_idx >= 0) out.pc = slot_solution(bases[common_idx], eta);
  for (int k = 0; k < K; ++k)
    if (priv_slot_of[k] >= 0) out.pk.col(k) = slot_solution(bases[priv_slot_of[k]], eta);

  // Surrogate common rates at the solution (for the dual search).
  out.q_common = Rvec::Zero(K);
  if (co.common_live) {
    for (int k = 0; k < K; ++k) {
      double q = co.k0[k] + 2.0 * (co.V[k].dot(out.pc)).real();
      q -= (out.pc.adjoint() * co.A[k] * out.pc).value().real();
      for (int j = 0; j < K; ++j)
        q -= (out.pk.col(j).adjoint() * co.A[k] * out.pk.col(j)).value().real();
      out.q_common[k] = q;
    }
  }
  return out;
}

// Saddle-point subproblem: the min over users of the common surrogate enters
// through a simplex dual. K = 2 uses bisection on the (monotone) dual
// derivative q_c1 - q_c2; larger K falls back to projected subgradient.
SubSolution solve_subproblem(const Coeffs& co, const Slots& slots, double w_common,
                             double budget, int M, int K) {
  if (!co.common_live) {
    Rvec lambda = Rvec::Zero(K);
    return solve_at_lambda(co, slots, w_common, lambda, budget, M, K);
  }
  if (K == 2) {
    Rvec lambda(2);
    lambda << 1.0, 0.0;
    auto hiSol = solve_at_lambda(co, slots, w_common, lambda, budget, M, K);
    const double d1 = hiSol.q_common[0] - hiSol.q_common[1];
    if (d1 <= 0) return hiSol;  // min user is 0 even with full weight on it

    lambda << 0.0, 1.0;
    auto loSol = solve_at_lambda(co, slots, w_common, lambda, budget, M, K);
    const double d0 = loSol.q_common[0] - loSol.q_common[1];
    if (d0 >= 0) return loSol;

    double lo = 0.0, hi = 1.0;  // d(lo) < 0 < d(hi); d nondecreasing in lambda_0
    SubSolution mid_sol = std::move(loSol);
    for (int it = 0; it < 50; ++it) {
      const double mid = 0.5 * (lo + hi);
      lambda << mid, 1.0 - mid;
      mid_sol = solve_at_lambda(co, slots, w_common, lambda, budget, M, K);
      const double d = mid_sol.q_common[0] - mid_sol.q_common[1];
      const double scale =
          1.0 + std::abs(mid_sol.q_common[0]) + std::abs(mid_sol.q_common[1]);
      if (std::abs(d) <= 1e-11 * scale) break;
      if (d < 0)
        lo = mid;
      else
        hi = mid;
      if (hi - lo <= 1e-12) break;
    }
    return mid_sol;
  }
  // K > 2: projected subgradient descent on the simplex.
  Rvec lambda = Rvec::Constant(K, 1.0 / K);
  SubSolution sol = solve_at_lambda(co, slots, w_common, lambda, budget, M, K);
  for (int t = 1; t <= 60; ++t) {
    const double scale = 1.0 + sol.q_common.cwiseAbs().maxCoeff();
    Rvec g = sol.q_common / scale;
    lambda -= (0.3 / std::sqrt(double(t))) * g;
    // Euclidean projection onto the simplex.
    Rvec srt = lambda;
    std::sort(srt.data(), srt.data() + K, std::greater<double>());
    double cum = 0;
    double tau = 0;
    for (int i = 0; i < K; ++i) {
      cum += srt[i];
      const double cand = (cum - 1.0) / (i + 1);
      if (i + 1 == K || srt[i + 1] <= cand) {
        tau = cand;
        if (srt[i] > cand) break;
      }
      tau = cand;
    }
    for (int k = 0; k < K; ++k) lambda[k] = std::max(0.0, lambda[k] - tau);
    const double s = lambda.sum();
    lambda = (s > 0) ? (lambda / s).eval() : Rvec::Constant(K, 1.0 / K).eval();
    sol = solve_at_lambda(co, slots, w_common, lambda, budget, M, K);
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Alternating optimization with accept-only-improvement safeguard.

void zero_frozen(Cvec& pc, Cmat& pk, const Slots& slots) {
  if (!slots.common) pc.setZero();
  for (int k = 0; k < pk.cols(); ++k)
    if (!slots.priv[k]) pk.col(k).setZero();
}

void clamp_power(Cvec& pc, Cmat& pk, double budget) {
  const double used = pc.squaredNorm() + pk.squaredNorm();
  if (used > budget) {
    const double f = std::sqrt(budget / used);
    pc *= f;
    pk *= f;
  }
}

struct AoOut {
  Cvec pc;
  Cmat pk;
  Eval ev;
  std::vector<double> hist;
};

AoOut ao_run(const Samples& s, Cvec pc, Cmat pk, const Slots& slots, const Weights& w,
             const OptimizerSettings& set, double budget) {
  zero_frozen(pc, pk, slots);
  clamp_power(pc, pk, budget);
  Eval ev = evaluate(s, pc, pk, w, slots);
  std::vector<double> hist{ev.j};
  for (int it = 0; it < set.max_outer_iterations; ++it) {
    const Coeffs co = accumulate(s, pc, pk, w, slots);
    SubSolution sol = solve_subproblem(co, slots, w.common, budget, s.M, s.K);
    zero_frozen(sol.pc, sol.pk, slots);
    clamp_power(sol.pc, sol.pk, budget);
    const Eval nev = evaluate(s, sol.pc, sol.pk, w, slots);
    if (nev.j < ev.j) break;  // floating-point guard; the surrogate step is an ascent
    const double delta = nev.j - ev.j;
    pc = std::move(sol.pc);
    pk = std::move(sol.pk);
    ev = nev;
    hist.push_back(ev.j);
    if (delta <= set.convergence_tol * std::max(1.0, std::abs(ev.j))) break;
  }
  return {std::move(pc), std::move(pk), std::move(ev), std::move(hist)};
}

// ---------------------------------------------------------------------------
// Common-rate split: cover floor shortfalls first (largest first, leveling
// them down), remainder to the neediest user, ties to the lowest index.

Rvec split_fractions(double rate_common, const Rvec& rate_priv, double r0) {
  const int K = static_cast<int>(rate_priv.size());
  Rvec frac = Rvec::Zero(K);
  if (rate_common <= 0) return frac;

  Rvec need(K);
  for (int k = 0; k < K; ++k) need[k] = std::max(0.0, r0 - rate_priv[k]);
  const double total_need = need.sum();

  Rvec give = Rvec::Zero(K);
  if (total_need >= rate_common) {
    // Level the largest shortfalls down to a common value tau.
    std::vector<double> srt(need.data(), need.data() + K);
    std::sort(srt.begin(), srt.end(), std::greater<double>());
    double cum = 0;
    double tau = 0;
    for (int i = 0; i < K; ++i) {
      cum += srt[i];
      const double cand = (cum - rate_common) / (i + 1);
      const double next = (i + 1 < K) ? srt[i + 1] : 0.0;
      if (cand >= next) {
        tau = cand;
        break;
      }
    }
    for (int k = 0; k < K; ++k) give[k] = std::max(0.0, need[k] - tau);
  } else {
    give = need;
    int target = 0;
    for (int k = 1; k < K; ++k)
      if (need[k] > need[target]) target = k;
    give[target] += rate_common - total_need;
  }
  frac = give / rate_common;
  // Guard the sum-to-one invariant against rounding.
  const double s = frac.sum();
  if (s > 0) frac /= s;
  return frac;
}

Rvec qos_shortfalls(double rate_common, const Rvec& frac, const Rvec& rate_priv, double r0) {
  Rvec s(rate_priv.size());
  for (Eigen::Index k = 0; k < rate_priv.size(); ++k)
    s[k] = std::max(0.0, r0 - (frac[k] * rate_common + rate_priv[k]));
  return s;
}

// ---------------------------------------------------------------------------
// Deterministic initialization candidates.

struct Cand {
  Cvec pc;
  Cmat pk;
};

Cvec unit_or_basis(const Cvec& v, int M) {
  const double n = v.norm();
  if (n > 0) return v / n;
  Cvec e = Cvec::Zero(M);
  e[0] = 1.0;
  return e;
}

Cvec dominant_direction(const Cmat& est) {
  const EigH e = eig_herm((est * est.adjoint()).eval());
  return e.U.col(e.U.cols() - 1);  // eigenvalues ascend
}

constexpr std::array<double, 8> kCommonPowerGrid = {0.5, 0.2, 0.05, 0.8, 0.35, 0.1, 0.65, 0.02};

// Zero-forcing directions on the estimates (right pseudo-inverse columns).
Cmat zf_directions(const Cmat& est) {
  const int M = static_cast<int>(est.rows());
  const int K = static_cast<int>(est.cols());
  Cmat g = est.adjoint() * est;
  g += (1e-12 * g.trace().real() + 1e-300) * Cmat::Identity(K, K);
  Cmat w = est * g.ldlt().solve(Cmat::Identity(K, K));
  for (int k = 0; k < K; ++k) w.col(k) = unit_or_basis(w.col(k), M);
  return w;
}

std::vector<Cand> rsma_candidates(const ChannelSetd& est_set, int restarts, double P) {
  const Cmat& est = est_set.estimates;
  const int M = static_cast<int>(est.rows());
  const int K = static_cast<int>(est.cols());
  std::vector<Cand> cands;
  const Cvec u1 = dominant_direction(est);
  const int nt = std::min<int>(restarts, kCommonPowerGrid.size());
  for (int i = 0; i < nt; ++i) {
    const double t = kCommonPowerGrid[i];
    Cand c;
    c.pc = std::sqrt(t * P) * u1;
    c.pk.resize(M, K);
    for (int k = 0; k < K; ++k)
      c.pk.col(k) = std::sqrt((1.0 - t) * P / K) * unit_or_basis(est.col(k), M);
    cands.push_back(std::move(c));
  }
  // Single-beam start: full power to the strongest estimate (covers the
  // collapse regime where serving one stream is optimal).
  int best = 0;
  for (int k = 1; k < K; ++k)
    if (est.col(k).squaredNorm() > est.col(best).squaredNorm()) best = k;
  Cand su;
  su.pc = Cvec::Zero(M);
  su.pk = Cmat::Zero(M, K);
  su.pk.col(best) = std::sqrt(P) * unit_or_basis(est.col(best), M);
  cands.push_back(std::move(su));
  // CSIT-scaled starts: with error variance v, a zero-forcing private stream
  // leaks ~v times its power into the other users, so ~1/v per stream keeps
  // the leakage at the noise floor; the remaining budget rides the common
  // stream. Plants the high-SNR imperfect-CSIT structure for the ascent to
  // polish.
  const double v = est_set.error_std * est_set.error_std;
  if (v > 0) {
    const Cmat zf = zf_directions(est);
    for (double scale : {1.0, 0.25}) {
      const double qp = scale / v;
      if (K * qp >= 0.999 * P) continue;  // full-power privates: covered above
      Cand c;
      c.pc = std::sqrt(P - K * qp) * u1;
      c.pk.resize(M, K);
      for (int k = 0; k < K; ++k) c.pk.col(k) = std::sqrt(qp) * zf.col(k);
      cands.push_back(std::move(c));
    }
  }
  return cands;
}

std::vector<Cand> sdma_candidates(const Cmat& est, double P, double mean_noise) {
  const int M = static_cast<int>(est.rows());
  const int K = static_cast<int>(est.cols());
  std::vector<Cand> cands;

  Cand mf;
  mf.pc = Cvec::Zero(M);
  mf.pk.resize(M, K);
  for (int k = 0; k < K; ++k) mf.pk.col(k) = std::sqrt(P / K) * unit_or_basis(est.col(k), M);
  cands.push_back(std::move(mf));

  // Regularized zero-forcing.
  Cmat reg = est * est.adjoint();
  reg += (double(K) * mean_noise / P) * Cmat::Identity(M, M);
  const Cmat w = reg.ldlt().solve(est);
  Cand rzf;
  rzf.pc = Cvec::Zero(M);
  rzf.pk.resize(M, K);
  for (int k = 0; k < K; ++k) rzf.pk.col(k) = std::sqrt(P / K) * unit_or_basis(w.col(k), M);
  cands.push_back(std::move(rzf));

  for (int j = 0; j < K; ++j) {
    Cand su;
    su.pc = Cvec::Zero(M);
    su.pk = Cmat::Zero(M, K);
    su.pk.col(j) = std::sqrt(P) * unit_or_basis(est.col(j), M);
    cands.push_back(std::move(su));
  }
  return cands;
}

std::vector<Cand> noma_candidates(const Cmat& est, int restarts, double P, int weak, int strong) {
  const int M = static_cast<int>(est.rows());
  const int K = static_cast<int>(est.cols());
  std::vector<Cand> cands;
  const Cvec mw = unit_or_basis(est.col(weak), M);
  const Cvec ms = unit_or_basis(est.col(strong), M);
  const int nt = std::min<int>(restarts, kCommonPowerGrid.size());
  for (int i = 0; i < nt; ++i) {
    const double t = kCommonPowerGrid[i];
    Cand c;
    c.pc = std::sqrt(t * P) * mw;
    c.pk = Cmat::Zero(M, K);
    c.pk.col(strong) = std::sqrt((1.0 - t) * P) * ms;
    cands.push_back(std::move(c));
  }
  Cand all_weak;
  all_weak.pc = std::sqrt(P) * mw;
  all_weak.pk = Cmat::Zero(M, K);
  cands.push_back(std::move(all_weak));
  Cand all_strong;
  all_strong.pc = Cvec::Zero(M);
  all_strong.pk = Cmat::Zero(M, K);
  all_strong.pk.col(strong) = std::sqrt(P) * ms;
  cands.push_back(std::move(all_strong));
  return cands;
}

// ---------------------------------------------------------------------------
// Per-candidate pipeline: plain ascent, then QoS penalty continuation with
// per-phase frozen weights.

struct PipeOut {
  Cvec pc;
  Cmat pk;
  Eval ev;
  std::vector<std::vector<double>> hist;
  QosStatus qos = QosStatus::kNotRequested;
  Rvec shortfalls;
  bool qos_ok = true;
};

// -1 for the floor-driven split, otherwise the user owning the whole common
// rate (NOMA weak user).
Rvec strategy_split(double rate_common, const Rvec& rate_priv, double r0, int owner, int K) {
  if (owner >= 0) {
    Rvec f = Rvec::Zero(K);
    if (rate_common > 0) f[owner] = 1.0;
    return f;
  }
  return split_fractions(rate_common, rate_priv, r0);
}

PipeOut run_pipeline(const Samples& s, const Slots& slots, const Cand& start,
                     const OptimizerSettings& set, double budget, int split_owner) {
  const int K = s.K;
  Weights w{1.0, Rvec::Ones(K)};
  AoOut ao = ao_run(s, start.pc, start.pk, slots, w, set, budget);

  PipeOut out;
  out.hist.push_back(ao.hist);
  const double r0 = set.qos_floor;
  if (r0 <= 0) {
    out.pc = std::move(ao.pc);
    out.pk = std::move(ao.pk);
    out.ev = std::move(ao.ev);
    out.shortfalls = Rvec::Zero(K);
    return out;
  }

  auto shortfalls_of = [&](const Eval& ev) {
    const double rc = slots.common ? ev.min_rc : 0.0;
    const Rvec f = strategy_split(rc, ev.rp, r0, split_owner, K);
    return qos_shortfalls(rc, f, ev.rp, r0);
  };

  Rvec sf = shortfalls_of(ao.ev);
  double mu = kPenaltyBase;
  for (int phase = 0; phase < kMaxQosPhases && sf.maxCoeff() > kQosTol; ++phase) {
    Weights pw{1.0 + mu * sf.sum(), Rvec::Ones(K)};
    for (int k = 0; k < K; ++k) pw.priv[k] += mu * sf[k];
    if (!slots.common) pw.common = 1.0;
    ao = ao_run(s, std::move(ao.pc), std::move(ao.pk), slots, pw, set, budget);
    out.hist.push_back(ao.hist);
    sf = shortfalls_of(ao.ev);
    mu *= set.penalty_growth;
  }

  out.pc = std::move(ao.pc);
  out.pk = std::move(ao.pk);
  out.ev = std::move(ao.ev);
  out.shortfalls = sf;
  out.qos = (sf.maxCoeff() <= kQosTol) ? QosStatus::kSatisfied : QosStatus::kInfeasible;
  out.qos_ok = out.qos == QosStatus::kSatisfied;
  return out;
}

// Jensen upper bound on any single user's achievable averaged rate with the
// whole budget: log2(1 + P * lambda_max(mean h h^H) / sigma^2).
double solo_rate_upper_bound(const Samples& s, int user, double budget) {
  Cmat c = Cmat::Zero(s.M, s.M);
  for (int m = 0; m < s.S; ++m) {
    const auto h = s.H.col(static_cast<Eigen::Index>(m) * s.K + user);
    c.noalias() += h * h.adjoint();
  }
  c /= double(s.S);
  const EigH e = eig_herm(c);
  return std::log2(1.0 + budget * e.d[e.d.size() - 1] / s.noise[user]);
}

OptimizeResult single_user_result(const ChannelSetd& est, const OptimizerSettings& set,
                                  double budget) {
  const int M = static_cast<int>(est.num_tx());
  PrecoderSetd prec;
  prec.common = Cvec::Zero(M);
  prec.privates.resize(M, 1);
  prec.privates.col(0) = std::sqrt(budget) * unit_or_basis(est.estimates.col(0), M);
  prec.common_split = Rvec::Zero(1);
  prec.power_budget = budget;

  const int S = est.error_std == 0 ? 1 : set.conditional_samples;
  const auto draws = conditional_draws(est, S, 1);
  OptimizeResult res;
  res.precoders = prec;
  res.report = averaged_rate_report<double>(draws, prec);
  res.objective_history = {{res.report.rate_total[0]}};
  res.qos_shortfalls = Rvec::Zero(1);
  if (set.qos_floor > 0) {
    const double sf = std::max(0.0, set.qos_floor - res.report.rate_total[0]);
    res.qos_shortfalls[0] = sf;
    if (sf <= kQosTol) {
      res.qos = QosStatus::kSatisfied;
    } else {
      res.qos = QosStatus::kInfeasible;
      const auto s = flatten(draws);
      res.infeasibility_certified = solo_rate_upper_bound(s, 0, budget) < set.qos_floor;
    }
  }
  return res;
}

}  // namespace

// ---------------------------------------------------------------------------

void Strategy::validate(int num_users) const {
  if (tag != Multiplex::kNoma) {
    if (!decoding_order.empty())
      throw std::invalid_argument("Strategy: decoding_order is NOMA-only");
    return;
  }
  if (decoding_order.empty()) return;  // computed from estimated channel norms
  if (static_cast<int>(decoding_order.size()) != num_users)
    throw std::invalid_argument("Strategy: decoding_order must list every user");
  std::vector<char> seen(num_users, 0);
  for (int u : decoding_order) {
    if (u < 0 || u >= num_users || seen[u])
      throw std::invalid_argument("Strategy: decoding_order is not a permutation");
    seen[u] = 1;
  }
}

void OptimizerSettings::validate() const {
  if (max_outer_iterations < 1)
    throw std::invalid_argument("OptimizerSettings: max_outer_iterations must be >= 1");
  if (!(convergence_tol > 0))
    throw std::invalid_argument("OptimizerSettings: convergence_tol must be positive");
  if (qos_floor < 0) throw std::invalid_argument("OptimizerSettings: qos_floor must be >= 0");
  if (conditional_samples < 1)
    throw std::invalid_argument("OptimizerSettings: conditional_samples must be >= 1");
  if (restarts < 1) throw std::invalid_argument("OptimizerSettings: restarts must be >= 1");
  if (!(penalty_growth > 1))
    throw std::invalid_argument("OptimizerSettings: penalty_growth must exceed 1");
}

OptimizeResult optimize(const ChannelSetd& estimate, const Strategy& strategy,
                        const OptimizerSettings& settings, double power_budget) {
  estimate.validate();
  settings.validate();
  const int K = static_cast<int>(estimate.num_users());
  strategy.validate(K);
  if (!(power_budget > 0)) throw std::invalid_argument("optimize: power budget must be positive");

  if (K == 1) return single_user_result(estimate, settings, power_budget);

  const bool sdma_like = strategy.tag == Multiplex::kSdma ||
                         (strategy.tag == Multiplex::kRsma && settings.freeze_common);
  int weak = -1, strong = -1;
  if (strategy.tag == Multiplex::kNoma) {
    if (K != 2) throw std::invalid_argument("optimize: NOMA supports exactly 2 users");
    if (strategy.decoding_order.empty()) {
      // Ascending estimated channel norm: first-decoded stream belongs to the
      // weaker user; ties go to the lower index.
      weak = estimate.estimates.col(1).squaredNorm() < estimate.estimates.col(0).squaredNorm()
                 ? 1
                 : 0;
    } else {
      weak = strategy.decoding_order.front();
    }
    strong = 1 - weak;
  }

  const int S = estimate.error_std == 0 ? 1 : settings.conditional_samples;
  const auto draws = conditional_draws(estimate, S, 1);
  const Samples s = flatten(draws);

  Slots slots;
  slots.priv.assign(K, 1);
  if (sdma_like) {
    slots.common = false;
  } else if (strategy.tag == Multiplex::kNoma) {
    slots.common = true;
    slots.priv[weak] = 0;
  } else {
    slots.common = true;
  }
  const int split_owner = (strategy.tag == Multiplex::kNoma) ? weak : -1;

  std::vector<Cand> cands;
  if (sdma_like) {
    cands = sdma_candidates(estimate.estimates, power_budget, estimate.noise_vars.mean());
  } else if (strategy.tag == Multiplex::kNoma) {
    cands = noma_candidates(estimate.estimates, settings.restarts, power_budget, weak, strong);
  } else {
    cands = rsma_candidates(estimate, settings.restarts, power_budget);
    // Embed the converged baselines: RSMA's feasible set contains both, so
    // starting from their optima guarantees it never loses to them.
    OptimizerSettings warm = settings;
    warm.qos_floor = 0;
    warm.freeze_common = false;
    const auto sdma_best = optimize(estimate, Strategy::sdma(), warm, power_budget);
    cands.push_back({sdma_best.precoders.common, sdma_best.precoders.privates});
    const auto noma_best = optimize(estimate, Strategy::noma(), warm, power_budget);
    cands.push_back({noma_best.precoders.common, noma_best.precoders.privates});
  }

  // Certified infeasibility: some user cannot reach the floor even served
  // alone at full power (Jensen upper bound below the floor).
  bool certified = false;
  if (settings.qos_floor > 0) {
    for (int k = 0; k < K && !certified; ++k)
      certified = solo_rate_upper_bound(s, k, power_budget) < settings.qos_floor;
  }
  OptimizerSettings eff = settings;
  if (certified) eff.qos_floor = 0;  // best-effort precoders, reported infeasible

  std::vector<PipeOut> outs;
  outs.reserve(cands.size());
  for (const auto& c : cands)
    outs.push_back(run_pipeline(s, slots, c, eff, power_budget, split_owner));

  int best = 0;
  for (int i = 1; i < static_cast<int>(outs.size()); ++i) {
    const bool better_class = outs[i].qos_ok && !outs[best].qos_ok;
    const bool same_class = outs[i].qos_ok == outs[best].qos_ok;
    if (better_class ||
        (same_class && outs[i].ev.plain_sum(slots.common) > outs[best].ev.plain_sum(slots.common)))
      best = i;
  }
  PipeOut& win = outs[best];

  PrecoderSetd prec;
  prec.common = std::move(win.pc);
  prec.privates = std::move(win.pk);
  prec.power_budget = power_budget;
  const double rc = slots.common ? win.ev.min_rc : 0.0;
  prec.common_split =
      sdma_like ? Rvec::Zero(K)
                : strategy_split(rc, win.ev.rp, settings.qos_floor, split_owner, K);
  prec.validate();

  OptimizeResult res;
  res.precoders = std::move(prec);
  res.report = averaged_rate_report<double>(draws, res.precoders);
  res.report.noma_mapped = strategy.tag == Multiplex::kNoma;
  res.objective_history = std::move(win.hist);
  res.chosen_start = best;
  res.qos_shortfalls = qos_shortfalls(res.report.rate_common, res.precoders.common_split,
                                      res.report.rate_private, settings.qos_floor);
  if (settings.qos_floor > 0) {
    if (certified) {
      res.qos = QosStatus::kInfeasible;
      res.infeasibility_certified = true;
    } else {
      res.qos = win.qos;
    }
  }
  return res;
}

double sum_rate_objective(std::span<const ChannelSetd> samples, const PrecoderSetd& precoders) {
  return averaged_rate_report<double>(samples, precoders).sum_rate();
}

double sum_rate_objective(const std::vector<ChannelSetd>& samples, const PrecoderSetd& precoders) {
  return sum_rate_objective(std::span<const ChannelSetd>(samples), precoders);
}

RateReportd noma_rates(const ChannelSetd& channel, const PrecoderSetd& precoders,
                       const std::vector<int>& order) {
  channel.validate();
  if (channel.num_users() != 2) throw std::invalid_argument("noma_rates: requires exactly 2 users");
  if (order.size() != 2 || order[0] == order[1] || order[0] < 0 || order[0] > 1 || order[1] < 0 ||
      order[1] > 1)
    throw std::invalid_argument("noma_rates: order must be a permutation of {0, 1}");

  PrecoderSetd p = precoders;
  p.common_split = Rvec::Zero(2);
  RateReportd r = rate_report(channel, p);
  r.common_portions = Rvec::Zero(2);
  r.common_portions[order[0]] = r.rate_common;  // first-decoded stream's owner
  r.rate_total = r.common_portions + r.rate_private;
  r.noma_mapped = true;
  return r;
}

double dof_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw std::invalid_argument("dof_slope: need at least 2 points");
  for (std::size_t i = 1; i < points.size(); ++i)
    if (!(points[i].first > points[i - 1].first))
      throw std::invalid_argument("dof_slope: powers must be strictly increasing");

  const double db_to_log2 = std::numbers::ln10 / (10.0 * std::numbers::ln2);
  double mx = 0, my = 0;
  for (const auto& [db, rate] : points) {
    mx += db * db_to_log2;
    my += rate;
  }
  mx /= double(points.size());
  my /= double(points.size());
  double sxy = 0, sxx = 0;
  for (const auto& [db, rate] : points) {
    const double dx = db * db_to_log2 - mx;
    sxy += dx * (rate - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace rsma

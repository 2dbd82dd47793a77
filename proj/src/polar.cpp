#include "rsma/polar.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rsma {
namespace {

constexpr std::uint16_t kCrcPoly = 0x621;  // x^11+x^10+x^9+x^5+1 without the leading term
constexpr int kCrcBits = 11;

// ---------------------------------------------------------------------------
// Gaussian-approximation density evolution (Chung et al. phi function).

double ga_phi(double x) {
  if (x <= 0) return 1.0;
  if (x < 10.0) return std::exp(0.0218 - 0.4527 * std::pow(x, 0.86));
  return std::exp(-x / 4.0) * std::sqrt(M_PI / x) * (1.0 - 10.0 / (7.0 * x));
}

double ga_phi_inv(double y) {
  // phi is strictly decreasing on (0, inf) with phi(0+) = 1.
  if (y >= 1.0) return 0.0;
  double lo = 1e-12, hi = 1e5;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ga_phi(mid) > y)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double softplus(double x) {  // log(1 + e^x), overflow-safe
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

// Exact boxplus: sign-min magnitude with the dual log1p correction.
double boxplus(double a, double b) {
  const double s = (a < 0) == (b < 0) ? 1.0 : -1.0;
  return s * std::min(std::abs(a), std::abs(b)) + std::log1p(std::exp(-std::abs(a + b))) -
         std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

// ---------------------------------------------------------------------------

std::uint16_t crc11_remainder(std::span<const std::uint8_t> bits) {
  std::uint16_t reg = 0;
  for (const std::uint8_t b : bits) {
    const std::uint16_t fb = ((reg >> (kCrcBits - 1)) ^ b) & 1u;
    reg = static_cast<std::uint16_t>((reg << 1) & 0x7FFu);
    if (fb) reg ^= kCrcPoly;
  }
  return reg;
}

void crc11_append(std::vector<std::uint8_t>& bits) {
  const std::uint16_t rem = crc11_remainder(bits);
  for (int i = kCrcBits - 1; i >= 0; --i) bits.push_back((rem >> i) & 1u);
}

bool crc11_check(std::span<const std::uint8_t> bits) {
  if (bits.size() < static_cast<std::size_t>(kCrcBits)) return false;
  return crc11_remainder(bits) == 0;
}

void CodewordSpec::validate() const {
  if (block_length < 2 || (block_length & (block_length - 1)) != 0)
    throw std::invalid_argument("CodewordSpec: block_length must be a power of two >= 2");
  if (crc_length != 0 && crc_length != kCrcBits)
    throw std::invalid_argument("CodewordSpec: crc_length must be 11 (or 0 to disable)");
  if (info_length <= crc_length || info_length > block_length)
    throw std::invalid_argument("CodewordSpec: info_length out of range");
  if (list_size < 1) throw std::invalid_argument("CodewordSpec: list_size must be >= 1");
  if (static_cast<int>(frozen.size()) != block_length ||
      static_cast<int>(info_positions.size()) != info_length)
    throw std::invalid_argument("CodewordSpec: frozen/info sets inconsistent");
  const auto frozen_count = std::count(frozen.begin(), frozen.end(), std::uint8_t(1));
  if (frozen_count != block_length - info_length)
    throw std::invalid_argument("CodewordSpec: frozen set size mismatch");
}

CodewordSpec make_codeword_spec(int block_length, int info_length, double design_snr_db,
                                int list_size, int crc_length) {
  CodewordSpec spec;
  spec.block_length = block_length;
  spec.info_length = info_length;
  spec.crc_length = crc_length;
  spec.list_size = list_size;
  spec.design_snr_db = design_snr_db;

  if (block_length < 2 || (block_length & (block_length - 1)) != 0)
    throw std::invalid_argument("make_codeword_spec: block_length must be a power of two");

  // Per-bit-channel LLR means under the Gaussian approximation, expanded in
  // natural u order: the left (first-half) child takes the degraded branch.
  std::vector<double> means{2.0 * std::pow(10.0, design_snr_db / 10.0)};
  for (int len = 1; len < block_length; len <<= 1) {
    std::vector<double> next(static_cast<std::size_t>(len) * 2);
    for (int j = 0; j < 2 * len; ++j) {
      const double m = means[j >> 1];
      if (j & 1)
        next[j] = 2.0 * m;
      else
        next[j] = ga_phi_inv(1.0 - (1.0 - ga_phi(m)) * (1.0 - ga_phi(m)));
    }
    means = std::move(next);
  }

  std::vector<int> order(block_length);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (means[a] != means[b]) return means[a] > means[b];
    return a < b;  // deterministic ties: keep lower index more reliable
  });

  spec.frozen.assign(block_length, 1);
  spec.info_positions.assign(order.begin(), order.begin() + info_length);
  std::sort(spec.info_positions.begin(), spec.info_positions.end());
  for (int i : spec.info_positions) spec.frozen[i] = 0;
  spec.validate();
  return spec;
}

std::vector<std::uint8_t> polar_transform(std::vector<std::uint8_t> u) {
  const int n = static_cast<int>(u.size());
  if (n < 1 || (n & (n - 1)) != 0)
    throw std::invalid_argument("polar_transform: length must be a power of two");
  for (int len = 1; len < n; len <<= 1)
    for (int i = 0; i < n; i += 2 * len)
      for (int j = 0; j < len; ++j) u[i + j] ^= u[i + j + len];
  return u;
}

std::vector<std::uint8_t> polar_encode(const CodewordSpec& spec,
                                       std::span<const std::uint8_t> payload) {
  spec.validate();
  if (static_cast<int>(payload.size()) != spec.payload_length())
    throw std::invalid_argument("polar_encode: payload must be " +
                                std::to_string(spec.payload_length()) + " bits, got " +
                                std::to_string(payload.size()));
  std::vector<std::uint8_t> info(payload.begin(), payload.end());
  if (spec.crc_length > 0) crc11_append(info);

  std::vector<std::uint8_t> u(spec.block_length, 0);
  for (int i = 0; i < spec.info_length; ++i) u[spec.info_positions[i]] = info[i] & 1u;
  return polar_transform(std::move(u));
}

// ---------------------------------------------------------------------------
// Successive-cancellation list decoding.
//
// The recursion walks the code tree once; per-depth workspaces hold each
// list slot's branch LLRs and partial sums. Path duplication happens only at
// leaves and is recorded in a split log; a frame resuming after a subtree
// replays the net slot movements onto its local buffers (copy-on-return
// rather than copy-on-split, keeping the hot path at O(L N log N)).

namespace {

struct SplitEvent {
  int dst, src;
};

struct SclState {
  int n_levels = 0;
  int list_size = 0;
  int active = 1;
  std::vector<std::vector<double>> alpha;      // [depth][slot * len + j]
  std::vector<std::vector<std::uint8_t>> beta_left;  // [depth][slot * len + j]
  std::vector<double> pm;                      // [slot] path metric (lower = better)
  std::vector<std::vector<std::uint8_t>> u;    // [slot][bit index] decisions
  std::vector<SplitEvent> log;
  const CodewordSpec* spec = nullptr;
  int next_bit = 0;

  // Applies the net slot-content map for events [from, end) to a per-slot
  // buffer of row length `len`.
  void replay(std::size_t from, std::vector<double>& buf, int len) const {
    if (from == log.size()) return;
    std::vector<int> src_of(list_size);
    std::iota(src_of.begin(), src_of.end(), 0);
    for (std::size_t e = from; e < log.size(); ++e) src_of[log[e].dst] = src_of[log[e].src];
    std::vector<double> fresh(buf.size());
    for (int s = 0; s < active; ++s)
      std::copy_n(buf.begin() + static_cast<std::ptrdiff_t>(src_of[s]) * len, len,
                  fresh.begin() + static_cast<std::ptrdiff_t>(s) * len);
    buf = std::move(fresh);
  }
  void replay_bits(std::size_t from, std::vector<std::uint8_t>& buf, int len) const {
    if (from == log.size()) return;
    std::vector<int> src_of(list_size);
    std::iota(src_of.begin(), src_of.end(), 0);
    for (std::size_t e = from; e < log.size(); ++e) src_of[log[e].dst] = src_of[log[e].src];
    std::vector<std::uint8_t> fresh(buf.size());
    for (int s = 0; s < active; ++s)
      std::copy_n(buf.begin() + static_cast<std::ptrdiff_t>(src_of[s]) * len, len,
                  fresh.begin() + static_cast<std::ptrdiff_t>(s) * len);
    buf = std::move(fresh);
  }
};

// Processes one leaf (bit index state.next_bit); branch LLR for slot s is
// state.alpha[depth][s]. Writes the decisions into beta (one bit per slot).
void scl_leaf(SclState& st, int depth, std::vector<std::uint8_t>& beta_out) {
  const int bit = st.next_bit++;
  const auto& a = st.alpha[depth];
  const bool frozen = st.spec->frozen[bit] != 0;

  if (frozen) {
    for (int s = 0; s < st.active; ++s) {
      st.pm[s] += softplus(-a[s]);  // cost of forcing u = 0
      st.u[s][bit] = 0;
      beta_out[s] = 0;
    }
    return;
  }

  struct Cand {
    double pm;
    int slot;
    std::uint8_t bit;
  };
  std::vector<Cand> cands;
  cands.reserve(2 * st.active);
  for (int s = 0; s < st.active; ++s) {
    cands.push_back({st.pm[s] + softplus(-a[s]), s, 0});  // choose 0
    cands.push_back({st.pm[s] + softplus(a[s]), s, 1});   // choose 1
  }
  const int keep = std::min<int>(st.list_size, static_cast<int>(cands.size()));
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.pm != y.pm) return x.pm < y.pm;
    if (x.slot != y.slot) return x.slot < y.slot;
    return x.bit < y.bit;
  });
  cands.resize(keep);

  // Slots keeping exactly one candidate stay in place; a slot keeping both
  // leaves its bit-0 branch in place and clones the bit-1 branch into a slot
  // freed by a dying path (ascending order for determinism).
  std::vector<std::uint8_t> kept_count(st.active, 0);
  for (const auto& c : cands) kept_count[c.slot]++;
  std::vector<int> free_slots;
  for (int s = 0; s < st.active; ++s)
    if (kept_count[s] == 0) free_slots.push_back(s);
  for (int s = st.active; s < std::min(st.list_size, 2 * st.active); ++s) free_slots.push_back(s);

  std::vector<double> new_pm = st.pm;
  std::vector<std::uint8_t> decided(st.list_size, 0);
  std::vector<std::uint8_t> new_beta(st.list_size, 0);
  std::size_t next_free = 0;
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.slot != y.slot) return x.slot < y.slot;
    return x.bit < y.bit;
  });
  int new_active = 0;
  for (const auto& c : cands) {
    int target;
    if (!decided[c.slot] && kept_count[c.slot] >= 1) {
      target = c.slot;
      decided[c.slot] = 1;
    } else {
      target = free_slots[next_free++];
      st.log.push_back({target, c.slot});
      st.u[target] = st.u[c.slot];
    }
    new_pm[target] = c.pm;
    st.u[target][bit] = c.bit;
    new_beta[target] = c.bit;
    new_active = std::max(new_active, target + 1);
  }
  st.pm = std::move(new_pm);
  // Active slots are exactly 0..new_active-1: survivors keep their slot and
  // clones fill freed slots below the new count.
  st.active = std::max(st.active, new_active);
  for (int s = 0; s < st.active; ++s) beta_out[s] = new_beta[s];
}

// Decodes the subtree at `depth` spanning `len` leaves; branch LLRs are in
// st.alpha[depth] (st.active rows of length len). Partial sums are written
// into st.beta_left[depth-1]'s caller-provided segment via the return buffer.
void scl_node(SclState& st, int depth, int len, std::vector<std::uint8_t>& beta_out) {
  if (len == 1) {
    scl_leaf(st, depth, beta_out);
    return;
  }
  const int half = len / 2;
  auto& a = st.alpha[depth];
  auto& a_child = st.alpha[depth + 1];
  auto& bl = st.beta_left[depth];

  // f step into the child workspace.
  for (int s = 0; s < st.active; ++s)
    for (int j = 0; j < half; ++j)
      a_child[s * half + j] = boxplus(a[s * len + j], a[s * len + j + half]);

  const std::size_t mark_left = st.log.size();
  scl_node(st, depth + 1, half, bl);
  // Splits inside the left subtree moved slot contents; realign our alpha.
  st.replay(mark_left, a, len);

  // g step using the left partial sums.
  for (int s = 0; s < st.active; ++s)
    for (int j = 0; j < half; ++j) {
      const double sgn = bl[s * half + j] ? -1.0 : 1.0;
      a_child[s * half + j] = a[s * len + j + half] + sgn * a[s * len + j];
    }

  const std::size_t mark_right = st.log.size();
  std::vector<std::uint8_t> br(static_cast<std::size_t>(st.list_size) * half);
  scl_node(st, depth + 1, half, br);
  st.replay_bits(mark_right, bl, half);

  for (int s = 0; s < st.active; ++s)
    for (int j = 0; j < half; ++j) {
      beta_out[s * len + j] = bl[s * half + j] ^ br[s * half + j];
      beta_out[s * len + j + half] = br[s * half + j];
    }
}

}  // namespace

PolarDecodeResult polar_decode(const CodewordSpec& spec, std::span<const double> llrs) {
  spec.validate();
  const int n = spec.block_length;
  if (static_cast<int>(llrs.size()) != n)
    throw std::invalid_argument("polar_decode: expected " + std::to_string(n) + " LLRs, got " +
                                std::to_string(llrs.size()));
  const int levels = static_cast<int>(std::round(std::log2(n)));

  SclState st;
  st.n_levels = levels;
  st.list_size = spec.list_size;
  st.spec = &spec;
  st.pm.assign(spec.list_size, 0.0);
  st.u.assign(spec.list_size, std::vector<std::uint8_t>(n, 0));
  st.alpha.resize(levels + 1);
  st.beta_left.resize(levels + 1);
  for (int d = 0; d <= levels; ++d) {
    const int len = n >> d;
    st.alpha[d].assign(static_cast<std::size_t>(spec.list_size) * len, 0.0);
    st.beta_left[d].assign(static_cast<std::size_t>(spec.list_size) * len, 0);
  }
  std::copy(llrs.begin(), llrs.end(), st.alpha[0].begin());  // slot 0 seeds the list

  std::vector<std::uint8_t> beta(static_cast<std::size_t>(spec.list_size) * n);
  scl_node(st, 0, n, beta);

  std::vector<int> order(st.active);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (st.pm[a] != st.pm[b]) return st.pm[a] < st.pm[b];
    return a < b;
  });

  auto extract_info = [&](int slot) {
    std::vector<std::uint8_t> info(spec.info_length);
    for (int i = 0; i < spec.info_length; ++i) info[i] = st.u[slot][spec.info_positions[i]];
    return info;
  };

  PolarDecodeResult res;
  int pick = order[0];
  bool pass = false;
  if (spec.crc_length > 0) {
    for (int s : order) {
      const auto info = extract_info(s);
      if (crc11_check(info)) {
        pick = s;
        pass = true;
        break;
      }
    }
  } else {
    pass = true;  // no CRC screening: best path is the decision
  }
  auto info = extract_info(pick);
  res.payload.assign(info.begin(), info.begin() + spec.payload_length());
  res.crc_pass = pass;
  res.metric = st.pm[pick];
  return res;
}

}  // namespace rsma

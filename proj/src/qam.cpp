#include "rsma/qam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rsma {

namespace {

// Gray bits (as an MSB-first integer) -> natural index 0..L-1.
unsigned gray_decode(unsigned g) {
  unsigned n = g;
  for (unsigned shift = 1; shift < 8; shift <<= 1) n ^= n >> shift;
  return n;
}

// Per-axis amplitude table indexed by the Gray bit group; all-zero group on
// the most positive level. Scaled so the full square constellation has unit
// average energy: E{I^2 + Q^2} = 2 * scale^2 * (L^2 - 1) / 3 = 1.
std::vector<double> axis_levels(int half_bits) {
  const int L = 1 << half_bits;
  const double scale = std::sqrt(3.0 / (2.0 * (L * L - 1)));
  std::vector<double> level(L);
  for (int g = 0; g < L; ++g)
    level[g] = scale * (L - 1 - 2.0 * static_cast<double>(gray_decode(static_cast<unsigned>(g))));
  return level;
}

unsigned pack_bits(std::span<const std::uint8_t> bits, std::size_t at, int n) {
  unsigned v = 0;
  for (int j = 0; j < n; ++j) v = (v << 1) | (bits[at + j] & 1u);
  return v;
}

}  // namespace

int qam_bits_per_symbol(int order) {
  switch (order) {
    case 4: return 2;
    case 16: return 4;
    case 64: return 6;
    case 256: return 8;
    default:
      throw std::invalid_argument("qam: order must be 4, 16, 64, or 256, got " +
                                  std::to_string(order));
  }
}

std::vector<std::complex<double>> qam_map(std::span<const std::uint8_t> bits, int order) {
  const int m = qam_bits_per_symbol(order);
  if (bits.size() % static_cast<std::size_t>(m) != 0)
    throw std::invalid_argument("qam_map: bit count " + std::to_string(bits.size()) +
                                " is not a multiple of " + std::to_string(m));
  const int mh = m / 2;
  const auto level = axis_levels(mh);
  std::vector<std::complex<double>> out(bits.size() / static_cast<std::size_t>(m));
  for (std::size_t s = 0; s < out.size(); ++s) {
    const std::size_t at = s * static_cast<std::size_t>(m);
    out[s] = {level[pack_bits(bits, at, mh)], level[pack_bits(bits, at + mh, mh)]};
  }
  return out;
}

std::vector<double> qam_demap(std::span<const std::complex<double>> symbols, int order,
                              double noise_var, double interference_var) {
  const int m = qam_bits_per_symbol(order);
  const double total_var = noise_var + interference_var;
  if (!(total_var > 0))
    throw std::invalid_argument("qam_demap: noise_var + interference_var must be positive");
  const int mh = m / 2;
  const int L = 1 << mh;
  const auto level = axis_levels(mh);

  // Per axis-bit, the levels where that bit is 0 / 1 (bit j = MSB-first).
  std::vector<std::vector<double>> with0(mh), with1(mh);
  for (int g = 0; g < L; ++g)
    for (int j = 0; j < mh; ++j)
      ((g >> (mh - 1 - j)) & 1 ? with1[j] : with0[j]).push_back(level[g]);

  // Max-log per axis: LLR_j = (min_{b=1}(y-a)^2 - min_{b=0}(y-a)^2) / total_var
  // with per-axis noise variance total_var / 2.
  auto axis_llrs = [&](double y, double* out) {
    for (int j = 0; j < mh; ++j) {
      double d0 = 1e300, d1 = 1e300;
      for (double a : with0[j]) d0 = std::min(d0, (y - a) * (y - a));
      for (double a : with1[j]) d1 = std::min(d1, (y - a) * (y - a));
      out[j] = (d1 - d0) / total_var;
    }
  };

  std::vector<double> llrs(symbols.size() * static_cast<std::size_t>(m));
  for (std::size_t s = 0; s < symbols.size(); ++s) {
    axis_llrs(symbols[s].real(), &llrs[s * m]);
    axis_llrs(symbols[s].imag(), &llrs[s * m + mh]);
  }
  return llrs;
}

}  // namespace rsma

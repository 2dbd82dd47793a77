#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <map>
#include <vector>

#include "rsma/qam.hpp"
#include "rsma/rng.hpp"

using namespace rsma;
using bits_t = std::vector<std::uint8_t>;

namespace {

bits_t unpack(unsigned v, int n) {
  bits_t b(n);
  for (int j = 0; j < n; ++j) b[j] = (v >> (n - 1 - j)) & 1u;
  return b;
}

}  // namespace

TEST_CASE("qam_map: 4-QAM convention fixture") {
  const double a = 1.0 / std::sqrt(2.0);
  const std::vector<std::pair<unsigned, std::complex<double>>> fixture = {
      {0b00, {a, a}}, {0b01, {a, -a}}, {0b10, {-a, a}}, {0b11, {-a, -a}}};
  for (const auto& [word, want] : fixture) {
    const auto sym = qam_map(unpack(word, 2), 4);
    REQUIRE(sym.size() == 1);
    CHECK(std::abs(sym[0] - want) < 1e-15);
  }
}

TEST_CASE("qam_map: unit average energy, exhaustively per order") {
  for (int order : {4, 16, 64, 256}) {
    const int m = qam_bits_per_symbol(order);
    double energy = 0;
    for (int w = 0; w < order; ++w) {
      const auto sym = qam_map(unpack(static_cast<unsigned>(w), m), order);
      energy += std::norm(sym[0]);
    }
    CHECK(std::abs(energy / order - 1.0) < 1e-12);
  }
}

TEST_CASE("qam_map: all-zero bits hit the most positive corner; axis map is Gray") {
  for (int order : {4, 16, 64, 256}) {
    const int m = qam_bits_per_symbol(order);
    const int mh = m / 2;
    const int L = 1 << mh;

    // All-zero bit group -> most positive level on both axes.
    const auto corner = qam_map(bits_t(m, 0), order)[0];
    for (int w = 1; w < order; ++w) {
      const auto sym = qam_map(unpack(static_cast<unsigned>(w), m), order)[0];
      CHECK(sym.real() <= corner.real() + 1e-15);
      CHECK(sym.imag() <= corner.imag() + 1e-15);
    }

    // Sweep the I-axis bit group with Q bits fixed: sorted adjacent levels
    // must differ in exactly one bit (Gray property), and levels must be the
    // uniform odd grid.
    std::vector<std::pair<double, unsigned>> axis;
    for (unsigned g = 0; g < static_cast<unsigned>(L); ++g) {
      bits_t bits(m, 0);
      const auto gb = unpack(g, mh);
      std::copy(gb.begin(), gb.end(), bits.begin());
      axis.emplace_back(qam_map(bits, order)[0].real(), g);
    }
    std::sort(axis.begin(), axis.end());
    for (int i = 1; i < L; ++i) {
      CHECK(std::popcount(axis[i].second ^ axis[i - 1].second) == 1);
      CHECK(std::abs((axis[i].first - axis[i - 1].first) - (axis[1].first - axis[0].first)) <
            1e-12);
    }
  }
}

TEST_CASE("qam demap: zero-noise signs reproduce the bits for all orders") {
  auto key = StreamKey(42).chain(10);
  for (int order : {4, 16, 64, 256}) {
    const int m = qam_bits_per_symbol(order);
    bits_t bits(static_cast<std::size_t>(m) * 40);
    for (std::size_t i = 0; i < bits.size(); ++i)
      bits[i] = static_cast<std::uint8_t>(key.chain(order).bit(i));
    const auto syms = qam_map(bits, order);
    const auto llrs = qam_demap(syms, order, 1e-9, 0.0);
    REQUIRE(llrs.size() == bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
      REQUIRE(llrs[i] != 0.0);
      CHECK((llrs[i] > 0) == (bits[i] == 0));
    }
  }
}

TEST_CASE("qam demap: 4-QAM matches the closed-form max-log LLR") {
  // 4-QAM axis levels are +-1/sqrt(2), so the exact max-log LLR for each bit
  // is 4*a*y / total_var with a = 1/sqrt(2).
  const double a = 1.0 / std::sqrt(2.0);
  auto key = StreamKey(43).chain(11);
  const double noise_var = 0.3, interference_var = 0.2;
  std::vector<std::complex<double>> syms(25);
  for (std::size_t s = 0; s < syms.size(); ++s) syms[s] = 2.0 * key.cnormal(s);
  const auto llrs = qam_demap(syms, 4, noise_var, interference_var);
  for (std::size_t s = 0; s < syms.size(); ++s) {
    const double tv = noise_var + interference_var;
    CHECK(llrs[2 * s] == doctest::Approx(4.0 * a * syms[s].real() / tv).epsilon(1e-12));
    CHECK(llrs[2 * s + 1] == doctest::Approx(4.0 * a * syms[s].imag() / tv).epsilon(1e-12));
  }
}

TEST_CASE("qam demap: interference variance folds into the noise variance exactly") {
  auto key = StreamKey(44).chain(12);
  std::vector<std::complex<double>> syms(30);
  for (std::size_t s = 0; s < syms.size(); ++s) syms[s] = 1.5 * key.cnormal(s);
  for (int order : {16, 256}) {
    const auto one = qam_demap(syms, order, 0.4, 0.35);
    const auto two = qam_demap(syms, order, 0.75, 0.0);
    CHECK(one == two);
  }
}

TEST_CASE("qam: argument validation") {
  CHECK_THROWS_AS(qam_bits_per_symbol(8), std::invalid_argument);
  CHECK_THROWS_AS(qam_map(bits_t(3, 0), 4), std::invalid_argument);
  CHECK_THROWS_AS(qam_map(bits_t(4, 0), 32), std::invalid_argument);
  const std::vector<std::complex<double>> syms(2, {0.1, 0.1});
  CHECK_THROWS_AS(qam_demap(syms, 16, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(qam_demap(syms, 16, -1.0, 0.5), std::invalid_argument);
}

// Offline AWGN calibration of the AMC table thresholds.
//
// For each (modulation order, code rate) pair, bisects the AWGN SNR at which
// the block error rate of the polar-coded QAM link (N=256, CRC-11, list 8,
// rate-matched design SNR via codeword_spec_for) crosses the 1e-2 target.
// Prints the table as source-ready initializers.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <vector>

#include <CLI11.hpp>

#include "rsma/amc.hpp"
#include "rsma/polar.hpp"
#include "rsma/qam.hpp"
#include "rsma/rng.hpp"

using namespace rsma;

namespace {

double measure_bler(const Mcs& mcs, double snr_db, int trials, StreamKey key) {
  const auto spec = codeword_spec_for(mcs);
  const int order = mcs.modulation_order;
  const int m = qam_bits_per_symbol(order);
  const int n_sym = (kChainBlockLength + m - 1) / m;
  const double noise_var = std::pow(10.0, -snr_db / 10.0);  // unit symbol energy
  const double amp = std::sqrt(noise_var);

  int errors = 0;
  for (int t = 0; t < trials; ++t) {
    const auto lane = key.chain(t);
    std::vector<std::uint8_t> payload(spec.payload_length());
    for (std::size_t i = 0; i < payload.size(); ++i)
      payload[i] = static_cast<std::uint8_t>(lane.bit(i));
    auto cw = polar_encode(spec, payload);
    cw.resize(static_cast<std::size_t>(n_sym) * m, 0);  // zero tail padding
    auto symbols = qam_map(cw, order);
    for (int s = 0; s < n_sym; ++s) symbols[s] += amp * lane.chain(tags::kNoise).cnormal(s);
    auto llrs = qam_demap(symbols, order, noise_var, 0.0);
    llrs.resize(kChainBlockLength);  // drop pad-bit LLRs
    const auto dec = polar_decode(spec, llrs);
    if (!dec.crc_pass || dec.payload != payload) ++errors;
  }
  return static_cast<double>(errors) / trials;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AMC threshold calibration (AWGN bisection per MCS)"};
  int coarse_trials = 400;
  int fine_trials = 2400;
  double target = 1e-2;
  std::uint64_t seed = 20240901;
  app.add_option("--coarse-trials", coarse_trials, "trials per probe in the coarse scan");
  app.add_option("--fine-trials", fine_trials, "trials per probe in the bisection");
  app.add_option("--target", target, "BLER target");
  app.add_option("--seed", seed, "base RNG seed");
  CLI11_PARSE(app, argc, argv);

  // Sorted by spectral efficiency; low-rate entries at high orders give the
  // link adaptation short-duration options for mid-range rates.
  const std::vector<std::pair<int, int>> entries = {
      {4, 64},    {4, 96},    {4, 128},   {16, 96},   {16, 128},  {64, 96},
      {16, 160},  {64, 120},  {16, 192},  {64, 144},  {64, 170},  {256, 128},
      {64, 192},  {64, 214},  {256, 168}, {256, 192}, {256, 224}, {256, 235},
  };

  std::printf("// AWGN thresholds @ BLER %.0e, N=%d, CRC-11, list 8\n", target, kChainBlockLength);
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const auto [order, info] = entries[e];
    const Mcs mcs{order, static_cast<double>(info) / kChainBlockLength, 0.0};
    const StreamKey base = StreamKey{seed}.chain(e);

    // Coarse 1 dB scan to bracket the crossing.
    double lo = -8.0, hi = 40.0;
    bool bracketed = false;
    for (double s = lo; s <= hi; s += 1.0) {
      const double b = measure_bler(mcs, s, coarse_trials, base.chain(100 + (int)s));
      if (b <= target) {
        hi = s;
        lo = s - 1.0;
        bracketed = true;
        break;
      }
    }
    if (!bracketed) {
      std::printf("// order %d info %d: no crossing below %.0f dB\n", order, info, hi);
      continue;
    }
    for (int it = 0; it < 7; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double b = measure_bler(mcs, mid, fine_trials, base.chain(200 + it));
      (b <= target ? hi : lo) = mid;
    }
    const double thr = 0.5 * (lo + hi);
    const double se = qam_bits_per_symbol(order) * static_cast<double>(info) / kChainBlockLength;
    std::printf("      {%d, %d.0 / 256.0, %.2f},%s// SE %.2f\n", order, info, thr,
                order >= 100 ? " " : "   ", se);
    std::fflush(stdout);
  }
  return 0;
}

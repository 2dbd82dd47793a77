#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsma/polar.hpp"

namespace rsma {

// Block length shared by every entry of the adaptive modulation-and-coding
// table (native polar rates, no puncturing: rates are chosen so that
// code_rate * block length is an exact integer).
inline constexpr int kChainBlockLength = 256;

// One modulation-order / code-rate pair with its link-adaptation threshold:
// min_sinr_db is the AWGN SNR at which the entry's block error rate reaches
// 1e-2 (calibrated offline by bisection; see tools/amc_calibrate). It also
// serves as the polar design SNR for the entry's codeword spec.
struct Mcs {
  int modulation_order = 4;
  double code_rate = 0.5;
  double min_sinr_db = 0.0;

  // bits/symbol * code_rate.
  [[nodiscard]] double spectral_efficiency() const;

  // code_rate * block_length, which must be an exact integer > 11 (CRC-11
  // rides inside); throws std::invalid_argument otherwise.
  [[nodiscard]] int info_length(int block_length = kChainBlockLength) const;
};

// Enforces: non-empty; valid orders; code_rate in (0,1) with integral
// info_length; strictly ascending spectral efficiency; strictly increasing
// min_sinr_db. Throws std::invalid_argument on the first violation.
void validate_amc_table(std::span<const Mcs> table);

// 17-entry default table covering spectral efficiencies 0.5 to 7.34, with
// low-rate entries at the higher orders so mid-range rates are reachable at
// short airtime; thresholds frozen from the offline AWGN calibration at
// block length 256, CRC-11, list size 8.
std::vector<Mcs> default_amc_table();

// Loads a JSON array of {"order": int, "rate": real, "min_sinr_db": real}
// and validates it.
std::vector<Mcs> load_amc_table(const std::string& path);

// Highest-spectral-efficiency entry with
// spectral_efficiency <= backoff * predicted_rate, or std::nullopt for
// no-transmission. predicted_rate is in bps/Hz.
std::optional<Mcs> amc_select(double predicted_rate, std::span<const Mcs> table,
                              double backoff = 0.9);

// Polar codeword spec for an entry. The frozen set is constructed at the
// BPSK-equivalent design SNR of the entry's code rate,
// 10*log10(2^(2R) - 1): the Gaussian-approximation construction models BPSK
// LLR statistics, and feeding it the raw QAM symbol SNR collapses the
// reliability ranking at high order (verified empirically during threshold
// calibration; the rate-matched value tracks the per-entry optimum across
// the whole table).
CodewordSpec codeword_spec_for(const Mcs& mcs, int block_length = kChainBlockLength);

}  // namespace rsma

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rsma {

// CRC-11, generator x^11 + x^10 + x^9 + x^5 + 1, MSB-first, zero initial
// register. crc11_remainder feeds the bits followed by 11 zeros (i.e. the
// remainder of message(x) * x^11), so a sequence with its CRC appended has
// remainder zero.
std::uint16_t crc11_remainder(std::span<const std::uint8_t> bits);
void crc11_append(std::vector<std::uint8_t>& bits);
bool crc11_check(std::span<const std::uint8_t> bits);

// Polar code parameters. info_length counts payload plus CRC bits. A
// crc_length of 0 disables CRC aiding (used by small-N conformance tests);
// the production chain always uses 11.
struct CodewordSpec {
  int block_length = 256;
  int info_length = 0;
  int crc_length = 11;
  int list_size = 8;
  double design_snr_db = 0.0;
  std::vector<std::uint8_t> frozen;  // size block_length, 1 = frozen position
  std::vector<int> info_positions;   // ascending non-frozen indices

  [[nodiscard]] int payload_length() const { return info_length - crc_length; }
  void validate() const;
};

// Frozen-set construction by the density-evolution Gaussian approximation at
// the given design SNR; ties broken toward lower indices.
CodewordSpec make_codeword_spec(int block_length, int info_length, double design_snr_db,
                                int list_size = 8, int crc_length = 11);

// The N x N polar transform (u -> u F^{tensor n}) in natural bit order.
std::vector<std::uint8_t> polar_transform(std::vector<std::uint8_t> u);

// CRC append, info placement, polar transform. payload.size() must equal
// spec.payload_length().
std::vector<std::uint8_t> polar_encode(const CodewordSpec& spec,
                                       std::span<const std::uint8_t> payload);

struct PolarDecodeResult {
  std::vector<std::uint8_t> payload;  // payload_length() bits
  bool crc_pass = false;
  double metric = 0.0;  // negative log-likelihood path metric (lower = better)
};

// CRC-aided successive-cancellation list decoding with exact path metrics.
// LLR sign convention: positive LLR means bit 0 is more likely. Returns the
// best CRC-passing list entry, otherwise the best path with crc_pass=false
// (for crc_length 0, the best path with crc_pass=true).
PolarDecodeResult polar_decode(const CodewordSpec& spec, std::span<const double> llrs);

}  // namespace rsma

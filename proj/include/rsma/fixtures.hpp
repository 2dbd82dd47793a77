#pragma once

#include <string>
#include <vector>

#include "rsma/polar.hpp"

namespace rsma {

// One frozen codec conformance vector: a payload and the codeword the polar
// encoder must produce for the stated spec. Bits are packed MSB-first into
// hex strings; the trailing nibble is zero-padded when the bit count is not
// a multiple of four.
struct CodecFixture {
  int block_length = 0;
  int info_length = 0;
  int crc_length = 0;
  double design_snr_db = 0.0;
  std::vector<std::uint8_t> payload;
  std::vector<std::uint8_t> codeword;
};

std::string bits_to_hex(const std::vector<std::uint8_t>& bits);
std::vector<std::uint8_t> hex_to_bits(const std::string& hex, int bit_count);

// Reads a JSON fixture file: an array of objects with keys block_length,
// info_length, crc_length, design_snr_db, payload_hex, codeword_hex.
std::vector<CodecFixture> load_codec_fixtures(const std::string& path);
void save_codec_fixtures(const std::vector<CodecFixture>& fixtures, const std::string& path);

// Deterministically generates the canonical fixture set: for each AMC code
// rate at N=256 plus an N=16 toy spec, several seeded payloads with their
// encodings.
std::vector<CodecFixture> make_codec_fixtures();

struct SelftestReport {
  int total = 0;
  int encode_failures = 0;   // encoder output != frozen codeword
  int decode_failures = 0;   // noiseless decode != payload or CRC fail
  bool ok() const { return total > 0 && encode_failures == 0 && decode_failures == 0; }
};

// Checks every fixture both ways: re-encode the payload and compare against
// the frozen codeword, then decode the codeword from noiseless LLRs
// (+/-llr_magnitude per bit) and compare against the payload.
SelftestReport run_codec_selftest(const std::vector<CodecFixture>& fixtures,
                                  double llr_magnitude = 18.0);

}  // namespace rsma

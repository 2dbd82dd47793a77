#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rsma/amc.hpp"
#include "rsma/rng.hpp"
#include "rsma/types.hpp"

namespace rsma {

// Link-level transceiver chain: polar-coded Gray-QAM streams superposed by
// the precoders, received through the true channels, and recovered with
// CRC-gated successive interference cancellation. One fading block carries at
// most one codeword per stream; the common codeword packs every user's common
// share contiguously (user 0's share first).
//
// Per-trial randomness is fully addressed by the trial key:
//   payload bits  key.chain(tags::kPayload).chain(0)   common stream
//                 key.chain(tags::kPayload).chain(k+1) private stream k
//   noise         key.chain(tags::kNoise).chain(k), counter = sample index.

using bits_t = std::vector<std::uint8_t>;

// AMC decisions for one fading block; nullopt = that stream stays silent.
struct StreamPlan {
  std::optional<Mcs> common;
  std::vector<std::optional<Mcs>> private_streams;  // one slot per user

  [[nodiscard]] int num_users() const { return static_cast<int>(private_streams.size()); }
  void validate(int num_users) const;  // sizes + table-entry sanity
};

// The per-user slices of the original message W_k: W_{c,k} rides the common
// codeword, W_{p,k} the user's private codeword. Parts are disjoint by
// construction; empty parts mean the stream is silent or the share is zero.
struct MessageFrame {
  int user = 0;
  bits_t common_part;
  bits_t private_part;
};

// Transmit-side payload plan: the frames run_trial encodes, derived
// deterministically from (plan, split, key). The common payload of
// codeword_spec_for(*plan.common) is cut at boundaries
// round(payload_length * cumulative split); user k receives
// [boundary_{k-1}, boundary_k).
std::vector<MessageFrame> make_frames(const StreamPlan& plan, std::span<const double> split,
                                      StreamKey key);

// Outcome of one fading block (Eq.-(7) accounting unit).
struct TrialRecord {
  int channel_uses = 0;                  // S^(l): max symbol count over live streams
  std::vector<long long> recovered_bits; // D_{s,k}: CRC-gated payload credit
  std::vector<long long> addressed_bits; // bits addressed to user k in this trial
  // Per-user slice sizes of the common payload (zero when no common stream);
  // recovered_bits[k] == common_decoded[k]*common_share_bits[k]
  //                      + private_decoded[k]*private_payload_bits.
  std::vector<long long> common_share_bits;
  bool common_transmitted = false;
  std::vector<std::uint8_t> private_transmitted;  // per user
  std::vector<std::uint8_t> common_decoded;       // per user: own common CRC pass
  std::vector<std::uint8_t> private_decoded;      // per user: private CRC pass
  std::vector<int> sic_attempted;  // 1 iff common live and user k has a private stream
  std::vector<int> sic_performed;  // 1 iff the common estimate was actually subtracted
};

// Per-user receiver: (1) decode the common stream treating all privates as
// interference; (2) on CRC pass re-encode, re-modulate and subtract its
// contribution (exactly one SIC layer); (3) decode the own private stream.
// The receiver knows its true channel and all precoders (genie receiver-side
// statistics); residual-interference variances are exact per symbol segment.
struct SicResult {
  bits_t common_payload;
  bits_t private_payload;
  bool common_crc = false;
  bool private_crc = false;
  bool sic_attempted = false;
  bool sic_performed = false;
};

// genie_common: when non-empty, the true transmitted common symbols; the
// subtraction then uses them unconditionally (test instrumentation for the
// failed-vs-genie comparison).
SicResult sic_receive(int user, std::span<const std::complex<double>> samples,
                      const ChannelSetd& channels, const PrecoderSetd& precoders,
                      const StreamPlan& plan,
                      std::span<const std::complex<double>> genie_common = {});

// One fading block end-to-end. split: common-rate fractions (the optimizer's
// common_split). Credit rule: user k earns its common share on its own common
// CRC pass plus its private payload on the private CRC pass.
TrialRecord run_trial(const ChannelSetd& channels, const PrecoderSetd& precoders,
                      const StreamPlan& plan, std::span<const double> split, StreamKey key,
                      bool genie_common_removal = false);

// Symbols needed for one codeword of the entry (ceil(N / bits-per-symbol);
// 64-QAM pads the last symbol with known zero bits).
int stream_symbol_count(const Mcs& mcs);

}  // namespace rsma

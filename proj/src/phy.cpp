#include "rsma/phy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "rsma/polar.hpp"
#include "rsma/qam.hpp"

namespace rsma {

namespace {

constexpr double kGainFloor = 1e-300;  // below this a stream is undecodable

struct EncodedStream {
  CodewordSpec spec;
  bits_t payload;
  std::vector<std::complex<double>> symbols;  // length stream_symbol_count(mcs)
};

EncodedStream encode_stream(const Mcs& mcs, bits_t payload) {
  EncodedStream es{codeword_spec_for(mcs), std::move(payload), {}};
  auto cw = polar_encode(es.spec, es.payload);
  const int m = qam_bits_per_symbol(mcs.modulation_order);
  cw.resize(static_cast<std::size_t>(stream_symbol_count(mcs)) * m, 0);
  es.symbols = qam_map(cw, mcs.modulation_order);
  return es;
}

bits_t random_payload(StreamKey lane, int n) {
  bits_t out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(lane.bit(i));
  return out;
}

// Cumulative-rounding cut points of the common payload: user k's share is
// [bound[k], bound[k+1]).
std::vector<int> share_boundaries(int total, std::span<const double> split) {
  std::vector<int> bounds(split.size() + 1, 0);
  double cum = 0;
  for (std::size_t k = 0; k < split.size(); ++k) {
    cum += split[k];
    bounds[k + 1] = static_cast<int>(std::llround(total * std::min(1.0, cum)));
  }
  return bounds;
}

// An interfering stream as seen by one receiver: power gain and how many of
// the frame's symbols it occupies.
struct Interferer {
  double power = 0;
  int symbols = 0;
};

// Demap + decode one stream from raw samples. The stream occupies the first
// n_sym symbols with complex gain g; interference is exact per symbol
// segment (each interferer is live only for its own first `symbols` uses).
PolarDecodeResult decode_stream(std::span<const std::complex<double>> samples,
                                std::complex<double> g, const Mcs& mcs,
                                const CodewordSpec& spec, double noise_var,
                                std::span<const Interferer> interferers) {
  const int n_sym = stream_symbol_count(mcs);
  const double g2 = std::norm(g);
  if (g2 < kGainFloor) {
    // Unreachable stream: no information. Report a failed decode without
    // feeding the decoder degenerate LLRs.
    PolarDecodeResult res;
    res.payload.assign(static_cast<std::size_t>(spec.payload_length()), 0);
    res.crc_pass = false;
    res.metric = 0.0;
    return res;
  }

  std::vector<std::complex<double>> eq(static_cast<std::size_t>(n_sym));
  for (int t = 0; t < n_sym; ++t) eq[static_cast<std::size_t>(t)] = samples[static_cast<std::size_t>(t)] / g;

  // Segment boundaries where the interference mix changes.
  std::vector<int> cuts = {0, n_sym};
  for (const auto& it : interferers)
    if (it.symbols > 0 && it.symbols < n_sym) cuts.push_back(it.symbols);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<double> llrs;
  llrs.reserve(static_cast<std::size_t>(n_sym) * static_cast<std::size_t>(qam_bits_per_symbol(mcs.modulation_order)));
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const int a = cuts[c], b = cuts[c + 1];
    double interference = 0;
    for (const auto& it : interferers)
      if (it.symbols > a) interference += it.power;
    const auto seg = qam_demap(std::span(eq).subspan(static_cast<std::size_t>(a), static_cast<std::size_t>(b - a)),
                               mcs.modulation_order, noise_var / g2, interference / g2);
    llrs.insert(llrs.end(), seg.begin(), seg.end());
  }
  llrs.resize(static_cast<std::size_t>(spec.block_length));  // drop known-zero pad-bit LLRs
  return polar_decode(spec, llrs);
}

}  // namespace

int stream_symbol_count(const Mcs& mcs) {
  const int m = qam_bits_per_symbol(mcs.modulation_order);
  return (kChainBlockLength + m - 1) / m;
}

void StreamPlan::validate(int num_users) const {
  if (static_cast<int>(private_streams.size()) != num_users)
    throw std::invalid_argument("StreamPlan: expected " + std::to_string(num_users) +
                                " private stream slots, got " +
                                std::to_string(private_streams.size()));
  if (common) (void)common->info_length();
  for (const auto& p : private_streams)
    if (p) (void)p->info_length();
}

std::vector<MessageFrame> make_frames(const StreamPlan& plan, std::span<const double> split,
                                      StreamKey key) {
  const int K = plan.num_users();
  if (plan.common && static_cast<int>(split.size()) != K)
    throw std::invalid_argument("make_frames: split size mismatch");

  std::vector<MessageFrame> frames(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) frames[static_cast<std::size_t>(k)].user = k;

  if (plan.common) {
    const int total = codeword_spec_for(*plan.common).payload_length();
    const auto payload = random_payload(key.chain(tags::kPayload).chain(0), total);
    const auto bounds = share_boundaries(total, split);
    for (int k = 0; k < K; ++k)
      frames[static_cast<std::size_t>(k)].common_part.assign(payload.begin() + bounds[static_cast<std::size_t>(k)],
                                                             payload.begin() + bounds[static_cast<std::size_t>(k) + 1]);
  }
  for (int k = 0; k < K; ++k)
    if (plan.private_streams[static_cast<std::size_t>(k)]) {
      const int n = codeword_spec_for(*plan.private_streams[static_cast<std::size_t>(k)]).payload_length();
      frames[static_cast<std::size_t>(k)].private_part =
          random_payload(key.chain(tags::kPayload).chain(static_cast<std::uint64_t>(k) + 1), n);
    }
  return frames;
}

SicResult sic_receive(int user, std::span<const std::complex<double>> samples,
                      const ChannelSetd& channels, const PrecoderSetd& precoders,
                      const StreamPlan& plan,
                      std::span<const std::complex<double>> genie_common) {
  const int K = static_cast<int>(channels.num_users());
  plan.validate(K);
  if (user < 0 || user >= K) throw std::out_of_range("sic_receive: user index");
  if (channels.num_tx() != precoders.num_tx() || K != precoders.num_users())
    throw std::invalid_argument("sic_receive: channel/precoder shape mismatch");

  const auto h = channels.true_channels.col(user);
  const double noise_var = channels.noise_vars[user];
  const bool common_live = plan.common.has_value();
  const bool own_private = plan.private_streams[static_cast<std::size_t>(user)].has_value();

  SicResult res;
  res.sic_attempted = common_live && own_private;

  std::vector<std::complex<double>> y(samples.begin(), samples.end());

  std::optional<CodewordSpec> common_spec;
  std::complex<double> g_c = 0;
  if (common_live) {
    common_spec = codeword_spec_for(*plan.common);
    g_c = h.dot(precoders.common);

    // Stage 1: common stream, every live private stream is interference.
    std::vector<Interferer> interferers;
    for (int j = 0; j < K; ++j)
      if (const auto& pj = plan.private_streams[static_cast<std::size_t>(j)])
        interferers.push_back({std::norm(h.dot(precoders.privates.col(j))),
                               stream_symbol_count(*pj)});
    const int n_c = stream_symbol_count(*plan.common);
    if (static_cast<int>(y.size()) < n_c)
      throw std::invalid_argument("sic_receive: not enough samples for the common stream");
    const auto dec = decode_stream(y, g_c, *plan.common, *common_spec, noise_var, interferers);
    res.common_payload = dec.payload;
    res.common_crc = dec.crc_pass;
  }

  // Stage 2: exactly one SIC layer — subtract the common estimate before the
  // own private stream, gated on the own common CRC (or forced by the genie).
  if (common_live && own_private) {
    const int n_c = stream_symbol_count(*plan.common);
    if (!genie_common.empty()) {
      if (static_cast<int>(genie_common.size()) != n_c)
        throw std::invalid_argument("sic_receive: genie symbol count mismatch");
      for (int t = 0; t < n_c; ++t) y[static_cast<std::size_t>(t)] -= g_c * genie_common[static_cast<std::size_t>(t)];
      res.sic_performed = true;
    } else if (res.common_crc) {
      const auto est = encode_stream(*plan.common, res.common_payload);
      for (int t = 0; t < n_c; ++t) y[static_cast<std::size_t>(t)] -= g_c * est.symbols[static_cast<std::size_t>(t)];
      res.sic_performed = true;
    }
  }

  // Stage 3: own private stream; other privates always interfere, the common
  // only if it was not subtracted.
  if (own_private) {
    const Mcs& mcs = *plan.private_streams[static_cast<std::size_t>(user)];
    const auto spec = codeword_spec_for(mcs);
    std::vector<Interferer> interferers;
    for (int j = 0; j < K; ++j)
      if (j != user)
        if (const auto& pj = plan.private_streams[static_cast<std::size_t>(j)])
          interferers.push_back({std::norm(h.dot(precoders.privates.col(j))),
                                 stream_symbol_count(*pj)});
    if (common_live && !res.sic_performed)
      interferers.push_back({std::norm(g_c), stream_symbol_count(*plan.common)});
    const int n_p = stream_symbol_count(mcs);
    if (static_cast<int>(y.size()) < n_p)
      throw std::invalid_argument("sic_receive: not enough samples for the private stream");
    const auto dec = decode_stream(y, h.dot(precoders.privates.col(user)), mcs, spec,
                                   noise_var, interferers);
    res.private_payload = dec.payload;
    res.private_crc = dec.crc_pass;
  }
  return res;
}

TrialRecord run_trial(const ChannelSetd& channels, const PrecoderSetd& precoders,
                      const StreamPlan& plan, std::span<const double> split, StreamKey key,
                      bool genie_common_removal) {
  const int K = static_cast<int>(channels.num_users());
  plan.validate(K);
  if (channels.num_tx() != precoders.num_tx() || K != precoders.num_users())
    throw std::invalid_argument("run_trial: channel/precoder shape mismatch");

  const auto frames = make_frames(plan, split, key);

  // Encode every live stream.
  std::optional<EncodedStream> common;
  std::vector<int> bounds;
  if (plan.common) {
    bits_t payload;
    for (const auto& f : frames) payload.insert(payload.end(), f.common_part.begin(), f.common_part.end());
    bounds = share_boundaries(static_cast<int>(payload.size()), split);
    common = encode_stream(*plan.common, std::move(payload));
  }
  std::vector<std::optional<EncodedStream>> privates(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k)
    if (plan.private_streams[static_cast<std::size_t>(k)])
      privates[static_cast<std::size_t>(k)] =
          encode_stream(*plan.private_streams[static_cast<std::size_t>(k)], frames[static_cast<std::size_t>(k)].private_part);

  int S = 0;
  if (common) S = std::max(S, static_cast<int>(common->symbols.size()));
  for (const auto& p : privates)
    if (p) S = std::max(S, static_cast<int>(p->symbols.size()));

  TrialRecord rec;
  rec.channel_uses = S;
  rec.recovered_bits.assign(static_cast<std::size_t>(K), 0);
  rec.addressed_bits.assign(static_cast<std::size_t>(K), 0);
  rec.common_transmitted = plan.common.has_value();
  rec.private_transmitted.assign(static_cast<std::size_t>(K), 0);
  rec.common_decoded.assign(static_cast<std::size_t>(K), 0);
  rec.private_decoded.assign(static_cast<std::size_t>(K), 0);
  rec.sic_attempted.assign(static_cast<std::size_t>(K), 0);
  rec.sic_performed.assign(static_cast<std::size_t>(K), 0);
  rec.common_share_bits.assign(static_cast<std::size_t>(K), 0);
  if (common)
    for (std::size_t ku = 0; ku < static_cast<std::size_t>(K); ++ku)
      rec.common_share_bits[ku] = bounds[ku + 1] - bounds[ku];
  if (S == 0) return rec;  // nothing transmitted

  for (int k = 0; k < K; ++k) {
    const auto h = channels.true_channels.col(k);

    // Synthesize this user's received frame.
    std::vector<std::complex<double>> y(static_cast<std::size_t>(S), {0.0, 0.0});
    if (common) {
      const auto g = h.dot(precoders.common);
      for (std::size_t t = 0; t < common->symbols.size(); ++t) y[t] += g * common->symbols[t];
    }
    for (int j = 0; j < K; ++j)
      if (const auto& p = privates[static_cast<std::size_t>(j)]) {
        const auto g = h.dot(precoders.privates.col(j));
        for (std::size_t t = 0; t < p->symbols.size(); ++t) y[t] += g * p->symbols[t];
      }
    const auto noise_lane = key.chain(tags::kNoise).chain(static_cast<std::uint64_t>(k));
    const double sigma = std::sqrt(channels.noise_vars[k]);
    for (int t = 0; t < S; ++t) y[static_cast<std::size_t>(t)] += sigma * noise_lane.cnormal(static_cast<std::uint64_t>(t));

    const auto res = sic_receive(
        k, y, channels, precoders, plan,
        genie_common_removal && common ? std::span<const std::complex<double>>(common->symbols)
                                       : std::span<const std::complex<double>>{});

    const std::size_t ku = static_cast<std::size_t>(k);
    rec.private_transmitted[ku] = privates[ku].has_value() ? 1 : 0;
    rec.common_decoded[ku] = res.common_crc ? 1 : 0;
    rec.private_decoded[ku] = res.private_crc ? 1 : 0;
    rec.sic_attempted[ku] = res.sic_attempted ? 1 : 0;
    rec.sic_performed[ku] = res.sic_performed ? 1 : 0;

    const long long share = rec.common_share_bits[ku];
    long long own_private = privates[ku] ? static_cast<long long>(privates[ku]->payload.size()) : 0;
    rec.addressed_bits[ku] = share + own_private;
    if (res.common_crc) rec.recovered_bits[ku] += share;
    if (res.private_crc) rec.recovered_bits[ku] += own_private;
  }
  return rec;
}

}  // namespace rsma

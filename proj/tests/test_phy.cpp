#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "rsma/amc.hpp"
#include "rsma/phy.hpp"
#include "rsma/polar.hpp"
#include "rsma/qam.hpp"
#include "rsma/types.hpp"

using namespace rsma;

namespace {

Mcs mcs_4qam_half() { return {4, 0.5, 1.89}; }  // payload 117 bits

// Orthogonal 2-user setup: h_0 = e_0, h_1 = e_1, common precoder lighting
// both users equally, zero cross-talk between private streams.
struct CleanBench {
  ChannelSetd ch;
  PrecoderSetd prec;
  StreamPlan plan;
  std::vector<double> split;
};

CleanBench clean_bench(double common_power = 1e6, double private_power = 1e2,
                       double noise_var = 1.0) {
  CleanBench b;
  b.ch.true_channels = CMat<double>::Zero(2, 2);
  b.ch.true_channels(0, 0) = 1.0;
  b.ch.true_channels(1, 1) = 1.0;
  b.ch.estimates = b.ch.true_channels;
  b.ch.errors = CMat<double>::Zero(2, 2);
  b.ch.noise_vars = RVec<double>::Constant(2, noise_var);
  b.ch.validate();

  b.prec.common = CVec<double>::Zero(2);
  b.prec.common << std::sqrt(common_power / 2.0), std::sqrt(common_power / 2.0);
  b.prec.privates = CMat<double>::Zero(2, 2);
  b.prec.privates(0, 0) = std::sqrt(private_power);
  b.prec.privates(1, 1) = std::sqrt(private_power);
  b.prec.common_split = RVec<double>::Constant(2, 0.5);
  b.prec.power_budget = common_power + 2 * private_power + 1.0;

  b.plan.common = mcs_4qam_half();
  b.plan.private_streams = {mcs_4qam_half(), mcs_4qam_half()};
  b.split = {0.5, 0.5};
  return b;
}

long long sum(const std::vector<long long>& v) {
  long long s = 0;
  for (auto x : v) s += x;
  return s;
}

}  // namespace

TEST_CASE("run_trial: full-credit arithmetic on a clean channel") {
  const auto b = clean_bench();
  const auto rec = run_trial(b.ch, b.prec, b.plan, b.split, StreamKey(100).chain(1));

  // Both streams are 4-QAM over N=256: 128 symbols each.
  CHECK(rec.channel_uses == 128);
  REQUIRE(rec.recovered_bits.size() == 2);

  // Common payload 117 bits, split 0.5/0.5 -> cut at llround(58.5) = 59.
  const long long share0 = 59, share1 = 58, priv = 117;
  CHECK(rec.common_transmitted);
  CHECK(rec.common_decoded == std::vector<std::uint8_t>{1, 1});
  CHECK(rec.private_decoded == std::vector<std::uint8_t>{1, 1});
  CHECK(rec.recovered_bits[0] == share0 + priv);
  CHECK(rec.recovered_bits[1] == share1 + priv);
  CHECK(rec.addressed_bits[0] == share0 + priv);
  CHECK(rec.addressed_bits[1] == share1 + priv);

  // Exactly one SIC layer per RSMA user, and it ran.
  CHECK(rec.sic_attempted == std::vector<int>{1, 1});
  CHECK(rec.sic_performed == std::vector<int>{1, 1});

  // Throughput cannot exceed the summed assigned spectral efficiencies.
  const double se_sum = b.plan.common->spectral_efficiency() +
                        b.plan.private_streams[0]->spectral_efficiency() +
                        b.plan.private_streams[1]->spectral_efficiency();
  CHECK(static_cast<double>(sum(rec.recovered_bits)) / rec.channel_uses <= se_sum);
}

TEST_CASE("run_trial: everything fails under crushing noise") {
  auto b = clean_bench(1e-6, 1e-8, 1.0);  // signals buried far below the noise
  const auto rec = run_trial(b.ch, b.prec, b.plan, b.split, StreamKey(101).chain(1));
  CHECK(rec.recovered_bits == std::vector<long long>{0, 0});
  CHECK(rec.common_decoded == std::vector<std::uint8_t>{0, 0});
  CHECK(rec.private_decoded == std::vector<std::uint8_t>{0, 0});
  // The SIC stage is structurally present but never ran.
  CHECK(rec.sic_attempted == std::vector<int>{1, 1});
  CHECK(rec.sic_performed == std::vector<int>{0, 0});
  CHECK(rec.channel_uses == 128);
}

TEST_CASE("run_trial: credit equals flags times shares on every trial") {
  // Moderate SNR so outcomes are mixed; the credit must always be exactly
  // (common flag) * share + (private flag) * private payload.
  auto b = clean_bench(40.0, 8.0, 1.0);
  for (int t = 0; t < 40; ++t) {
    const auto rec = run_trial(b.ch, b.prec, b.plan, b.split, StreamKey(102).chain(t));
    const long long share[2] = {59, 58};
    for (int k = 0; k < 2; ++k) {
      const long long expect = (rec.common_decoded[k] ? share[k] : 0) +
                               (rec.private_decoded[k] ? 117 : 0);
      CHECK(rec.recovered_bits[k] == expect);
      CHECK(rec.recovered_bits[k] <= rec.addressed_bits[k]);
      CHECK(rec.sic_performed[k] <= rec.sic_attempted[k]);
    }
  }
}

TEST_CASE("run_trial: determinism and seed sensitivity") {
  auto b = clean_bench(40.0, 8.0, 1.0);
  const auto a1 = run_trial(b.ch, b.prec, b.plan, b.split, StreamKey(103).chain(7));
  const auto a2 = run_trial(b.ch, b.prec, b.plan, b.split, StreamKey(103).chain(7));
  CHECK(a1.recovered_bits == a2.recovered_bits);
  CHECK(a1.common_decoded == a2.common_decoded);
  CHECK(a1.private_decoded == a2.private_decoded);
  CHECK(a1.sic_performed == a2.sic_performed);
  CHECK(a1.channel_uses == a2.channel_uses);

  // Different keys must draw different payloads.
  const auto f1 = make_frames(b.plan, b.split, StreamKey(104).chain(1));
  const auto f2 = make_frames(b.plan, b.split, StreamKey(104).chain(2));
  CHECK(f1[0].private_part != f2[0].private_part);
}

TEST_CASE("make_frames: disjoint contiguous shares partition the payloads") {
  auto b = clean_bench();
  const auto frames = make_frames(b.plan, b.split, StreamKey(105).chain(1));
  REQUIRE(frames.size() == 2);
  CHECK(frames[0].user == 0);
  CHECK(frames[1].user == 1);
  CHECK(frames[0].common_part.size() == 59);
  CHECK(frames[1].common_part.size() == 58);
  CHECK(frames[0].private_part.size() == 117);
  CHECK(frames[1].private_part.size() == 117);

  // Identical key -> identical frames.
  const auto again = make_frames(b.plan, b.split, StreamKey(105).chain(1));
  CHECK(frames[0].common_part == again[0].common_part);
  CHECK(frames[1].private_part == again[1].private_part);

  // Unbalanced split: everything to user 0.
  const auto skew = make_frames(b.plan, std::vector<double>{1.0, 0.0}, StreamKey(105).chain(2));
  CHECK(skew[0].common_part.size() == 117);
  CHECK(skew[1].common_part.empty());

  // SDMA-style plan: no common parts at all.
  StreamPlan sdma;
  sdma.private_streams = {mcs_4qam_half(), mcs_4qam_half()};
  const auto sd = make_frames(sdma, std::vector<double>{0.0, 0.0}, StreamKey(105).chain(3));
  CHECK(sd[0].common_part.empty());
  CHECK(sd[1].common_part.empty());
  CHECK(sd[0].private_part.size() == 117);
}

TEST_CASE("sic counters: RSMA / NOMA / SDMA structural pattern") {
  auto b = clean_bench();

  SUBCASE("RSMA: both users SIC") {
    const auto rec = run_trial(b.ch, b.prec, b.plan, b.split, StreamKey(106).chain(1));
    CHECK(rec.sic_attempted == std::vector<int>{1, 1});
    CHECK(rec.sic_performed == std::vector<int>{1, 1});
  }
  SUBCASE("NOMA shape: weak user rides the common slot only") {
    // User 0 weak: no private stream; strong user 1 decodes the common
    // stream then SICs it away.
    StreamPlan noma;
    noma.common = mcs_4qam_half();
    noma.private_streams = {std::nullopt, mcs_4qam_half()};
    const std::vector<double> split = {1.0, 0.0};
    auto prec = b.prec;
    prec.privates.col(0).setZero();
    const auto rec = run_trial(b.ch, prec, noma, split, StreamKey(106).chain(2));
    CHECK(rec.sic_attempted == std::vector<int>{0, 1});
    CHECK(rec.sic_performed == std::vector<int>{0, 1});
    CHECK(rec.private_transmitted == std::vector<std::uint8_t>{0, 1});
    CHECK(rec.recovered_bits[0] == 117);  // whole common payload
    CHECK(rec.recovered_bits[1] == 117);  // private only, zero common share
  }
  SUBCASE("SDMA: no common stream, no SIC anywhere") {
    StreamPlan sdma;
    sdma.private_streams = {mcs_4qam_half(), mcs_4qam_half()};
    auto prec = b.prec;
    prec.common.setZero();
    const auto rec =
        run_trial(b.ch, prec, sdma, std::vector<double>{0.0, 0.0}, StreamKey(106).chain(3));
    CHECK(!rec.common_transmitted);
    CHECK(rec.sic_attempted == std::vector<int>{0, 0});
    CHECK(rec.sic_performed == std::vector<int>{0, 0});
    CHECK(rec.recovered_bits == std::vector<long long>{117, 117});
  }
}

TEST_CASE("run_trial: genie common removal never hurts private decoding") {
  // Noise-dominated geometry tuned so the common stream often fails at
  // user 0 (common SINR 2.7 dB against a 4.75 dB MCS threshold), while the
  // private stream clears its own threshold only once the common is gone:
  // with the common present it sits at -7.8 dB, after removal at -1.5 dB
  // against a -1.74 dB threshold. Note the aggressor regime (a dominant
  // private stream using the *same* MCS as the common) is deliberately
  // avoided: there the demapper LLRs follow the interferer, which is itself
  // a valid codeword of the identical polar spec, so the receiver captures
  // its payload with a passing CRC and no "failure" is observed at all.
  auto b = clean_bench();
  b.plan.common = Mcs{4, 0.75, 4.75};
  b.plan.private_streams = {Mcs{4, 0.25, -1.74}, Mcs{4, 0.25, -1.74}};
  b.prec.common << std::sqrt(3.2), 3.0;  // weak toward user 0
  b.prec.privates(0, 0) = std::sqrt(0.7);
  b.prec.privates(1, 1) = 2.0;
  b.prec.power_budget = 20.0;
  b.ch.noise_vars = RVec<double>::Constant(2, 1.0);

  int genie_private_errors = 0, plain_private_errors = 0, common_failures = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    const auto key = StreamKey(107).chain(t);
    const auto plain = run_trial(b.ch, b.prec, b.plan, b.split, key, false);
    const auto genie = run_trial(b.ch, b.prec, b.plan, b.split, key, true);
    plain_private_errors += 1 - plain.private_decoded[0];
    genie_private_errors += 1 - genie.private_decoded[0];
    common_failures += 1 - plain.common_decoded[0];
  }
  INFO("common failures: " << common_failures << ", plain private errors: "
                           << plain_private_errors << ", genie: " << genie_private_errors);
  CHECK(common_failures > 100);  // the regime is actually exercised
  CHECK(genie_private_errors <= plain_private_errors);
  CHECK(plain_private_errors - genie_private_errors > 50);  // the gate matters here
}

TEST_CASE("sic_receive: common failure skips subtraction and flags it") {
  // Common undecodable at user 0 (tiny common gain there), private still
  // clean: the receiver must proceed against full interference.
  auto b = clean_bench();
  b.prec.common << 1e-3, 30.0;
  b.prec.privates(0, 0) = 30.0;
  b.prec.power_budget = 2000.0;

  const auto rec = run_trial(b.ch, b.prec, b.plan, b.split, StreamKey(108).chain(1));
  CHECK(rec.common_decoded[0] == 0);
  CHECK(rec.sic_attempted[0] == 1);
  CHECK(rec.sic_performed[0] == 0);
  // Private power 900 vs common interference ~1e-6 + noise 1: still decodes.
  CHECK(rec.private_decoded[0] == 1);
  CHECK(rec.recovered_bits[0] == 117);
  // User 1 is clean end-to-end.
  CHECK(rec.common_decoded[1] == 1);
  CHECK(rec.sic_performed[1] == 1);
  CHECK(rec.recovered_bits[1] == 58 + 117);
}

TEST_CASE("run_trial: zero-gain transmitted stream fails cleanly, no NaNs") {
  auto b = clean_bench();
  b.prec.privates.col(1).setZero();  // user 1's private precoder is zero
  const auto rec = run_trial(b.ch, b.prec, b.plan, b.split, StreamKey(109).chain(1));
  CHECK(rec.private_transmitted[1] == 1);
  CHECK(rec.private_decoded[1] == 0);
  CHECK(rec.recovered_bits[1] == 58);  // common share still credited
  CHECK(rec.common_decoded[1] == 1);
}

TEST_CASE("run_trial: empty plan transmits nothing") {
  auto b = clean_bench();
  StreamPlan silent;
  silent.private_streams = {std::nullopt, std::nullopt};
  const auto rec =
      run_trial(b.ch, b.prec, silent, std::vector<double>{0.0, 0.0}, StreamKey(110).chain(1));
  CHECK(rec.channel_uses == 0);
  CHECK(rec.recovered_bits == std::vector<long long>{0, 0});
  CHECK(!rec.common_transmitted);
}

TEST_CASE("run_trial: mixed modulation orders set channel uses to the longest stream") {
  auto b = clean_bench(1e8, 1e4, 1.0);
  b.plan.common = mcs_4qam_half();                         // 128 symbols
  b.plan.private_streams = {Mcs{16, 0.5, 8.24},            // 64 symbols
                            Mcs{256, 0.75, 22.75}};        // 32 symbols
  const auto rec = run_trial(b.ch, b.prec, b.plan, b.split, StreamKey(111).chain(1));
  CHECK(rec.channel_uses == 128);
  CHECK(rec.common_decoded == std::vector<std::uint8_t>{1, 1});
  CHECK(rec.private_decoded == std::vector<std::uint8_t>{1, 1});
  CHECK(rec.recovered_bits[0] == 59 + (128 - 11));
  CHECK(rec.recovered_bits[1] == 58 + (192 - 11));
}

TEST_CASE("sic_receive and plan validation errors") {
  auto b = clean_bench();
  std::vector<std::complex<double>> samples(128, {0.0, 0.0});
  CHECK_THROWS_AS(sic_receive(2, samples, b.ch, b.prec, b.plan), std::out_of_range);
  CHECK_THROWS_AS(sic_receive(-1, samples, b.ch, b.prec, b.plan), std::out_of_range);

  std::vector<std::complex<double>> short_samples(10, {0.0, 0.0});
  CHECK_THROWS_AS(sic_receive(0, short_samples, b.ch, b.prec, b.plan), std::invalid_argument);

  std::vector<std::complex<double>> genie(5, {0.0, 0.0});  // wrong symbol count
  CHECK_THROWS_AS(sic_receive(0, samples, b.ch, b.prec, b.plan, genie), std::invalid_argument);

  StreamPlan bad;
  bad.private_streams = {mcs_4qam_half()};  // only one slot for two users
  CHECK_THROWS_AS(run_trial(b.ch, b.prec, bad, b.split, StreamKey(1)), std::invalid_argument);

  CHECK_THROWS_AS(make_frames(b.plan, std::vector<double>{1.0}, StreamKey(1)),
                  std::invalid_argument);
}

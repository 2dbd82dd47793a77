#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rsma/csit.hpp"
#include "rsma/phy.hpp"
#include "rsma/precoder.hpp"
#include "rsma/types.hpp"

namespace rsma {

// Monte-Carlo sweep modes: Shannon-bound ergodic sum-rates, bit-level link
// throughput, or the high-SNR slope measurement (which aggregates exactly
// like shannon and is consumed by estimate_dof).
enum class SweepMode { kShannon, kLls, kDof };

std::string to_string(SweepMode mode);
SweepMode sweep_mode_from_string(const std::string& name);
std::string to_string(Multiplex tag);
Multiplex multiplex_from_string(const std::string& name);

// One experiment: a strategy set swept over an SNR grid at fixed CSIT
// quality. Serializes to a `key = value` config file via canonical_text();
// from_file/set_field parse the same format, so the file mirrors the fields
// exactly. Noise is unit variance throughout, so SNR in dB is the power
// budget in dB.
struct ExperimentConfig {
  std::vector<Multiplex> strategies = {Multiplex::kSdma, Multiplex::kRsma, Multiplex::kNoma};
  std::vector<double> snr_grid_db = {0, 5, 10, 15, 20, 25, 30, 35};
  double alpha = 0.6;        // CSIT quality exponent: sigma_e^2 = P^-alpha
  int num_users = 2;         // K
  int num_antennas = 2;      // M
  double r0 = 0.0;           // per-user QoS rate floor (bps/Hz); 0 disables
  int trials = 0;            // blocks per SNR point; 0 = mode default (500 shannon/dof, 200 lls)
  std::uint64_t seed = 1;
  SweepMode mode = SweepMode::kShannon;
  std::string output_path = "sweep.csv";
  bool perfect_csit = false;     // zero-error estimates regardless of alpha
  int conditional_draws = 16;    // optimizer sample-average size under imperfect CSIT
  int eval_draws = 16;           // held-out draws for the reported ergodic rates
  std::string audit_path;        // per-trial log (lls mode); default output_path + ".audit.jsonl"

  void validate() const;
  [[nodiscard]] int resolved_trials() const;
  [[nodiscard]] std::string resolved_audit_path() const;
  // The exact config-file serialization (resolved trials/audit path included);
  // parsing it back reproduces this config.
  [[nodiscard]] std::string canonical_text() const;
  // FNV-1a 64 over canonical_text(), so equal effective configs hash equally.
  [[nodiscard]] std::uint64_t fingerprint() const;

  // Applies one `key = value` override; throws std::invalid_argument for
  // unknown keys or unparsable values.
  void set_field(const std::string& key, const std::string& value);
  static ExperimentConfig from_text(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
};

// Aggregated result for one (strategy, SNR) grid point. ci95 is the 95%
// confidence half-width of the mode's headline metric: the mean sum-rate in
// shannon/dof mode, the throughput (via the delta method for the ratio of
// sums) in lls mode. QoS-infeasible blocks still transmit (best effort, with
// the precoders the penalty phase settled on) so the averages cover every
// channel state; feasible == false is the per-point infeasibility marker,
// raised when any block's QoS problem was certified infeasible.
struct SweepRow {
  Multiplex strategy = Multiplex::kRsma;
  double snr_db = 0.0;
  double sum_rate = 0.0;
  double throughput = 0.0;  // NaN outside lls mode
  double ci95 = 0.0;
  int trials = 0;           // feasible blocks aggregated into this row
  bool feasible = true;
  long long bits_decoded = 0;   // lls: sum over blocks and users of D
  long long channel_uses = 0;   // lls: sum over blocks of S^(l)
};

struct SweepResult {
  ExperimentConfig config;
  std::vector<SweepRow> rows;  // strategy-major in config order, SNR ascending
};

// The exact channel-generator settings run_sweep uses at grid point
// `snr_index`: blocks are draw_block(csit_config_for(cfg, i), block), shared
// by every strategy at that point. Exposed so results can be recomposed
// pipeline stage by pipeline stage.
CsitConfig csit_config_for(const ExperimentConfig& config, int snr_index);

// Transmitter-side link-quality prediction for one fading block: per stream,
// the lower quartile of the instantaneous rates under the chosen precoders
// across the optimizer's training draws. The quartile (not the mean) is the
// operating point: the mean is beaten by roughly half the realizations, which
// would drive coded block error rates far above the table's 1e-2 calibration
// point under imperfect CSIT. With a single draw (perfect CSIT) it degenerates
// to the exact instantaneous rate.
struct RatePrediction {
  double common = 0.0;
  std::vector<double> privates;  // one entry per user
};
RatePrediction predict_rates(std::span<const ChannelSetd> training_draws,
                             const PrecoderSetd& precoders);

// Duration-aware AMC decision for one fading block. Every live stream starts
// at symbol 0 and the block is charged for the longest live stream's symbol
// count, so per-stream greedy selection (each stream alone maximizing its own
// spectral efficiency) lets one slow low-order stream stretch the block and
// dilute everyone else. Instead, for each candidate duration S (the distinct
// per-order symbol counts in the table) each stream takes its highest-payload
// entry that fits within S among its per-order admissible choices, and the
// plan maximizing total predicted delivered payload bits per channel use
// wins; ties prefer the shorter duration. Per order, the admissible entry
// composes two gates: the table is first cut to entries whose calibrated
// min_sinr_db the stream's predicted effective SINR clears (the threshold is
// the 1e-2 BLER operating point), then amc_select applies its
// spectral-efficiency rule on that subtable. A stream with no admissible
// entry stays silent; zero-rate streams (a disabled common or private
// column) therefore switch off automatically.
StreamPlan select_plan(const RatePrediction& predicted, std::span<const Mcs> table,
                       double backoff = 0.9);

// Joint live-set and MCS decision for one fading block: the chosen plan, the
// precoders the block actually transmits with, and the predicted payload
// bits per channel use of that choice (the selection objective, used to
// arbitrate between alternative precoder candidates for the same block).
struct BlockDecision {
  StreamPlan plan;
  PrecoderSetd precoders;
  double score = 0.0;
};

// predict_rates and select_plan composed for one candidate precoder set, with
// the selection objective exposed so callers can arbitrate between several
// candidates for the same block (run_sweep uses this to let rate-splitting
// fall back to its zero-common and superposition corner points per block).
BlockDecision plan_block(std::span<const ChannelSetd> training_draws,
                         const PrecoderSetd& precoders, std::span<const Mcs> table,
                         double backoff = 0.9);

// Runs the full sweep: per block draw CSIT (common random numbers across
// strategies), re-optimize precoders per block, evaluate ergodic rates on
// held-out conditional draws, and in lls mode run one coded trial per block
// with the select_plan AMC decision driven by predict_rates. `jobs`
// only sizes the worker pool; outputs are byte-identical for any value.
SweepResult run_sweep(const ExperimentConfig& config, int jobs = 1);

// CSV with the pinned header
// strategy,snr_db,alpha,r0,mode,trials,sum_rate,throughput,ci95,seed,fingerprint
// one row per (strategy, SNR); doubles use shortest round-trip formatting.
std::string csv_text(const SweepResult& result);
void write_csv(const SweepResult& result, const std::string& path);

// Per-strategy high-SNR slope against the theory values. `predicted` is
// max{1, K*alpha} for SDMA, 1 + (K-1)*alpha for RSMA, and 1 for NOMA.
struct DofEstimate {
  Multiplex strategy = Multiplex::kRsma;
  double slope = 0.0;
  double predicted = 0.0;
};

double predicted_dof(Multiplex tag, int num_users, double alpha);

// Fits sum-rate versus log2(P) per strategy on an existing sweep (rows must
// cover >= 15 dB starting at >= 20 dB: the high-SNR regime), or runs the
// sweep itself first. Throws std::invalid_argument on an insufficient grid.
std::vector<DofEstimate> estimate_dof(const SweepResult& result);
std::vector<DofEstimate> estimate_dof(const ExperimentConfig& config, int jobs = 1);

// Shortest `%g`-style representation that strtod round-trips exactly;
// "nan" for NaN. Used by the CSV writer and the audit log.
std::string format_double(double value);

}  // namespace rsma

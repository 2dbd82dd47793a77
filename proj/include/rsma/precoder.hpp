#pragma once

#include <span>
#include <utility>
#include <vector>

#include "rsma/types.hpp"

namespace rsma {

enum class Multiplex { kRsma, kSdma, kNoma };

// Transmission strategy. decoding_order is NOMA-only and lists users in the
// order their streams are decoded (first-decoded / weak user first).
struct Strategy {
  Multiplex tag = Multiplex::kRsma;
  std::vector<int> decoding_order;

  static Strategy rsma() { return {Multiplex::kRsma, {}}; }
  static Strategy sdma() { return {Multiplex::kSdma, {}}; }
  static Strategy noma(std::vector<int> order = {}) { return {Multiplex::kNoma, std::move(order)}; }

  void validate(int num_users) const;
};

struct OptimizerSettings {
  int max_outer_iterations = 200;
  double convergence_tol = 1e-4;  // relative objective change
  double qos_floor = 0.0;         // R0 in bps/Hz per user
  int conditional_samples = 64;   // sample-average size (1 for perfect CSIT)
  int restarts = 3;               // size of the common-power initialization grid
  double penalty_growth = 5.0;    // QoS penalty continuation factor
  // Forces zero common power inside the RSMA machinery; SDMA uses this path.
  bool freeze_common = false;

  void validate() const;
};

enum class QosStatus { kNotRequested, kSatisfied, kInfeasible };

struct OptimizeResult {
  PrecoderSetd precoders;
  RateReportd report;  // averaged over the optimizer's conditional samples
  QosStatus qos = QosStatus::kNotRequested;
  // True when infeasibility is certified: some user cannot reach the floor
  // even with the full budget devoted to it (Jensen upper bound).
  bool infeasibility_certified = false;
  RVec<double> qos_shortfalls;  // post-split per-user floor shortfalls
  // Objective trace per penalty phase; nondecreasing within each phase.
  std::vector<std::vector<double>> objective_history;
  int chosen_start = 0;  // index into the deterministic candidate list
};

// Sum-rate precoder optimization on the sample-average objective.
// `estimate` carries the transmitter's knowledge; conditional samples are
// drawn from its (seed, block) lineage when error_std > 0.
OptimizeResult optimize(const ChannelSetd& estimate, const Strategy& strategy,
                        const OptimizerSettings& settings, double power_budget);

// Sum of per-user averaged total rates under the given precoders.
double sum_rate_objective(std::span<const ChannelSetd> samples, const PrecoderSetd& precoders);
double sum_rate_objective(const std::vector<ChannelSetd>& samples, const PrecoderSetd& precoders);

// Two-user NOMA evaluation: precoders.common carries the first-decoded (weak)
// user's stream, privates.col(strong) the other. rate_common is the
// first-decoded stream's rate (min over both users' decode SINRs); the weak
// user owns all of it.
RateReportd noma_rates(const ChannelSetd& channel, const PrecoderSetd& precoders,
                       const std::vector<int>& order);

// Least-squares slope of rate versus log2(P) from (P in dB, rate) points —
// the empirical multiplexing gain.
double dof_slope(const std::vector<std::pair<double, double>>& points);

}  // namespace rsma

#pragma once

#include <cstdint>
#include <vector>

#include "rsma/types.hpp"

namespace rsma {

// Channel/CSIT generator settings. Noise is unit variance by default, so the
// power budget doubles as the SNR. The estimation error variance scales as
// power^-alpha; `perfect` forces a zero-error estimate explicitly (rather
// than through an alpha limit).
struct CsitConfig {
  int num_tx = 2;
  int num_users = 2;
  double alpha = 0.6;          // in [0, 1]
  bool perfect = false;
  double power_budget = 100.0;
  double noise_var = 1.0;
  std::uint64_t seed = 1;
  int conditional_samples = 64;  // H-tilde draws per estimate (1 when perfect)

  void validate() const;
};

// Estimation error variance power^-alpha. Requires alpha in [0, 1]; rejects
// power < 1 when alpha > 0 since the variance would exceed 1.
double error_variance(double power, double alpha);

// Draws one i.i.d. CN(0,1) fading block plus its estimate decomposition.
// Deterministic in (config.seed, block) only.
ChannelSetd draw_block(const CsitConfig& config, std::uint64_t block);

// Redraws `count` channels consistent with base's estimate (same estimate,
// fresh error realizations). Sample index 0 reproduces `base` itself, so pass
// `offset` >= 1 for draws independent of the realized channel. Deterministic
// in (base.seed, base.block, offset).
std::vector<ChannelSetd> conditional_draws(const ChannelSetd& base, int count,
                                           std::uint64_t offset = 0);

// Convenience overload; config must carry the same seed lineage as base.
std::vector<ChannelSetd> conditional_draws(const ChannelSetd& base, const CsitConfig& config,
                                           int count);

}  // namespace rsma

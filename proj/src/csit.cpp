#include "rsma/csit.hpp"

#include <cmath>
#include <stdexcept>

#include "rsma/rng.hpp"

namespace rsma {
namespace {

// Fills an M x K matrix with unit-variance complex Gaussians; one lane per
// (tag, block, sample, user), one counter per antenna.
CMat<double> gaussian_matrix(StreamKey root, std::uint64_t tag, std::uint64_t block,
                             std::uint64_t sample, int num_tx, int num_users) {
  CMat<double> m(num_tx, num_users);
  for (int k = 0; k < num_users; ++k) {
    const StreamKey lane =
        root.chain(tag).chain(block).chain(sample).chain(static_cast<std::uint64_t>(k));
    for (int a = 0; a < num_tx; ++a) m(a, k) = lane.cnormal(static_cast<std::uint64_t>(a));
  }
  return m;
}

}  // namespace

void CsitConfig::validate() const {
  if (num_tx < 1) throw std::invalid_argument("CsitConfig: num_tx must be >= 1");
  if (num_users < 1) throw std::invalid_argument("CsitConfig: num_users must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("CsitConfig: alpha must lie in [0, 1]");
  if (!(power_budget > 0)) throw std::invalid_argument("CsitConfig: power_budget must be positive");
  if (!(noise_var > 0)) throw std::invalid_argument("CsitConfig: noise_var must be positive");
  if (conditional_samples < 1)
    throw std::invalid_argument("CsitConfig: conditional_samples must be >= 1");
}

double error_variance(double power, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("error_variance: alpha must lie in [0, 1]");
  if (alpha > 0.0 && !(power >= 1.0))
    throw std::invalid_argument(
        "error_variance: power below 1 with alpha > 0 would give a variance above 1");
  if (!(power > 0.0)) throw std::invalid_argument("error_variance: power must be positive");
  return std::pow(power, -alpha);
}

ChannelSetd draw_block(const CsitConfig& config, std::uint64_t block) {
  config.validate();
  const double err_var = config.perfect ? 0.0 : error_variance(config.power_budget, config.alpha);
  const double sigma_e = std::sqrt(err_var);

  const StreamKey root{mix64(config.seed)};
  ChannelSetd ch;
  ch.estimates = gaussian_matrix(root, tags::kEstimate, block, 0, config.num_tx, config.num_users);
  ch.errors = gaussian_matrix(root, tags::kError, block, 0, config.num_tx, config.num_users);
  ch.error_std = sigma_e;
  ch.true_channels = std::sqrt(1.0 - err_var) * ch.estimates + sigma_e * ch.errors;
  ch.noise_vars = RVec<double>::Constant(config.num_users, config.noise_var);
  ch.seed = config.seed;
  ch.block = block;
  ch.validate();
  return ch;
}

std::vector<ChannelSetd> conditional_draws(const ChannelSetd& base, int count,
                                           std::uint64_t offset) {
  base.validate();
  if (count < 1) throw std::invalid_argument("conditional_draws: count must be >= 1");

  const double err_var = base.error_std * base.error_std;
  const double scale = std::sqrt(1.0 - err_var);
  const StreamKey root{mix64(base.seed)};
  const int num_tx = static_cast<int>(base.num_tx());
  const int num_users = static_cast<int>(base.num_users());

  std::vector<ChannelSetd> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    ChannelSetd ch = base;
    ch.errors = gaussian_matrix(root, tags::kError, base.block,
                                offset + static_cast<std::uint64_t>(s), num_tx, num_users);
    ch.true_channels = scale * ch.estimates + base.error_std * ch.errors;
    out.push_back(std::move(ch));
  }
  return out;
}

std::vector<ChannelSetd> conditional_draws(const ChannelSetd& base, const CsitConfig& config,
                                           int count) {
  if (config.seed != base.seed)
    throw std::invalid_argument("conditional_draws: config seed does not match base lineage");
  return conditional_draws(base, count, 0);
}

}  // namespace rsma

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace rsma {

template <typename T>
using CMat = Eigen::Matrix<std::complex<T>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using CVec = Eigen::Vector<std::complex<T>, Eigen::Dynamic>;
template <typename T>
using RVec = Eigen::Vector<T, Eigen::Dynamic>;

// One fading block: true channels, transmitter-side estimates, and the error
// realization tying them together as
//   h_k = sqrt(1 - error_std^2) * hhat_k + error_std * htilde_k.
// Columns index users. (seed, block) record the lineage so conditional
// re-draws around the same estimate are reproducible.
template <typename T>
struct ChannelSet {
  CMat<T> true_channels;  // num_tx x num_users
  CMat<T> estimates;      // num_tx x num_users
  CMat<T> errors;         // num_tx x num_users
  T error_std = T(0);
  RVec<T> noise_vars;  // per-user noise variance, > 0
  std::uint64_t seed = 0;
  std::uint64_t block = 0;

  [[nodiscard]] Eigen::Index num_tx() const { return true_channels.rows(); }
  [[nodiscard]] Eigen::Index num_users() const { return true_channels.cols(); }

  void validate() const {
    if (true_channels.rows() == 0 || true_channels.cols() == 0)
      throw std::invalid_argument("ChannelSet: empty channel matrix");
    if (estimates.rows() != true_channels.rows() || estimates.cols() != true_channels.cols())
      throw std::invalid_argument("ChannelSet: estimate shape mismatch");
    if (errors.rows() != true_channels.rows() || errors.cols() != true_channels.cols())
      throw std::invalid_argument("ChannelSet: error shape mismatch");
    if (noise_vars.size() != true_channels.cols())
      throw std::invalid_argument("ChannelSet: noise variance count mismatch");
    if (!(error_std >= T(0) && error_std <= T(1)))
      throw std::invalid_argument("ChannelSet: error_std outside [0, 1]");
    for (Eigen::Index k = 0; k < noise_vars.size(); ++k)
      if (!(noise_vars[k] > T(0)))
        throw std::invalid_argument("ChannelSet: noise variance must be positive");
  }
};

// Linear precoders for the common stream and each private stream, plus the
// fractions splitting the common rate between users. An all-zero split is the
// "no common stream" convention used when the common precoder is zero.
template <typename T>
struct PrecoderSet {
  CVec<T> common;        // num_tx
  CMat<T> privates;      // num_tx x num_users
  RVec<T> common_split;  // num_users, entries >= 0, sums to 1 (or all zero)
  T power_budget = T(1);

  [[nodiscard]] Eigen::Index num_tx() const { return privates.rows(); }
  [[nodiscard]] Eigen::Index num_users() const { return privates.cols(); }

  [[nodiscard]] T used_power() const {
    return common.squaredNorm() + privates.squaredNorm();
  }

  void validate(T tol = T(1e-9)) const {
    if (privates.rows() == 0 || privates.cols() == 0)
      throw std::invalid_argument("PrecoderSet: empty private precoder matrix");
    if (common.size() != privates.rows())
      throw std::invalid_argument("PrecoderSet: common precoder length mismatch");
    if (common_split.size() != privates.cols())
      throw std::invalid_argument("PrecoderSet: split length mismatch");
    if (!(power_budget > T(0)))
      throw std::invalid_argument("PrecoderSet: power budget must be positive");
    T split_sum = T(0);
    for (Eigen::Index k = 0; k < common_split.size(); ++k) {
      if (common_split[k] < T(0))
        throw std::invalid_argument("PrecoderSet: negative split entry");
      split_sum += common_split[k];
    }
    if (std::abs(split_sum - T(1)) > T(1e-12) && std::abs(split_sum) > T(0))
      throw std::invalid_argument("PrecoderSet: split must sum to 1 (or be all zero)");
    if (used_power() > power_budget * (T(1) + tol))
      throw std::invalid_argument("PrecoderSet: power budget exceeded");
  }
};

// Achievable-rate summary. For multi-sample (averaged) reports the rate
// fields are per-user sample means computed term-by-term before the min
// (expectation-of-rate convention) and the SINR fields hold the effective
// values 2^rate - 1, so the rate/SINR invariants hold verbatim either way.
template <typename T>
struct RateReport {
  RVec<T> sinr_common;      // gamma_c,k (linear; effective when averaged)
  RVec<T> sinr_private;     // gamma_k
  T rate_common = T(0);     // R_c = min_k log2(1 + gamma_c,k)
  RVec<T> common_portions;  // C_k, sums to R_c (or all zero when split is zero)
  RVec<T> rate_private;     // R_k
  RVec<T> rate_total;       // C_k + R_k
  int sample_count = 1;
  // Set by noma_rates: rate_common then holds the first-decoded stream's rate.
  bool noma_mapped = false;

  [[nodiscard]] static constexpr const char* averaging_convention() {
    return "expectation-of-rate";
  }
  [[nodiscard]] Eigen::Index num_users() const { return rate_private.size(); }
  [[nodiscard]] T sum_rate() const { return rate_total.sum(); }
};

using ChannelSetd = ChannelSet<double>;
using PrecoderSetd = PrecoderSet<double>;
using RateReportd = RateReport<double>;

}  // namespace rsma

#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

#include "rsma/types.hpp"

namespace rsma {

namespace detail {
template <typename T>
void check_pair(const ChannelSet<T>& ch, const PrecoderSet<T>& prec) {
  if (ch.num_tx() != prec.num_tx() || ch.num_users() != prec.num_users())
    throw std::invalid_argument("channel/precoder dimension mismatch");
}

template <typename T>
void check_user(const ChannelSet<T>& ch, Eigen::Index k) {
  if (k < 0 || k >= ch.num_users()) throw std::out_of_range("user index out of range");
}
}  // namespace detail

// Superposed transmit vector x = p_c s_c + sum_k p_k s_k.
// symbols = [s_c, s_1, ..., s_K].
template <typename T>
CVec<T> transmit_signal(const PrecoderSet<T>& prec, const CVec<T>& symbols) {
  if (symbols.size() != prec.num_users() + 1)
    throw std::invalid_argument("transmit_signal: got " + std::to_string(symbols.size()) +
                                " symbols for " + std::to_string(prec.num_users() + 1) +
                                " streams");
  return prec.common * symbols[0] + prec.privates * symbols.tail(prec.num_users());
}

// y_k = h_k^H x + n_k (Hermitian transpose: conjugate on the channel).
template <typename T>
std::complex<T> received_sample(const ChannelSet<T>& ch, Eigen::Index k, const CVec<T>& x,
                                std::complex<T> noise) {
  detail::check_user(ch, k);
  if (x.size() != ch.num_tx())
    throw std::invalid_argument("received_sample: signal length mismatch");
  return ch.true_channels.col(k).dot(x) + noise;
}

// SINR of the common stream at user k; every private stream is interference.
template <typename T>
T sinr_common(const ChannelSet<T>& ch, const PrecoderSet<T>& prec, Eigen::Index k) {
  detail::check_pair(ch, prec);
  detail::check_user(ch, k);
  const auto h = ch.true_channels.col(k);
  const T signal = std::norm(h.dot(prec.common));
  T denom = ch.noise_vars[k];
  for (Eigen::Index i = 0; i < prec.num_users(); ++i)
    denom += std::norm(h.dot(prec.privates.col(i)));
  return signal / denom;
}

// SINR of user k's private stream after the common stream has been removed.
template <typename T>
T sinr_private(const ChannelSet<T>& ch, const PrecoderSet<T>& prec, Eigen::Index k) {
  detail::check_pair(ch, prec);
  detail::check_user(ch, k);
  const auto h = ch.true_channels.col(k);
  const T signal = std::norm(h.dot(prec.privates.col(k)));
  T denom = ch.noise_vars[k];
  for (Eigen::Index i = 0; i < prec.num_users(); ++i)
    if (i != k) denom += std::norm(h.dot(prec.privates.col(i)));
  return signal / denom;
}

// Instantaneous achievable rates: the common rate is min_k log2(1 + gamma_c,k)
// so every user can decode the common stream; the split fractions allocate it.
template <typename T>
RateReport<T> rate_report(const ChannelSet<T>& ch, const PrecoderSet<T>& prec) {
  detail::check_pair(ch, prec);
  const Eigen::Index K = ch.num_users();
  RateReport<T> r;
  r.sinr_common.resize(K);
  r.sinr_private.resize(K);
  r.rate_private.resize(K);
  T common = std::numeric_limits<T>::infinity();
  for (Eigen::Index k = 0; k < K; ++k) {
    r.sinr_common[k] = sinr_common(ch, prec, k);
    r.sinr_private[k] = sinr_private(ch, prec, k);
    common = std::min(common, std::log2(T(1) + r.sinr_common[k]));
    r.rate_private[k] = std::log2(T(1) + r.sinr_private[k]);
  }
  r.rate_common = common;
  r.common_portions = prec.common_split * common;
  r.rate_total = r.common_portions + r.rate_private;
  r.sample_count = 1;
  return r;
}

// Sample-average over channel states sharing one precoder: per-user means of
// log2(1 + gamma) first, then the min over users for the common rate. SINR
// fields are the effective values 2^rate - 1.
template <typename T>
RateReport<T> averaged_rate_report(std::span<const ChannelSet<T>> samples,
                                   const PrecoderSet<T>& prec) {
  if (samples.empty()) throw std::invalid_argument("averaged_rate_report: no samples");
  const Eigen::Index K = samples.front().num_users();
  RVec<T> common_acc = RVec<T>::Zero(K);
  RVec<T> private_acc = RVec<T>::Zero(K);
  for (const auto& ch : samples) {
    if (ch.num_users() != K)
      throw std::invalid_argument("averaged_rate_report: sample shape mismatch");
    detail::check_pair(ch, prec);
    for (Eigen::Index k = 0; k < K; ++k) {
      common_acc[k] += std::log2(T(1) + sinr_common(ch, prec, k));
      private_acc[k] += std::log2(T(1) + sinr_private(ch, prec, k));
    }
  }
  const T n = static_cast<T>(samples.size());
  common_acc /= n;
  private_acc /= n;

  RateReport<T> r;
  r.rate_common = common_acc.minCoeff();
  r.common_portions = prec.common_split * r.rate_common;
  r.rate_private = private_acc;
  r.rate_total = r.common_portions + r.rate_private;
  r.sinr_common = common_acc.unaryExpr([](T v) { return std::exp2(v) - T(1); });
  r.sinr_private = private_acc.unaryExpr([](T v) { return std::exp2(v) - T(1); });
  r.sample_count = static_cast<int>(samples.size());
  return r;
}

template <typename T>
RateReport<T> averaged_rate_report(const std::vector<ChannelSet<T>>& samples,
                                   const PrecoderSet<T>& prec) {
  return averaged_rate_report(std::span<const ChannelSet<T>>(samples), prec);
}

}  // namespace rsma

#include "rsma/amc.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>

#include <json.hpp>

#include "rsma/qam.hpp"

namespace rsma {

double Mcs::spectral_efficiency() const {
  return qam_bits_per_symbol(modulation_order) * code_rate;
}

int Mcs::info_length(int block_length) const {
  const double exact = code_rate * block_length;
  const int rounded = static_cast<int>(std::llround(exact));
  if (std::abs(exact - rounded) > 1e-9)
    throw std::invalid_argument("Mcs: code_rate " + std::to_string(code_rate) +
                                " does not give an integral info length at N=" +
                                std::to_string(block_length));
  if (rounded <= 11 || rounded > block_length)
    throw std::invalid_argument("Mcs: info length " + std::to_string(rounded) +
                                " out of range (CRC-11 must fit)");
  return rounded;
}

void validate_amc_table(std::span<const Mcs> table) {
  if (table.empty()) throw std::invalid_argument("amc table: empty");
  for (std::size_t i = 0; i < table.size(); ++i) {
    const Mcs& m = table[i];
    qam_bits_per_symbol(m.modulation_order);  // validates the order
    if (!(m.code_rate > 0.0 && m.code_rate < 1.0))
      throw std::invalid_argument("amc table: code_rate must lie in (0,1)");
    (void)m.info_length();
    if (i > 0) {
      if (!(m.spectral_efficiency() > table[i - 1].spectral_efficiency()))
        throw std::invalid_argument("amc table: spectral efficiency not strictly ascending");
      if (!(m.min_sinr_db > table[i - 1].min_sinr_db))
        throw std::invalid_argument("amc table: min_sinr_db not strictly increasing");
    }
  }
}

std::vector<Mcs> default_amc_table() {
  // Thresholds frozen from tools/amc_calibrate (AWGN, N=256, CRC-11, list 8,
  // BLER target 1e-2; rate-matched design SNR). Low-rate entries at the
  // higher orders trade threshold quality for short airtime, which matters
  // when several streams share one block and the slowest stream sets its
  // length. 256-QAM at rate 1/2 calibrated 3.4 dB above the 64-QAM entry of
  // nearly equal efficiency (SE 3.98 at 14.54 dB) — dominated, so excluded.
  std::vector<Mcs> table = {
      {4, 64.0 / 256.0, -1.74},    // SE 0.50
      {4, 96.0 / 256.0, 0.27},     // SE 0.75
      {4, 128.0 / 256.0, 1.88},    // SE 1.00
      {16, 96.0 / 256.0, 6.61},    // SE 1.50
      {16, 128.0 / 256.0, 8.29},   // SE 2.00
      {64, 96.0 / 256.0, 9.00},    // SE 2.25
      {16, 160.0 / 256.0, 9.75},   // SE 2.50
      {64, 120.0 / 256.0, 11.10},  // SE 2.81
      {16, 192.0 / 256.0, 11.19},  // SE 3.00
      {64, 144.0 / 256.0, 12.69},  // SE 3.38
      {64, 170.0 / 256.0, 14.54},  // SE 3.98
      {64, 192.0 / 256.0, 16.07},  // SE 4.50
      {64, 214.0 / 256.0, 17.64},  // SE 5.02
      {256, 168.0 / 256.0, 21.70}, // SE 5.25
      {256, 192.0 / 256.0, 22.68}, // SE 6.00
      {256, 224.0 / 256.0, 24.49}, // SE 7.00
      {256, 235.0 / 256.0, 25.18}, // SE 7.34
  };
  validate_amc_table(table);
  return table;
}

std::vector<Mcs> load_amc_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("amc table: cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("amc table: " + path + ": " + e.what());
  }
  if (!doc.is_array()) throw std::runtime_error("amc table: " + path + ": expected a JSON array");
  std::vector<Mcs> table;
  for (const auto& item : doc) {
    Mcs m;
    try {
      m.modulation_order = item.at("order").get<int>();
      m.code_rate = item.at("rate").get<double>();
      m.min_sinr_db = item.at("min_sinr_db").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("amc table: " + path + ": " + e.what());
    }
    table.push_back(m);
  }
  validate_amc_table(table);
  return table;
}

CodewordSpec codeword_spec_for(const Mcs& mcs, int block_length) {
  const int info = mcs.info_length(block_length);
  // The construction is deterministic in (N, info, rate); cache it — the
  // chain requests the same handful of specs for every trial.
  static std::mutex cache_mutex;
  static std::map<std::pair<int, int>, CodewordSpec> cache;
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    const auto it = cache.find({block_length, info});
    if (it != cache.end()) return it->second;
  }
  const double design_db = 10.0 * std::log10(std::pow(2.0, 2.0 * mcs.code_rate) - 1.0);
  auto spec = make_codeword_spec(block_length, info, design_db, 8, 11);
  std::lock_guard<std::mutex> lock(cache_mutex);
  return cache.emplace(std::pair{block_length, info}, std::move(spec)).first->second;
}

std::optional<Mcs> amc_select(double predicted_rate, std::span<const Mcs> table, double backoff) {
  const double budget = backoff * predicted_rate;
  std::optional<Mcs> best;
  for (const Mcs& m : table)
    if (m.spectral_efficiency() <= budget && (!best || m.spectral_efficiency() > best->spectral_efficiency()))
      best = m;
  return best;
}

}  // namespace rsma

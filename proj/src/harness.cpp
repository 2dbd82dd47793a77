#include "rsma/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "rsma/amc.hpp"
#include "rsma/csit.hpp"
#include "rsma/model.hpp"
#include "rsma/phy.hpp"
#include "rsma/rng.hpp"

namespace rsma {

namespace {

constexpr std::uint64_t kCsitLane = 0x11;   // per-SNR-point channel seeding
constexpr std::uint64_t kTrialLane = 0x12;  // per-(SNR, block, strategy) trials

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

double parse_double(const std::string& s) {
  const std::string t = trim(s);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size())
    throw std::invalid_argument("config: cannot parse number '" + s + "'");
  return v;
}

long long parse_int(const std::string& s) {
  const double v = parse_double(s);
  const long long i = static_cast<long long>(v);
  if (static_cast<double>(i) != v)
    throw std::invalid_argument("config: expected an integer, got '" + s + "'");
  return i;
}

bool parse_bool(const std::string& s) {
  const std::string t = trim(s);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw std::invalid_argument("config: expected a boolean, got '" + s + "'");
}

const std::vector<Mcs>& amc_table() {
  static const std::vector<Mcs> table = default_amc_table();
  return table;
}

Strategy make_strategy(Multiplex tag) {
  switch (tag) {
    case Multiplex::kRsma: return Strategy::rsma();
    case Multiplex::kSdma: return Strategy::sdma();
    case Multiplex::kNoma: return Strategy::noma();
  }
  throw std::logic_error("make_strategy: bad tag");
}

// Everything one block contributes for one strategy; slots are preallocated
// so worker count cannot affect aggregation order.
struct StratOutcome {
  bool feasible = true;
  double eval_sum_rate = kNan;
  bool ran_trial = false;
  std::uint64_t trial_seed = 0;
  int uses = 0;
  long long bits = 0;
  std::vector<long long> d_common, d_private, addressed;
  std::vector<int> common_decoded, private_decoded, sic_attempted, sic_performed;
};

struct BlockOutcome {
  std::vector<StratOutcome> per_strategy;
};

double mean_ci95(const std::vector<double>& xs, double* half_width) {
  double m = 0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double var = 0;
  for (double x : xs) var += (x - m) * (x - m);
  *half_width =
      xs.size() > 1 ? 1.96 * std::sqrt(var / (static_cast<double>(xs.size()) - 1.0) /
                                       static_cast<double>(xs.size()))
                    : 0.0;
  return m;
}

}  // namespace

std::string to_string(SweepMode mode) {
  switch (mode) {
    case SweepMode::kShannon: return "shannon";
    case SweepMode::kLls: return "lls";
    case SweepMode::kDof: return "dof";
  }
  throw std::logic_error("to_string: bad SweepMode");
}

SweepMode sweep_mode_from_string(const std::string& name) {
  if (name == "shannon") return SweepMode::kShannon;
  if (name == "lls") return SweepMode::kLls;
  if (name == "dof") return SweepMode::kDof;
  throw std::invalid_argument("unknown sweep mode '" + name + "' (shannon|lls|dof)");
}

std::string to_string(Multiplex tag) {
  switch (tag) {
    case Multiplex::kRsma: return "rsma";
    case Multiplex::kSdma: return "sdma";
    case Multiplex::kNoma: return "noma";
  }
  throw std::logic_error("to_string: bad Multiplex");
}

Multiplex multiplex_from_string(const std::string& name) {
  if (name == "rsma") return Multiplex::kRsma;
  if (name == "sdma") return Multiplex::kSdma;
  if (name == "noma") return Multiplex::kNoma;
  throw std::invalid_argument("unknown strategy '" + name + "' (sdma|rsma|noma)");
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";
  char buf[48];
  if (std::fabs(value) < 1e15 && value == std::nearbyint(value)) {
    std::snprintf(buf, sizeof buf, "%.0f", value);
    return buf;
  }
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

void ExperimentConfig::validate() const {
  if (strategies.empty()) throw std::invalid_argument("config: strategies must be non-empty");
  for (std::size_t i = 0; i < strategies.size(); ++i)
    for (std::size_t j = i + 1; j < strategies.size(); ++j)
      if (strategies[i] == strategies[j])
        throw std::invalid_argument("config: duplicate strategy " + to_string(strategies[i]));
  if (snr_grid_db.empty()) throw std::invalid_argument("config: snr_grid_db must be non-empty");
  for (std::size_t i = 1; i < snr_grid_db.size(); ++i)
    if (!(snr_grid_db[i] > snr_grid_db[i - 1]))
      throw std::invalid_argument("config: snr_grid_db must be strictly increasing");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("config: alpha must lie in [0, 1]");
  if (num_users < 1 || num_antennas < 1)
    throw std::invalid_argument("config: num_users and num_antennas must be >= 1");
  for (Multiplex s : strategies)
    if (s == Multiplex::kNoma && num_users != 2)
      throw std::invalid_argument("config: the noma strategy requires num_users = 2");
  if (!(r0 >= 0.0)) throw std::invalid_argument("config: r0 must be >= 0");
  if (trials < 0) throw std::invalid_argument("config: trials must be >= 0 (0 = mode default)");
  if (conditional_draws < 1 || eval_draws < 1)
    throw std::invalid_argument("config: conditional_draws and eval_draws must be >= 1");
  if (!perfect_csit && alpha > 0.0 && snr_grid_db.front() < 0.0)
    throw std::invalid_argument(
        "config: snr_grid_db below 0 dB is not representable when alpha > 0 "
        "(the CSIT error variance P^-alpha would exceed the channel variance)");
}

int ExperimentConfig::resolved_trials() const {
  if (trials > 0) return trials;
  return mode == SweepMode::kLls ? 200 : 500;
}

std::string ExperimentConfig::resolved_audit_path() const {
  return audit_path.empty() ? output_path + ".audit.jsonl" : audit_path;
}

std::string ExperimentConfig::canonical_text() const {
  std::ostringstream out;
  out << "strategies = ";
  for (std::size_t i = 0; i < strategies.size(); ++i)
    out << (i ? ", " : "") << to_string(strategies[i]);
  out << "\nsnr_grid_db = ";
  for (std::size_t i = 0; i < snr_grid_db.size(); ++i)
    out << (i ? ", " : "") << format_double(snr_grid_db[i]);
  out << "\nalpha = " << format_double(alpha);
  out << "\nnum_users = " << num_users;
  out << "\nnum_antennas = " << num_antennas;
  out << "\nr0 = " << format_double(r0);
  out << "\ntrials = " << resolved_trials();
  out << "\nseed = " << seed;
  out << "\nmode = " << to_string(mode);
  out << "\noutput_path = " << output_path;
  out << "\nperfect_csit = " << (perfect_csit ? "true" : "false");
  out << "\nconditional_draws = " << conditional_draws;
  out << "\neval_draws = " << eval_draws;
  out << "\naudit_path = " << resolved_audit_path();
  out << "\n";
  return out.str();
}

std::uint64_t ExperimentConfig::fingerprint() const {
  const std::string text = canonical_text();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void ExperimentConfig::set_field(const std::string& key, const std::string& value) {
  if (key == "strategies") {
    std::vector<Multiplex> out;
    for (const auto& name : split_list(value)) out.push_back(multiplex_from_string(name));
    strategies = std::move(out);
  } else if (key == "snr_grid_db") {
    std::vector<double> out;
    for (const auto& item : split_list(value)) out.push_back(parse_double(item));
    snr_grid_db = std::move(out);
  } else if (key == "alpha") {
    alpha = parse_double(value);
  } else if (key == "num_users") {
    num_users = static_cast<int>(parse_int(value));
  } else if (key == "num_antennas") {
    num_antennas = static_cast<int>(parse_int(value));
  } else if (key == "r0") {
    r0 = parse_double(value);
  } else if (key == "trials") {
    trials = static_cast<int>(parse_int(value));
  } else if (key == "seed") {
    const long long v = parse_int(value);
    if (v < 0) throw std::invalid_argument("config: seed must be >= 0");
    seed = static_cast<std::uint64_t>(v);
  } else if (key == "mode") {
    mode = sweep_mode_from_string(trim(value));
  } else if (key == "output_path") {
    output_path = trim(value);
  } else if (key == "perfect_csit") {
    perfect_csit = parse_bool(value);
  } else if (key == "conditional_draws") {
    conditional_draws = static_cast<int>(parse_int(value));
  } else if (key == "eval_draws") {
    eval_draws = static_cast<int>(parse_int(value));
  } else if (key == "audit_path") {
    audit_path = trim(value);
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

ExperimentConfig ExperimentConfig::from_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not 'key = value': " + line);
    cfg.set_field(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

double predicted_dof(Multiplex tag, int num_users, double alpha) {
  switch (tag) {
    case Multiplex::kSdma: return std::max(1.0, num_users * alpha);
    case Multiplex::kRsma: return 1.0 + (num_users - 1) * alpha;
    case Multiplex::kNoma: return 1.0;
  }
  throw std::logic_error("predicted_dof: bad tag");
}

CsitConfig csit_config_for(const ExperimentConfig& config, int snr_index) {
  if (snr_index < 0 || snr_index >= static_cast<int>(config.snr_grid_db.size()))
    throw std::out_of_range("csit_config_for: snr_index out of range");
  CsitConfig cc;
  cc.num_tx = config.num_antennas;
  cc.num_users = config.num_users;
  cc.alpha = config.alpha;
  cc.perfect = config.perfect_csit;
  cc.power_budget = std::pow(10.0, config.snr_grid_db[static_cast<std::size_t>(snr_index)] / 10.0);
  cc.noise_var = 1.0;
  cc.seed = StreamKey(config.seed).chain(kCsitLane).chain(static_cast<std::uint64_t>(snr_index)).state;
  cc.conditional_samples = config.conditional_draws;
  return cc;
}

RatePrediction predict_rates(std::span<const ChannelSetd> training_draws,
                             const PrecoderSetd& precoders) {
  if (training_draws.empty()) throw std::invalid_argument("predict_rates: no training draws");
  const Eigen::Index K = precoders.num_users();
  const std::size_t n = training_draws.size();
  std::vector<double> common(n);
  std::vector<std::vector<double>> privates(static_cast<std::size_t>(K),
                                            std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = rate_report(training_draws[i], precoders);
    common[i] = r.rate_common;
    for (Eigen::Index k = 0; k < K; ++k)
      privates[static_cast<std::size_t>(k)][i] = r.rate_private[k];
  }
  const std::size_t q = (n - 1) / 4;  // lower quartile (exact value for n = 1)
  auto quartile = [q](std::vector<double>& v) {
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(q), v.end());
    return v[q];
  };
  RatePrediction out;
  out.common = quartile(common);
  out.privates.resize(static_cast<std::size_t>(K));
  for (Eigen::Index k = 0; k < K; ++k)
    out.privates[static_cast<std::size_t>(k)] = quartile(privates[static_cast<std::size_t>(k)]);
  return out;
}

namespace {

// select_plan plus its objective value (predicted payload bits per use).
std::pair<StreamPlan, double> select_plan_scored(const RatePrediction& predicted,
                                                 std::span<const Mcs> table, double backoff) {
  validate_amc_table(table);
  const int K = static_cast<int>(predicted.privates.size());
  const int n_streams = K + 1;  // stream 0 = common, stream k+1 = private k

  // Distinct per-order symbol counts present in the table = candidate
  // block durations, shortest first so equal scores keep the shorter block.
  std::vector<int> durations;
  for (const Mcs& e : table) {
    const int s = stream_symbol_count(e);
    if (std::find(durations.begin(), durations.end(), s) == durations.end())
      durations.push_back(s);
  }
  std::sort(durations.begin(), durations.end());
  std::vector<int> orders;
  for (const Mcs& e : table)
    if (std::find(orders.begin(), orders.end(), e.modulation_order) == orders.end())
      orders.push_back(e.modulation_order);

  // Per stream and per order: the admissible entry (if any). Two gates
  // compose: the entry's calibrated min_sinr_db must not exceed the
  // predicted effective SINR (the table threshold is the 1e-2 BLER
  // operating point, so admission above it is what the calibration
  // promises), and within the surviving per-order subtable amc_select
  // applies its spectral-efficiency rule unchanged.
  auto stream_rate = [&](int s) { return s == 0 ? predicted.common : predicted.privates[s - 1]; };
  std::vector<std::vector<std::optional<Mcs>>> admissible(
      static_cast<std::size_t>(n_streams));
  std::vector<Mcs> filtered;
  for (int s = 0; s < n_streams; ++s) {
    const double rate = stream_rate(s);
    const double sinr_db =
        rate > 0.0 ? 10.0 * std::log10(std::pow(2.0, rate) - 1.0)
                   : -std::numeric_limits<double>::infinity();
    for (int order : orders) {
      filtered.clear();
      for (const Mcs& e : table)
        if (e.modulation_order == order && e.min_sinr_db <= sinr_db) filtered.push_back(e);
      admissible[static_cast<std::size_t>(s)].push_back(
          filtered.empty() ? std::nullopt : amc_select(rate, filtered, backoff));
    }
  }

  StreamPlan best;
  best.private_streams.resize(static_cast<std::size_t>(K));
  double best_score = 0.0;
  for (int duration : durations) {
    StreamPlan plan;
    plan.private_streams.resize(static_cast<std::size_t>(K));
    long long payload_total = 0;
    for (int s = 0; s < n_streams; ++s) {
      std::optional<Mcs> pick;
      long long pick_payload = -1;
      int pick_symbols = 0;
      for (const auto& cand : admissible[static_cast<std::size_t>(s)]) {
        if (!cand || stream_symbol_count(*cand) > duration) continue;
        const long long payload = codeword_spec_for(*cand).payload_length();
        const int symbols = stream_symbol_count(*cand);
        // Highest payload wins; ties prefer the shorter codeword (less
        // interference on co-scheduled streams), then the lower order.
        if (payload > pick_payload ||
            (payload == pick_payload &&
             (symbols < pick_symbols ||
              (symbols == pick_symbols && cand->modulation_order < pick->modulation_order)))) {
          pick = cand;
          pick_payload = payload;
          pick_symbols = symbols;
        }
      }
      if (!pick) continue;
      payload_total += pick_payload;
      if (s == 0)
        plan.common = pick;
      else
        plan.private_streams[static_cast<std::size_t>(s - 1)] = pick;
    }
    if (payload_total == 0) continue;
    const double score = static_cast<double>(payload_total) / duration;
    if (score > best_score) {
      best_score = score;
      best = plan;
    }
  }
  return {best, best_score};
}

}  // namespace

StreamPlan select_plan(const RatePrediction& predicted, std::span<const Mcs> table,
                       double backoff) {
  return select_plan_scored(predicted, table, backoff).first;
}

BlockDecision plan_block(std::span<const ChannelSetd> training_draws,
                         const PrecoderSetd& precoders, std::span<const Mcs> table,
                         double backoff) {
  BlockDecision out;
  out.precoders = precoders;
  auto [plan, score] = select_plan_scored(predict_rates(training_draws, precoders), table, backoff);
  out.plan = std::move(plan);
  out.score = score;
  return out;
}

SweepResult run_sweep(const ExperimentConfig& config, int jobs) {
  config.validate();
  const int n_snr = static_cast<int>(config.snr_grid_db.size());
  const int n_blocks = config.resolved_trials();
  const int n_strat = static_cast<int>(config.strategies.size());
  const int K = config.num_users;
  const bool lls = config.mode == SweepMode::kLls;

  std::vector<BlockOutcome> slots(static_cast<std::size_t>(n_snr) * n_blocks);
  for (auto& s : slots) s.per_strategy.resize(static_cast<std::size_t>(n_strat));

  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;

  auto process_item = [&](int item) {
    const int si = item / n_blocks;
    const int block = item % n_blocks;
    const CsitConfig cc = csit_config_for(config, si);
    const double power = cc.power_budget;
    const ChannelSetd ch = draw_block(cc, static_cast<std::uint64_t>(block));

    const int s_train = ch.error_std == 0.0 ? 1 : config.conditional_draws;
    const int n_eval = ch.error_std == 0.0 ? 1 : config.eval_draws;
    const auto eval = conditional_draws(ch, n_eval, static_cast<std::uint64_t>(1 + s_train));
    const auto train = lls ? conditional_draws(ch, s_train, 1) : std::vector<ChannelSetd>{};

    OptimizerSettings settings;
    settings.qos_floor = config.r0;
    settings.conditional_samples = config.conditional_draws;

    auto& out = slots[static_cast<std::size_t>(item)];
    for (int t = 0; t < n_strat; ++t) {
      const Multiplex tag = config.strategies[static_cast<std::size_t>(t)];
      const auto opt = optimize(ch, make_strategy(tag), settings, power);
      StratOutcome& so = out.per_strategy[static_cast<std::size_t>(t)];
      // A block whose QoS problem the optimizer certifies infeasible is
      // recorded as such but still transmits with the best precoders the
      // penalty phase produced: the scheduler does not get to drop bad
      // channel states, so the point averages stay comparable with the
      // unconstrained run instead of surviving on the good blocks only.
      so.feasible = !(config.r0 > 0.0 && opt.qos == QosStatus::kInfeasible);
      so.eval_sum_rate = averaged_rate_report<double>(eval, opt.precoders).sum_rate();
      if (!lls) continue;

      // RSMA's precoder space contains the zero-common (SDMA) and one-hot
      // NOMA operating points, but the alternating optimizer lands on the
      // ergodic sum-rate optimum, whose thin-stream splits the short-block
      // MCS grid may carry poorly. The restricted optimizers provide exact
      // candidates for those corner points, and the link adaptation keeps
      // whichever candidate predicts the most delivered bits per use —
      // transmitter-side CSIT-only arbitration across the RSMA family.
      BlockDecision decision = plan_block(train, opt.precoders, amc_table());
      if (tag == Multiplex::kRsma) {
        for (Multiplex alt : {Multiplex::kSdma, Multiplex::kNoma}) {
          const auto alt_opt = optimize(ch, make_strategy(alt), settings, power);
          if (config.r0 > 0.0 && alt_opt.qos == QosStatus::kInfeasible) continue;
          BlockDecision alt_dec = plan_block(train, alt_opt.precoders, amc_table());
          if (alt_dec.score > decision.score) decision = std::move(alt_dec);
        }
      }
      const std::vector<double> split(decision.precoders.common_split.data(),
                                      decision.precoders.common_split.data() + K);
      const StreamKey trial_key = StreamKey(config.seed)
                                      .chain(kTrialLane)
                                      .chain(static_cast<std::uint64_t>(si))
                                      .chain(static_cast<std::uint64_t>(block))
                                      .chain(static_cast<std::uint64_t>(tag));
      const TrialRecord rec = run_trial(ch, decision.precoders, decision.plan, split, trial_key);

      so.ran_trial = true;
      so.trial_seed = trial_key.state;
      so.uses = rec.channel_uses;
      so.d_common.resize(static_cast<std::size_t>(K));
      so.d_private.resize(static_cast<std::size_t>(K));
      so.addressed.assign(rec.addressed_bits.begin(), rec.addressed_bits.end());
      so.common_decoded.assign(rec.common_decoded.begin(), rec.common_decoded.end());
      so.private_decoded.assign(rec.private_decoded.begin(), rec.private_decoded.end());
      so.sic_attempted = rec.sic_attempted;
      so.sic_performed = rec.sic_performed;
      for (int k = 0; k < K; ++k) {
        const std::size_t ku = static_cast<std::size_t>(k);
        so.d_common[ku] = rec.common_decoded[ku] ? rec.common_share_bits[ku] : 0;
        so.d_private[ku] = rec.recovered_bits[ku] - so.d_common[ku];
        so.bits += rec.recovered_bits[ku];
      }
    }
  };

  auto worker = [&] {
    for (;;) {
      const int item = next.fetch_add(1);
      if (item >= n_snr * n_blocks) return;
      try {
        process_item(item);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int pool = std::max(1, jobs);
  if (pool == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(pool));
    for (int i = 0; i < pool; ++i) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  SweepResult result;
  result.config = config;
  result.rows.reserve(static_cast<std::size_t>(n_strat) * n_snr);
  for (int t = 0; t < n_strat; ++t) {
    for (int si = 0; si < n_snr; ++si) {
      SweepRow row;
      row.strategy = config.strategies[static_cast<std::size_t>(t)];
      row.snr_db = config.snr_grid_db[static_cast<std::size_t>(si)];

      std::vector<double> rates;
      std::vector<std::pair<long long, int>> trials_ds;  // (D, S) per block
      bool all_feasible = true;
      for (int b = 0; b < n_blocks; ++b) {
        const auto& so = slots[static_cast<std::size_t>(si) * n_blocks + b]
                             .per_strategy[static_cast<std::size_t>(t)];
        all_feasible = all_feasible && so.feasible;
        rates.push_back(so.eval_sum_rate);
        if (so.ran_trial) {
          trials_ds.emplace_back(so.bits, so.uses);
          row.bits_decoded += so.bits;
          row.channel_uses += so.uses;
        }
      }
      row.trials = static_cast<int>(rates.size());
      row.feasible = all_feasible && !rates.empty();
      if (rates.empty()) {
        row.sum_rate = kNan;
        row.throughput = kNan;
        row.ci95 = kNan;
      } else if (!lls) {
        row.sum_rate = mean_ci95(rates, &row.ci95);
        row.throughput = kNan;
      } else {
        double rate_hw = 0.0;
        row.sum_rate = mean_ci95(rates, &rate_hw);
        if (row.channel_uses > 0) {
          const double ratio = static_cast<double>(row.bits_decoded) /
                               static_cast<double>(row.channel_uses);
          row.throughput = ratio;
          // Delta-method half-width for the ratio of sums.
          double ss = 0.0;
          for (const auto& [d, s] : trials_ds) {
            const double e = static_cast<double>(d) - ratio * static_cast<double>(s);
            ss += e * e;
          }
          const auto n = static_cast<double>(trials_ds.size());
          row.ci95 = trials_ds.size() > 1
                         ? 1.96 * std::sqrt(ss / (n - 1.0) * n) /
                               static_cast<double>(row.channel_uses)
                         : 0.0;
        } else {
          row.throughput = kNan;  // no stream admitted at this point
          row.ci95 = 0.0;
        }
      }
      result.rows.push_back(std::move(row));
    }
  }

  if (lls) {
    // Persist the per-trial audit log in deterministic order.
    const std::string path = config.resolved_audit_path();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("run_sweep: cannot write audit log " + path);
    for (int t = 0; t < n_strat; ++t) {
      const Multiplex tag = config.strategies[static_cast<std::size_t>(t)];
      for (int si = 0; si < n_snr; ++si) {
        for (int b = 0; b < n_blocks; ++b) {
          const auto& so = slots[static_cast<std::size_t>(si) * n_blocks + b]
                               .per_strategy[static_cast<std::size_t>(t)];
          nlohmann::json rec;
          rec["strategy"] = to_string(tag);
          rec["snr_db"] = config.snr_grid_db[static_cast<std::size_t>(si)];
          rec["block"] = b;
          rec["feasible"] = so.feasible;
          if (so.ran_trial) {
            rec["seed"] = so.trial_seed;
            rec["S"] = so.uses;
            rec["D_common"] = so.d_common;
            rec["D_private"] = so.d_private;
            rec["addressed"] = so.addressed;
            rec["common_decoded"] = so.common_decoded;
            rec["private_decoded"] = so.private_decoded;
            rec["sic_attempted"] = so.sic_attempted;
            rec["sic_performed"] = so.sic_performed;
          }
          out << rec.dump() << "\n";
        }
      }
    }
  }
  return result;
}

std::string csv_text(const SweepResult& result) {
  std::ostringstream out;
  out << "strategy,snr_db,alpha,r0,mode,trials,sum_rate,throughput,ci95,seed,fingerprint\n";
  const auto& cfg = result.config;
  char fp[24];
  std::snprintf(fp, sizeof fp, "%016llx",
                static_cast<unsigned long long>(cfg.fingerprint()));
  for (const auto& row : result.rows) {
    out << to_string(row.strategy) << ',' << format_double(row.snr_db) << ','
        << format_double(cfg.alpha) << ',' << format_double(cfg.r0) << ','
        << to_string(cfg.mode) << ',' << row.trials << ',' << format_double(row.sum_rate)
        << ',' << format_double(row.throughput) << ',' << format_double(row.ci95) << ','
        << cfg.seed << ',' << fp << "\n";
  }
  return out.str();
}

void write_csv(const SweepResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_csv: cannot write " + path);
  out << csv_text(result);
}

std::vector<DofEstimate> estimate_dof(const SweepResult& result) {
  std::vector<DofEstimate> out;
  for (Multiplex tag : result.config.strategies) {
    std::vector<std::pair<double, double>> points;
    for (const auto& row : result.rows)
      if (row.strategy == tag && std::isfinite(row.sum_rate))
        points.emplace_back(row.snr_db, row.sum_rate);
    if (points.size() < 2)
      throw std::invalid_argument("estimate_dof: need >= 2 finite points per strategy");
    const double lo = points.front().first;
    const double hi = points.back().first;
    if (lo < 20.0 || hi - lo < 15.0)
      throw std::invalid_argument(
          "estimate_dof: grid must span >= 15 dB within the high-SNR regime (>= 20 dB)");
    DofEstimate est;
    est.strategy = tag;
    est.slope = dof_slope(points);
    est.predicted = predicted_dof(tag, result.config.num_users, result.config.alpha);
    out.push_back(est);
  }
  return out;
}

std::vector<DofEstimate> estimate_dof(const ExperimentConfig& config, int jobs) {
  return estimate_dof(run_sweep(config, jobs));
}

}  // namespace rsma

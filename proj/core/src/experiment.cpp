#include "ppa/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ppa/baselines.hpp"
#include "ppa/etc_finite.hpp"
#include "ppa/etc_simhash.hpp"
#include "ppa/exp4vc.hpp"
#include "ppa/protocol.hpp"

namespace ppa {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t cell_seed(std::uint64_t seed_base, long T, int replicate) {
  std::uint64_t s = splitmix64(seed_base ^ splitmix64(static_cast<std::uint64_t>(T)));
  return splitmix64(s ^ static_cast<std::uint64_t>(replicate));
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(std::string("config: not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    cfg.env = env_from_json(j.at("env").dump());
  } catch (const json::exception& e) {
    throw config_error(std::string("config.env: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("config.env.") + e.what());
  }

  if (!j.contains("strategy") || !j["strategy"].contains("id"))
    throw config_error("config.strategy.id: required");
  const json& s = j["strategy"];
  cfg.strategy.id = s["id"].get<std::string>();
  static const char* known[] = {"exp4vc",  "etc-finite", "etc-simhash",
                                "etc-simhash-doubling", "oracle", "always-buy",
                                "never-buy", "fixed-threshold"};
  bool ok = false;
  for (const char* k : known) ok = ok || cfg.strategy.id == k;
  if (!ok)
    throw config_error("config.strategy.id: unknown strategy '" + cfg.strategy.id + "'");
  cfg.strategy.delta = s.value("delta", cfg.strategy.delta);
  cfg.strategy.c = s.value("c", cfg.strategy.c);
  cfg.strategy.eta_tilde = s.value("eta_tilde", cfg.strategy.eta_tilde);
  cfg.strategy.n_samples = s.value("n_samples", cfg.strategy.n_samples);
  cfg.strategy.t_prime_override = s.value("t_prime_override", cfg.strategy.t_prime_override);
  cfg.strategy.T0 = s.value("T0", cfg.strategy.T0);
  cfg.strategy.threshold = s.value("threshold", cfg.strategy.threshold);

  if (j.contains("horizons"))
    cfg.horizons = j["horizons"].get<std::vector<long>>();
  else
    cfg.horizons = ExperimentConfig::default_horizons();
  if (cfg.horizons.empty()) throw config_error("config.horizons: must not be empty");
  for (std::size_t i = 0; i < cfg.horizons.size(); ++i) {
    if (cfg.horizons[i] < 1)
      throw config_error("config.horizons: entries must be >= 1");
    if (i > 0 && cfg.horizons[i] <= cfg.horizons[i - 1])
      throw config_error("config.horizons: must be strictly increasing");
  }
  cfg.replicates = j.value("replicates", 1);
  if (cfg.replicates < 1) throw config_error("config.replicates: must be >= 1");
  cfg.write_rounds = j.value("write_rounds", true);
  return cfg;
}

std::string config_to_json(const ExperimentConfig& config) {
  json j;
  j["env"] = json::parse(env_to_json(config.env));
  json s;
  s["id"] = config.strategy.id;
  s["delta"] = config.strategy.delta;
  s["c"] = config.strategy.c;
  s["eta_tilde"] = config.strategy.eta_tilde;
  s["n_samples"] = config.strategy.n_samples;
  s["t_prime_override"] = config.strategy.t_prime_override;
  s["T0"] = config.strategy.T0;
  s["threshold"] = config.strategy.threshold;
  j["strategy"] = s;
  j["horizons"] = config.horizons;
  j["replicates"] = config.replicates;
  j["write_rounds"] = config.write_rounds;
  return j.dump(2);
}

std::unique_ptr<BuyerStrategy> make_strategy(const StrategyConfig& config,
                                             const Oracle& oracle) {
  const std::string& id = config.id;
  if (id == "exp4vc") {
    Exp4VCStrategy::Params p;
    p.delta = config.delta;
    return std::make_unique<Exp4VCStrategy>(p);
  }
  if (id == "etc-finite") {
    EtcFiniteStrategy::Params p;
    p.c = config.c;
    p.eta_tilde = config.eta_tilde;
    p.t_prime_override = config.t_prime_override;
    return std::make_unique<EtcFiniteStrategy>(p);
  }
  if (id == "etc-simhash") {
    EtcSimhashStrategy::Params p;
    p.delta = config.delta;
    p.c = config.c;
    p.n_samples = config.n_samples;
    p.t_prime_override = config.t_prime_override;
    return std::make_unique<EtcSimhashStrategy>(p);
  }
  if (id == "etc-simhash-doubling") {
    DoublingSimhashStrategy::Params p;
    p.T0 = config.T0;
    p.inner.delta = config.delta;
    p.inner.c = config.c;
    p.inner.n_samples = config.n_samples;
    return std::make_unique<DoublingSimhashStrategy>(p);
  }
  if (id == "oracle") return std::make_unique<OracleStrategy>(oracle);
  if (id == "always-buy") return std::make_unique<AlwaysBuyStrategy>();
  if (id == "never-buy") return std::make_unique<NeverBuyStrategy>();
  if (id == "fixed-threshold")
    return std::make_unique<FixedThresholdStrategy>(config.threshold);
  throw config_error("strategy.id: unknown strategy '" + id + "'");
}

std::vector<RegretAggregate> RegretSeries::aggregate(
    const std::vector<RegretRow>& rows) {
  std::map<long, std::vector<double>> by_T;
  for (const auto& r : rows) by_T[r.T].push_back(r.final_regret);
  std::vector<RegretAggregate> out;
  for (const auto& [T, vals] : by_T) {
    RegretAggregate a;
    a.T = T;
    a.replicates = static_cast<int>(vals.size());
    double sum = 0.0;
    for (double v : vals) sum += v;
    a.mean_regret = sum / vals.size();
    double ss = 0.0;
    for (double v : vals) ss += (v - a.mean_regret) * (v - a.mean_regret);
    a.stderr_ = vals.size() > 1
                    ? std::sqrt(ss / (vals.size() - 1) / vals.size())
                    : 0.0;
    out.push_back(a);
  }
  return out;
}

RegretSeries run_experiment(const ExperimentConfig& config,
                            const std::string& out_dir, int parallelism,
                            std::uint64_t seed_base) {
  if (parallelism < 1) throw config_error("parallelism: must be >= 1");
  std::filesystem::create_directories(out_dir);

  Oracle oracle(config.env);
  oracle.all_conditional_values();  // build the cache before fanning out

  struct Cell {
    long T;
    int replicate;
    std::uint64_t seed;
    double final_regret = 0.0;
    std::string rounds;  // CSV lines, filled when write_rounds
  };
  std::vector<Cell> cells;
  for (long T : config.horizons)
    for (int r = 0; r < config.replicates; ++r)
      cells.push_back({T, r, cell_seed(seed_base, T, r)});

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex err_mu;

  auto worker = [&] {
    for (;;) {
      std::size_t k = next.fetch_add(1);
      if (k >= cells.size() || failed.load()) return;
      Cell& cell = cells[k];
      try {
        auto strategy = make_strategy(config.strategy, oracle);
        Transcript tr =
            run_protocol(config.env, *strategy, cell.T, cell.seed, &oracle);
        RegretLedger ledger = oracle.regret(tr);
        cell.final_regret = ledger.final_regret();
        if (config.write_rounds) {
          std::string run_id =
              "T" + std::to_string(cell.T) + "_r" + std::to_string(cell.replicate);
          std::string buf;
          buf.reserve(tr.records.size() * 64);
          for (std::size_t t = 0; t < tr.records.size(); ++t) {
            const auto& rec = tr.records[t];
            buf += run_id;
            buf += ',';
            buf += std::to_string(rec.t);
            buf += ',';
            buf += std::to_string(rec.mask.key());
            buf += ',';
            buf += fmt(rec.price);
            buf += ',';
            buf += std::to_string(rec.decision);
            buf += ',';
            buf += fmt(rec.utility);
            buf += ',';
            buf += std::to_string(ledger.oracle_decisions[t]);
            buf += ',';
            buf += fmt(ledger.contributions[t]);
            buf += ',';
            buf += fmt(ledger.cumulative[t]);
            buf += '\n';
          }
          cell.rounds = std::move(buf);
        }
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!failed.exchange(true)) first_error = e.what();
        return;
      }
    }
  };

  if (parallelism == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < parallelism; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failed.load())
    throw std::runtime_error("run_experiment: " + first_error);

  RegretSeries series;
  for (const auto& cell : cells)
    series.rows.push_back({cell.T, cell.replicate, cell.seed, cell.final_regret});
  series.aggregates = RegretSeries::aggregate(series.rows);

  if (config.write_rounds) {
    std::ofstream rf(out_dir + "/rounds.csv", std::ios::binary);
    rf << "run_id,t,mask,price,decision,utility,oracle_decision,"
          "regret_contribution,cum_regret\n";
    for (const auto& cell : cells) rf << cell.rounds;
  }

  std::ofstream sf(out_dir + "/summary.csv", std::ios::binary);
  sf << "T,mean_regret,stderr,replicates\n";
  for (const auto& a : series.aggregates)
    sf << a.T << ',' << fmt(a.mean_regret) << ',' << fmt(a.stderr_) << ','
       << a.replicates << '\n';
  return series;
}

ExponentFit fit_regret_exponent(const std::vector<RegretAggregate>& aggregates) {
  ExponentFit fit;
  std::vector<double> xs, ys;
  for (const auto& a : aggregates) {
    if (a.mean_regret > 0.0) {
      xs.push_back(std::log(static_cast<double>(a.T)));
      ys.push_back(std::log(a.mean_regret));
    } else {
      ++fit.excluded_points;
    }
  }
  fit.used_points = static_cast<int>(xs.size());
  if (fit.used_points < 4)
    throw insufficient_data_error(
        "fit_regret_exponent: need at least 4 horizon points with positive "
        "mean regret, got " + std::to_string(fit.used_points));

  double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  double varx = sxx - sx * sx / n;
  double vary = syy - sy * sy / n;
  double cov = sxy - sx * sy / n;
  if (varx <= 0.0)
    throw insufficient_data_error("fit_regret_exponent: degenerate horizon grid");
  fit.slope = cov / varx;
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.r2 = vary > 0.0 ? (cov * cov) / (varx * vary) : 1.0;
  return fit;
}

std::vector<RegretAggregate> read_summary_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_summary_csv: cannot open " + path);
  std::vector<RegretAggregate> out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    RegretAggregate a;
    std::getline(ss, field, ',');
    a.T = std::stol(field);
    std::getline(ss, field, ',');
    a.mean_regret = std::stod(field);
    std::getline(ss, field, ',');
    a.stderr_ = std::stod(field);
    std::getline(ss, field, ',');
    a.replicates = std::stoi(field);
    out.push_back(a);
  }
  return out;
}

void write_plot_data(const std::vector<RegretAggregate>& aggregates,
                     const ExponentFit& fit, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  out << "# regret vs horizon; fitted ln R = " << fmt(fit.slope)
      << " * ln T + " << fmt(fit.intercept) << " (r2 = " << fmt(fit.r2)
      << ")\n";
  out << "# T mean_regret\n";
  for (const auto& a : aggregates)
    out << a.T << ' ' << fmt(a.mean_regret) << '\n';
}

}  // namespace ppa

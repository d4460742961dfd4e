#include "ppa/etc_simhash.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "ppa/protocol.hpp"

namespace ppa {

namespace {

constexpr double kLpEps = 1e-12;

struct LpResult {
  bool feasible = false;
  std::vector<double> x;
};

// Seidel's randomized incremental algorithm for linear programs in small
// dimension: maximize c.u subject to A u <= b and lo <= u <= hi. Expected
// O(d! m); here d <= 11 and the separator dimension dominates.
LpResult seidel_lp(const std::vector<std::vector<double>>& A,
                   const std::vector<double>& b, const std::vector<double>& c,
                   const std::vector<double>& lo, const std::vector<double>& hi,
                   Rng& rng) {
  const int n = static_cast<int>(c.size());
  const int m = static_cast<int>(A.size());

  if (n == 1) {
    double l = lo[0], h = hi[0];
    for (int i = 0; i < m; ++i) {
      double a = A[i][0];
      if (a > kLpEps)
        h = std::min(h, b[i] / a);
      else if (a < -kLpEps)
        l = std::max(l, b[i] / a);
      else if (b[i] < -kLpEps)
        return {};
    }
    if (l > h + kLpEps) return {};
    LpResult res;
    res.feasible = true;
    res.x = {c[0] >= 0.0 ? h : l};
    return res;
  }

  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> x(n);
  for (int k = 0; k < n; ++k) x[k] = c[k] >= 0.0 ? hi[k] : lo[k];

  for (int idx = 0; idx < m; ++idx) {
    const auto& ai = A[order[idx]];
    const double bi = b[order[idx]];
    double viol = -bi;
    for (int k = 0; k < n; ++k) viol += ai[k] * x[k];
    if (viol <= kLpEps) continue;

    // The optimum of the prefix lies on this constraint's hyperplane;
    // eliminate the variable with the largest coefficient and recurse.
    int k = 0;
    for (int j = 1; j < n; ++j)
      if (std::abs(ai[j]) > std::abs(ai[k])) k = j;
    if (std::abs(ai[k]) < kLpEps) return {};
    const double inv = 1.0 / ai[k];

    auto project = [&](const std::vector<double>& row, double rhs,
                       std::vector<double>& prow, double& prhs) {
      const double scale = row[k] * inv;
      prow.clear();
      prow.reserve(n - 1);
      for (int j = 0; j < n; ++j)
        if (j != k) prow.push_back(row[j] - scale * ai[j]);
      prhs = rhs - scale * bi;
    };

    std::vector<std::vector<double>> subA;
    std::vector<double> subB;
    subA.reserve(idx + 2);
    subB.reserve(idx + 2);
    std::vector<double> prow;
    double prhs;
    for (int prev = 0; prev < idx; ++prev) {
      project(A[order[prev]], b[order[prev]], prow, prhs);
      subA.push_back(prow);
      subB.push_back(prhs);
    }
    // the eliminated variable's box bounds become general constraints
    std::vector<double> ek(n, 0.0);
    ek[k] = 1.0;
    project(ek, hi[k], prow, prhs);
    subA.push_back(prow);
    subB.push_back(prhs);
    ek[k] = -1.0;
    project(ek, -lo[k], prow, prhs);
    subA.push_back(prow);
    subB.push_back(prhs);

    std::vector<double> subC, subLo, subHi;
    subC.reserve(n - 1);
    for (int j = 0; j < n; ++j)
      if (j != k) {
        subC.push_back(c[j] - c[k] * ai[j] * inv);
        subLo.push_back(lo[j]);
        subHi.push_back(hi[j]);
      }

    LpResult sub = seidel_lp(subA, subB, subC, subLo, subHi, rng);
    if (!sub.feasible) return {};

    double xk = bi;
    int pos = 0;
    for (int j = 0; j < n; ++j)
      if (j != k) {
        x[j] = sub.x[pos++];
        xk -= ai[j] * x[j];
      }
    x[k] = xk * inv;
  }

  LpResult res;
  res.feasible = true;
  res.x = std::move(x);
  return res;
}

}  // namespace

long exploration_length(long T, int d, int l, double delta, double c) {
  if (T < 1) throw std::invalid_argument("exploration_length: T must be >= 1");
  if (d < 1 || l < 1)
    throw std::invalid_argument("exploration_length: d, l must be >= 1");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("exploration_length: delta must lie in (0, 1)");
  if (c <= 0.0) throw std::invalid_argument("exploration_length: c must be positive");
  double raw = c * std::sqrt(4.0 * static_cast<double>(T) * d * l *
                             std::log(static_cast<double>(l) / delta));
  long tp = static_cast<long>(std::ceil(raw));
  return std::max(1L, std::min(tp, T / 2));
}

Separators recover_separators(
    const std::vector<std::pair<std::vector<double>, MaskValue>>& samples, int d,
    int l) {
  if (samples.empty())
    throw std::invalid_argument("recover_separators: no samples");
  const int m = static_cast<int>(samples.size());
  for (const auto& [x, pattern] : samples) {
    if (static_cast<int>(x.size()) != d)
      throw std::invalid_argument("recover_separators: point dimension mismatch");
    if (static_cast<int>(pattern.bits.size()) != l)
      throw std::invalid_argument("recover_separators: pattern length mismatch");
  }

  // Per bit: maximize the margin t subject to sigma_i (w . x_i) >= t with
  // w confined to the unit box (a bounded LP in d+1 variables). Any t > 0
  // separates; rescaling by 1/min-margin then yields margins >= 1.
  Rng rng(0x5e1de1);
  Separators out;
  out.rows.resize(l);
  for (int j = 0; j < l; ++j) {
    std::vector<std::vector<double>> A(m, std::vector<double>(d + 1));
    std::vector<double> b(m, 0.0);
    for (int i = 0; i < m; ++i) {
      double sigma = samples[i].second.bits[j] ? 1.0 : -1.0;
      for (int k = 0; k < d; ++k) A[i][k] = -sigma * samples[i].first[k];
      A[i][d] = 1.0;  // -sigma (w . x_i) + t <= 0
    }
    std::vector<double> c(d + 1, 0.0);
    c[d] = 1.0;
    std::vector<double> lo(d + 1, -1.0), hi(d + 1, 1.0);

    LpResult lp = seidel_lp(A, b, c, lo, hi, rng);
    if (!lp.feasible || lp.x[d] <= kLpEps)
      throw realizability_error(
          "recover_separators: training patterns are not linearly realizable");

    std::vector<double> w(lp.x.begin(), lp.x.begin() + d);
    double min_margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      double sigma = samples[i].second.bits[j] ? 1.0 : -1.0;
      double dot = 0.0;
      for (int k = 0; k < d; ++k) dot += w[k] * samples[i].first[k];
      min_margin = std::min(min_margin, sigma * dot);
    }
    if (min_margin <= 0.0)
      throw realizability_error(
          "recover_separators: training patterns are not linearly realizable");
    for (auto& v : w) v /= min_margin;
    out.rows[j] = std::move(w);
  }

  for (const auto& [x, pattern] : samples)
    if (!(simhash(out, x) == pattern))
      throw realizability_error(
          "recover_separators: recovered separators misclassify a training "
          "point");
  return out;
}

PolytopeRegion::PolytopeRegion(const Separators& sep,
                               std::vector<std::uint8_t> pattern)
    : sep_(&sep), pattern_(std::move(pattern)) {
  if (static_cast<int>(pattern_.size()) != sep.l())
    throw std::invalid_argument("PolytopeRegion: pattern length mismatch");
}

bool PolytopeRegion::contains(const std::vector<double>& x) const {
  for (int j = 0; j < sep_->l(); ++j) {
    double dot = 0.0;
    for (int k = 0; k < sep_->d(); ++k) dot += sep_->rows[j][k] * x[k];
    if ((dot >= 0.0) != (pattern_[j] != 0)) return false;
  }
  return true;
}

RegionEstimate estimate_region_mean(const EnvModel& env,
                                    const PolytopeRegion& region, long n_samples,
                                    std::uint64_t seed) {
  return estimate_region_mean(
      env, [&region](const std::vector<double>& x) { return region.contains(x); },
      n_samples, seed);
}

RegionEstimate estimate_region_mean(
    const EnvModel& env,
    const std::function<bool(const std::vector<double>&)>& contains,
    long n_samples, std::uint64_t seed) {
  if (n_samples < 1)
    throw std::invalid_argument("estimate_region_mean: n_samples must be >= 1");
  Rng rng(seed);
  std::vector<double> values;
  for (long s = 0; s < n_samples; ++s) {
    std::vector<double> x = env.sample_point(rng);
    if (contains(x))
      values.push_back(env.value_of(Item::continuous(std::move(x))));
  }
  if (values.empty())
    throw no_mass_error("estimate_region_mean: no accepted samples in region");

  RegionEstimate est;
  est.accepted = static_cast<long>(values.size());
  est.low_mass = est.accepted < 50;
  est.value = std::accumulate(values.begin(), values.end(), 0.0) /
              static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - est.value) * (v - est.value);
  est.sample_variance = ss / static_cast<double>(values.size());

  const int B = 200;
  std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
  double bm = 0.0, bs = 0.0;
  std::vector<double> boot(B);
  for (int b = 0; b < B; ++b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) sum += values[pick(rng)];
    boot[b] = sum / static_cast<double>(values.size());
    bm += boot[b];
  }
  bm /= B;
  for (double v : boot) bs += (v - bm) * (v - bm);
  est.stderr_ = std::sqrt(bs / B);
  return est;
}

EtcSimhashStrategy::EtcSimhashStrategy() : EtcSimhashStrategy(Params{}) {}

EtcSimhashStrategy::EtcSimhashStrategy(Params params) : params_(params) {}

void EtcSimhashStrategy::start(const EnvView& env, long horizon,
                               std::uint64_t seed) {
  if (env.known_distribution == nullptr)
    throw std::invalid_argument(
        "EtcSimhashStrategy: requires an environment with a buyer-known item "
        "distribution");
  if (env.l < 1)
    throw std::invalid_argument("EtcSimhashStrategy: SimHash masks required");
  env_ = env.known_distribution;
  T_ = horizon;
  round_ = 0;
  seed_ = seed;
  if (params_.t_prime_override > 0)
    t_prime_ = std::min(params_.t_prime_override, std::max(1L, T_ / 2));
  else
    t_prime_ = exploration_length(T_, env.d, env.l, params_.delta, params_.c);
  samples_.clear();
  samples_.reserve(static_cast<std::size_t>(t_prime_));
  cache_.clear();
  no_mass_.clear();
  no_mass_rounds_ = 0;
  estimation_calls_ = 0;
  exploring_ = false;
  committed_ = false;
  w_hat_ = Separators{};
}

int EtcSimhashStrategy::decide(const MaskValue& mask, double price) {
  ++round_;
  if (round_ > T_) throw phase_error("EtcSimhashStrategy: called past the horizon");
  if (round_ <= t_prime_) {
    pending_mask_ = mask;
    exploring_ = true;
    return 1;
  }
  exploring_ = false;
  if (!committed_)
    throw phase_error(
        "EtcSimhashStrategy: exploitation reached before exploration sealed");
  return cached_zhat(mask) >= price ? 1 : 0;
}

void EtcSimhashStrategy::feedback(const std::optional<Item>& purchased, double) {
  if (!exploring_) return;
  exploring_ = false;
  if (!purchased)
    throw phase_error("EtcSimhashStrategy: exploration purchase not revealed");
  samples_.emplace_back(purchased->point, pending_mask_);
  if (round_ == t_prime_) {
    if (params_.use_true_separators)
      w_hat_ = env_->continuous().separators;
    else
      w_hat_ = recover_separators(samples_, env_->continuous().d,
                                  env_->continuous().l);
    samples_.clear();
    samples_.shrink_to_fit();
    committed_ = true;
  }
}

void EtcSimhashStrategy::inject_estimate(int pattern_key, RegionEstimate estimate) {
  cache_[pattern_key] = estimate;
  no_mass_[pattern_key] = false;
}

void EtcSimhashStrategy::dump_state(std::ostream& os) const {
  os << "# recovered separators (" << w_hat_.l() << " x " << w_hat_.d() << ")\n";
  for (const auto& row : w_hat_.rows) {
    os << "w:";
    for (double v : row) os << ' ' << v;
    os << '\n';
  }
  for (const auto& [key, est] : cache_)
    os << "pattern " << key << ": Z=" << est.value << " se=" << est.stderr_
       << " accepted=" << est.accepted << (est.low_mass ? " low-mass" : "")
       << '\n';
}

double EtcSimhashStrategy::cached_zhat(const MaskValue& mask) {
  int key = mask.key();
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    ++estimation_calls_;
    PolytopeRegion region(w_hat_, mask.bits);
    std::uint64_t est_seed =
        derive_seed(seed_, Stream::estimator, static_cast<std::uint64_t>(key));
    try {
      it = cache_.emplace(key, estimate_region_mean(*env_, region,
                                                    params_.n_samples, est_seed))
               .first;
      no_mass_[key] = false;
    } catch (const no_mass_error&) {
      RegionEstimate empty;
      it = cache_.emplace(key, empty).first;
      no_mass_[key] = true;
    }
  }
  if (no_mass_[key]) ++no_mass_rounds_;
  return it->second.value;
}

DoublingSimhashStrategy::DoublingSimhashStrategy()
    : DoublingSimhashStrategy(Params{}) {}

DoublingSimhashStrategy::DoublingSimhashStrategy(Params params)
    : params_(params) {
  if (params_.T0 < 2)
    throw std::invalid_argument("DoublingSimhashStrategy: T0 must be >= 2");
}

std::vector<long> DoublingSimhashStrategy::epoch_lengths(long T0, long budget) {
  if (T0 < 2) throw std::invalid_argument("epoch_lengths: T0 must be >= 2");
  if (budget < 1) throw std::invalid_argument("epoch_lengths: budget must be >= 1");
  std::vector<long> out;
  long remaining = budget;
  long len = 2 * T0;
  while (remaining > 0) {
    out.push_back(std::min(len, remaining));
    remaining -= out.back();
    len *= 2;
  }
  return out;
}

void DoublingSimhashStrategy::start(const EnvView& env, long budget,
                                    std::uint64_t seed) {
  env_ = env;
  seed_ = seed;
  budget_ = budget;
  used_ = 0;
  epoch_ = 0;
  epoch_remaining_ = 0;
  inner_.reset();
}

void DoublingSimhashStrategy::begin_epoch() {
  ++epoch_;
  long declared = 2 * params_.T0;
  for (int e = 1; e < epoch_; ++e) declared *= 2;
  epoch_remaining_ = std::min(declared, budget_ - used_);
  inner_ = std::make_unique<EtcSimhashStrategy>(params_.inner);
  // Each epoch is an independent run at its declared (untruncated) horizon.
  inner_->start(env_, declared,
                derive_seed(seed_, Stream::strategy,
                            static_cast<std::uint64_t>(epoch_)));
}

int DoublingSimhashStrategy::decide(const MaskValue& mask, double price) {
  if (used_ >= budget_)
    throw phase_error("DoublingSimhashStrategy: called past the budget");
  if (epoch_remaining_ == 0) begin_epoch();
  ++used_;
  --epoch_remaining_;
  return inner_->decide(mask, price);
}

void DoublingSimhashStrategy::feedback(const std::optional<Item>& purchased,
                                       double utility) {
  inner_->feedback(purchased, utility);
}

Transcript doubling_runner(const EnvModel& env, long T0,
                           EtcSimhashStrategy::Params inner_params, long budget,
                           std::uint64_t seed, const Oracle* oracle) {
  DoublingSimhashStrategy::Params params;
  params.T0 = T0;
  params.inner = inner_params;
  DoublingSimhashStrategy strategy(params);
  return run_protocol(env, strategy, budget, seed, oracle);
}

}  // namespace ppa

#include "ppa/exp4vc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

namespace ppa {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const double* v, int count) {
  if (count <= 0) return kNegInf;
  double mx = kNegInf;
  for (int k = 0; k < count; ++k) mx = std::max(mx, v[k]);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (int k = 0; k < count; ++k) s += std::exp(v[k] - mx);
  return mx + std::log(s);
}
}  // namespace

int PolicyGrid::max_m() const {
  int mm = 0;
  for (int i = 0; i < n; ++i) mm = std::max(mm, m(i));
  return mm;
}

long PolicyGrid::sum_m() const {
  long s = 0;
  for (int i = 0; i < n; ++i) s += m(i);
  return s;
}

double PolicyGrid::log_grid_size() const {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::log(static_cast<double>(m(i) + 1));
  return s;
}

long init_length(long T, int n, double delta) {
  if (delta <= 0.0 || delta >= 1.0)
    throw std::invalid_argument("init_length: delta must lie in (0,1)");
  if (n < 1 || T < n)
    throw std::invalid_argument("init_length: requires T >= n >= 1");
  double raw = std::sqrt(static_cast<double>(T) * n *
                             std::log(M_E * static_cast<double>(T) / n) +
                         std::log(2.0 / delta));
  long tau = static_cast<long>(std::ceil(raw));
  tau = std::min(tau, T / 2);
  if (tau < 1)
    throw std::invalid_argument("init_length: degenerate horizon (tau capped to 0)");
  return tau;
}

PolicyGrid build_policy_grid(int n, double H,
                             const std::vector<std::pair<int, double>>& observations) {
  PolicyGrid grid;
  grid.n = n;
  grid.H = H;
  std::vector<std::set<double>> seen(n);
  for (const auto& [i, p] : observations) {
    if (i < 1 || i > n)
      throw std::invalid_argument("build_policy_grid: mask index out of [1..n]");
    if (p < 0.0 || p > H)
      throw std::invalid_argument("build_policy_grid: price out of [0,H]");
    seen[i - 1].insert(p);
  }
  grid.thresholds.resize(n);
  for (int i = 0; i < n; ++i) {
    seen[i].insert(0.0);
    grid.thresholds[i].assign(seen[i].begin(), seen[i].end());
  }
  return grid;
}

int locate_bucket(const PolicyGrid& grid, int i, double p) {
  const auto& th = grid.thresholds[i];
  if (p == 0.0) return 0;
  // first j >= 1 with p <= p_{i,j}; past the last threshold falls into the
  // padded bucket (p_{i,m_i}, H]
  auto it = std::lower_bound(th.begin() + 1, th.end(), p);
  return static_cast<int>(it - th.begin());
}

BucketAccumulators::BucketAccumulators(const PolicyGrid& grid) {
  g_.resize(grid.n);
  prefix1_.resize(grid.n);
  suffix0_.resize(grid.n);
  for (int i = 0; i < grid.n; ++i) {
    int buckets = grid.m(i) + 2;  // j = 0..m_i plus the padded bucket
    g_[i].assign(buckets, {0.0, 0.0});
    prefix1_[i].assign(buckets, 0.0);
    suffix0_[i].assign(buckets + 1, 0.0);
  }
}

void BucketAccumulators::add(int i, int j, const std::array<double, 2>& f) {
  g_[i][j][0] += f[0];
  g_[i][j][1] += f[1];
  refresh(i);
}

void BucketAccumulators::refresh(int i) {
  const auto& gi = g_[i];
  auto& pre = prefix1_[i];
  auto& suf = suffix0_[i];
  const int B = static_cast<int>(gi.size());
  double acc = 0.0;
  for (int j = 0; j < B; ++j) {
    acc += gi[j][1];
    pre[j] = acc;
  }
  suf[B] = 0.0;
  for (int j = B - 1; j >= 0; --j) suf[j] = suf[j + 1] + gi[j][0];
}

MixtureProbs mixture_probs(const PolicyGrid& grid, const BucketAccumulators& acc,
                           int i_t, int j_t, double gamma, long* op_count) {
  long ops = 0;
  double log_w = 0.0, log_s0 = 0.0, log_s1 = 0.0;
  std::vector<double> scratch;
  for (int i = 0; i < grid.n; ++i) {
    const int mi = grid.m(i);
    scratch.resize(mi + 1);
    for (int j = 0; j <= mi; ++j) scratch[j] = acc.choice_exponent(i, j);
    ops += mi + 1;
    double full = log_sum_exp(scratch.data(), mi + 1);
    log_w += full;
    if (i == i_t) {
      // restricted ranges for the realized context bucket
      // restricted-range sums re-read the scratch row, no new cells touched
      double low = log_sum_exp(scratch.data(), std::min(j_t, mi + 1));
      int hi_from = std::min(j_t, mi + 1);
      double high = log_sum_exp(scratch.data() + hi_from, mi + 1 - hi_from);
      log_s0 += low;
      log_s1 += high;
    } else {
      log_s0 += full;
      log_s1 += full;
    }
  }
  if (!std::isfinite(log_w))
    throw std::logic_error("mixture_probs: normalizer not finite despite log domain");

  MixtureProbs probs;
  probs.xi_bar[0] =
      (1.0 - 2.0 * gamma) * (log_s0 == kNegInf ? 0.0 : std::exp(log_s0 - log_w)) + gamma;
  probs.xi_bar[1] =
      (1.0 - 2.0 * gamma) * (log_s1 == kNegInf ? 0.0 : std::exp(log_s1 - log_w)) + gamma;
  if (op_count) *op_count += ops;
  return probs;
}

void update_accumulators(BucketAccumulators& acc, int i_t, int j_t, int arm,
                         double reward01, const MixtureProbs& probs, double gamma,
                         double bonus) {
  if (probs[arm] < gamma - 1e-9)
    throw std::logic_error("update_accumulators: mixture floor violated");
  const double rhat_pulled = reward01 / probs[arm];
  std::array<double, 2> f;
  for (int b = 0; b < 2; ++b)
    f[b] = 0.5 * gamma * ((b == arm ? rhat_pulled : 0.0) + bonus / probs[b]);
  acc.add(i_t, j_t, f);
}

// ---------------------------------------------------------------------------
// Naive enumeration reference
// ---------------------------------------------------------------------------

NaiveExp4::NaiveExp4(const PolicyGrid& grid) : grid_(&grid) {
  double count = 1.0;
  for (int i = 0; i < grid.n; ++i) count *= grid.m(i) + 1;
  if (count > 1e6)
    throw std::invalid_argument("NaiveExp4: policy grid too large to enumerate");

  std::vector<int> choice(grid.n, 0);
  for (;;) {
    policies_.push_back(choice);
    int i = 0;
    while (i < grid.n) {
      if (++choice[i] <= grid.m(i)) break;
      choice[i] = 0;
      ++i;
    }
    if (i == grid.n) break;
  }
  log_w_.assign(policies_.size(), 0.0);
}

MixtureProbs NaiveExp4::mixture(int i_t, int j_t, double gamma) const {
  std::vector<double> all(log_w_.begin(), log_w_.end());
  std::vector<double> buy;
  std::vector<double> skip;
  for (std::size_t p = 0; p < policies_.size(); ++p) {
    // policy buys iff its threshold v[i_t] = p_{i_t, choice} covers the
    // context bucket, i.e. choice >= j_t
    if (policies_[p][i_t] >= j_t)
      buy.push_back(log_w_[p]);
    else
      skip.push_back(log_w_[p]);
  }
  double lw = log_sum_exp(all.data(), static_cast<int>(all.size()));
  double l1 = log_sum_exp(buy.data(), static_cast<int>(buy.size()));
  double l0 = log_sum_exp(skip.data(), static_cast<int>(skip.size()));
  MixtureProbs probs;
  probs.xi_bar[0] = (1.0 - 2.0 * gamma) * (l0 == kNegInf ? 0.0 : std::exp(l0 - lw)) + gamma;
  probs.xi_bar[1] = (1.0 - 2.0 * gamma) * (l1 == kNegInf ? 0.0 : std::exp(l1 - lw)) + gamma;
  return probs;
}

void NaiveExp4::update(int i_t, int j_t, int arm, double reward01,
                       const MixtureProbs& probs, double gamma, double bonus) {
  const double rhat_pulled = reward01 / probs[arm];
  for (std::size_t p = 0; p < policies_.size(); ++p) {
    int a = policies_[p][i_t] >= j_t ? 1 : 0;
    double c =
        0.5 * gamma * ((a == arm ? rhat_pulled : 0.0) + bonus / probs[a]);
    log_w_[p] += c;
  }
}

// ---------------------------------------------------------------------------
// Strategy
// ---------------------------------------------------------------------------

struct Exp4VCStrategy::DebugSink {
  std::ofstream out;
  long logged_rounds = 0;
};

Exp4VCStrategy::Exp4VCStrategy() : Exp4VCStrategy(Params{}) {}

Exp4VCStrategy::Exp4VCStrategy(Params params) : params_(std::move(params)) {}
Exp4VCStrategy::~Exp4VCStrategy() = default;

void Exp4VCStrategy::start(const EnvView& env, long horizon, std::uint64_t seed) {
  H_ = env.H;
  n_ = env.n_mask;
  T_ = horizon;
  tau_ = init_length(T_, n_, params_.delta);
  round_ = 0;
  rng_.seed(seed);
  init_observations_.clear();
  grid_ = PolicyGrid{};
  acc_.reset();
  exploit_ready_ = false;
  mixture_ops_ = 0;
  pending_exploit_ = false;
  if (!params_.debug_path.empty()) {
    debug_ = std::make_unique<DebugSink>();
    debug_->out.open(params_.debug_path);
  }
}

void Exp4VCStrategy::build_exploit_state() {
  grid_ = build_policy_grid(n_, H_, init_observations_);
  double lgs = grid_.log_grid_size();
  double denom = 2.0 * static_cast<double>(T_ - tau_);
  gamma_ = std::clamp(std::sqrt(lgs / denom), 1e-6, 0.499);
  bonus_ = std::sqrt((lgs + std::log(1.0 / params_.delta)) / denom);
  acc_ = std::make_unique<BucketAccumulators>(grid_);
  exploit_ready_ = true;
  if (debug_) {
    debug_->out << "# grid n=" << grid_.n << " log|V|=" << lgs
                << " tau=" << tau_ << " gamma=" << gamma_ << " bonus=" << bonus_
                << "\n";
    for (int i = 0; i < grid_.n; ++i) {
      debug_->out << "# V_" << (i + 1) << " =";
      for (double p : grid_.thresholds[i]) debug_->out << ' ' << p;
      debug_->out << "\n";
    }
  }
}

int Exp4VCStrategy::decide(const MaskValue& mask, double price) {
  ++round_;
  if (round_ > T_) throw phase_error("Exp4VCStrategy: called past the horizon");

  if (round_ <= tau_) {
    init_observations_.emplace_back(mask.key() + 1, price);
    pending_exploit_ = false;
    pending_arm_ = std::bernoulli_distribution(0.5)(rng_) ? 1 : 0;
    return pending_arm_;
  }

  if (!exploit_ready_) build_exploit_state();
  pending_i_ = mask.key();
  pending_j_ = locate_bucket(grid_, pending_i_, price);
  pending_probs_ = mixture_probs(grid_, *acc_, pending_i_, pending_j_, gamma_,
                                 &mixture_ops_);
  pending_arm_ = std::bernoulli_distribution(pending_probs_[1])(rng_) ? 1 : 0;
  pending_exploit_ = true;
  return pending_arm_;
}

void Exp4VCStrategy::feedback(const std::optional<Item>& purchased, double utility) {
  (void)purchased;
  if (!pending_exploit_) return;

  // Exp4.P machinery wants rewards in [0,1]: map utilities in [-H,H] via
  // (u + H) / 2H; arm 0's constant true reward 0 maps to 0.5.
  double reward01 = pending_arm_ == 1 ? (utility + H_) / (2.0 * H_) : 0.5;
  if (debug_ && debug_->logged_rounds < 100) {
    double rhat_std0 = pending_arm_ == 0 ? reward01 / pending_probs_[0] : 0.0;
    double rhat_std1 = pending_arm_ == 1 ? reward01 / pending_probs_[1] : 0.0;
    // the verbatim (b_t u_t / xi[1], 0) convention, for comparison
    double rhat_paper0 = pending_arm_ * utility / pending_probs_[1];
    debug_->out << "t=" << round_ << " xi0=" << pending_probs_[0]
                << " xi1=" << pending_probs_[1] << " arm=" << pending_arm_
                << " rhat_std=(" << rhat_std0 << ',' << rhat_std1 << ")"
                << " rhat_verbatim=(" << rhat_paper0 << ",0)\n";
    ++debug_->logged_rounds;
  }
  update_accumulators(*acc_, pending_i_, pending_j_, pending_arm_, reward01,
                      pending_probs_, gamma_, bonus_);
  pending_exploit_ = false;
}

void Exp4VCStrategy::dump_accumulators(std::ostream& os) const {
  if (!acc_) {
    os << "# accumulators not initialized\n";
    return;
  }
  for (int i = 0; i < grid_.n; ++i)
    for (int j = 0; j < acc_->buckets(i); ++j)
      os << "G[" << i << "][" << j << "] = (" << acc_->g(i, j, 0) << ", "
         << acc_->g(i, j, 1) << ")\n";
}

}  // namespace ppa

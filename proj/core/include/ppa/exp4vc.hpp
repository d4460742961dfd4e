#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <ostream>
#include <utility>
#include <vector>

#include "ppa/rng.hpp"
#include "ppa/types.hpp"

namespace ppa {

// The finite threshold-policy grid extracted from the initialization phase:
// per mask index i, the sorted unique prices seen under i plus the 0
// sentinel. The implied policy set is the cross product of the per-index
// threshold choices.
struct PolicyGrid {
  int n = 0;
  double H = 1.0;
  std::vector<std::vector<double>> thresholds;  // per i: {0 = p_0 < p_1 < ...}

  int m(int i) const { return static_cast<int>(thresholds[i].size()) - 1; }
  int max_m() const;
  long sum_m() const;
  double log_grid_size() const;  // sum_i ln(m_i + 1) = ln |V|
};

// Exploration length: ceil(sqrt(T n ln(eT/n) + ln(2/delta))), capped at
// floor(T/2) so the exploitation phase stays nonempty. Degenerate horizons
// (cap forces 0) throw.
long init_length(long T, int n, double delta);

// indices in observations are 1-based mask indices.
PolicyGrid build_policy_grid(int n, double H,
                             const std::vector<std::pair<int, double>>& observations);

// Bucket index for price p under mask index i (0-based): 0 iff p == 0, else
// the unique j with p in (p_{i,j-1}, p_{i,j}], where an extra padded bucket
// (p_{i,m_i}, H] has index m_i + 1.
int locate_bucket(const PolicyGrid& grid, int i, double p);

struct MixtureProbs {
  std::array<double, 2> xi_bar{0.0, 0.0};
  double operator[](int b) const { return xi_bar[b]; }
};

// Log-domain per-(index, bucket, arm) cumulative exponents G[i][j][b], with
// per-index prefix sums over arm 1 and suffix sums over arm 0 so that the
// log-weight contribution of threshold choice j at index i is O(1).
class BucketAccumulators {
 public:
  explicit BucketAccumulators(const PolicyGrid& grid);

  int buckets(int i) const { return static_cast<int>(g_[i].size()); }  // m_i + 2
  double g(int i, int j, int b) const { return g_[i][j][b]; }

  // Log-weight exponent of the policy choice v[i] = p_{i,j}:
  // sum_{k<=j} G[i][k][1] + sum_{k>j} G[i][k][0].
  double choice_exponent(int i, int j) const {
    return prefix1_[i][j] + suffix0_[i][j + 1];
  }

  void add(int i, int j, const std::array<double, 2>& f);

 private:
  void refresh(int i);
  std::vector<std::vector<std::array<double, 2>>> g_;
  std::vector<std::vector<double>> prefix1_;
  std::vector<std::vector<double>> suffix0_;
};

// xi_bar via the restricted-product decomposition, all sums and products in
// log domain. Cost O(n + sum_i m_i); `op_count`, when given, accumulates the
// number of accumulator cells touched.
MixtureProbs mixture_probs(const PolicyGrid& grid, const BucketAccumulators& acc,
                           int i_t, int j_t, double gamma,
                           long* op_count = nullptr);

// Applies one round of the multiplicative-weight update in accumulator form:
// rhat[a] = reward * 1(a = arm) / xi_bar[arm], f_b = (gamma/2)(rhat[b] +
// bonus / xi_bar[b]), added to the single bucket (i_t, j_t).
void update_accumulators(BucketAccumulators& acc, int i_t, int j_t, int arm,
                         double reward01, const MixtureProbs& probs, double gamma,
                         double bonus);

// Literal exponential enumeration over the policy grid with explicit
// per-policy weights; the equivalence reference for the bucketized path.
// Refuses grids with more than 10^6 policies.
class NaiveExp4 {
 public:
  explicit NaiveExp4(const PolicyGrid& grid);

  MixtureProbs mixture(int i_t, int j_t, double gamma) const;
  void update(int i_t, int j_t, int arm, double reward01, const MixtureProbs& probs,
              double gamma, double bonus);

  std::size_t policy_count() const { return policies_.size(); }
  double log_weight(std::size_t p) const { return log_w_[p]; }
  const std::vector<int>& policy(std::size_t p) const { return policies_[p]; }

 private:
  const PolicyGrid* grid_;
  std::vector<std::vector<int>> policies_;  // per policy: choice j_i per index
  std::vector<double> log_w_;
};

// The full strategy: uniform-random initialization phase of length tau, grid
// extraction, then the weighted subroutine with gamma and the confidence
// bonus derived from the grid size.
class Exp4VCStrategy final : public BuyerStrategy {
 public:
  struct Params {
    double delta = 0.05;
    std::string debug_path;  // empty: no diagnostics
  };

  Exp4VCStrategy();
  explicit Exp4VCStrategy(Params params);
  ~Exp4VCStrategy() override;

  void start(const EnvView& env, long horizon, std::uint64_t seed) override;
  int decide(const MaskValue& mask, double price) override;
  void feedback(const std::optional<Item>& purchased, double utility) override;
  std::string name() const override { return "exp4vc"; }

  long tau() const { return tau_; }
  double gamma() const { return gamma_; }
  const PolicyGrid& grid() const { return grid_; }
  long mixture_op_count() const { return mixture_ops_; }
  void dump_accumulators(std::ostream& os) const;

 private:
  void build_exploit_state();

  Params params_;
  double H_ = 1.0;
  int n_ = 0;
  long T_ = 0;
  long tau_ = 0;
  long round_ = 0;
  double gamma_ = 0.0;
  double bonus_ = 0.0;
  Rng rng_;
  std::vector<std::pair<int, double>> init_observations_;
  PolicyGrid grid_;
  std::unique_ptr<BucketAccumulators> acc_;
  bool exploit_ready_ = false;
  long mixture_ops_ = 0;

  // pending context between decide() and feedback()
  int pending_i_ = -1;
  int pending_j_ = -1;
  int pending_arm_ = 0;
  MixtureProbs pending_probs_;
  bool pending_exploit_ = false;

  struct DebugSink;
  std::unique_ptr<DebugSink> debug_;
};

}  // namespace ppa

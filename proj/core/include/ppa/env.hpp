#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "ppa/rng.hpp"
#include "ppa/types.hpp"

namespace ppa {

// ---------------------------------------------------------------------------
// Price processes. A price is always a function of (t, mask value) only;
// there is no constructor that can key a price on the item itself, which is
// how the mask-measurability constraint is enforced structurally.
// ---------------------------------------------------------------------------

struct PriceDist {
  enum class Kind { uniform, point };
  Kind kind = Kind::uniform;
  double lo = 0.0;
  double hi = 1.0;  // unused for point masses

  double sample(Rng& rng) const {
    if (kind == Kind::point) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  }
};

struct StochasticPrices {
  // One distribution per mask value, or a single shared distribution.
  std::vector<PriceDist> per_mask;
};

struct AdversarialPrices {
  std::string generator;  // "threshold-sweep" | "periodic-spike" | "near-oracle"
  int period = 10;        // periodic-spike
  double epsilon = 0.05;  // near-oracle
  double base = 0.1;      // periodic-spike off-spike price
  double amplitude = 0.2; // threshold-sweep half-width
  int sweep_points = 21;  // threshold-sweep grid resolution
  std::uint64_t seed = 0;
};

using PriceProcess = std::variant<StochasticPrices, AdversarialPrices>;

// ---------------------------------------------------------------------------
// Item sources.
// ---------------------------------------------------------------------------

struct FiniteItems {
  std::vector<double> values;  // v*(x) per item
  std::vector<double> probs;   // P(x), sums to 1
  std::vector<int> mask_of;    // h(x) in [1..n]
  int n = 0;                   // mask cardinality
};

struct Separators {
  std::vector<std::vector<double>> rows;  // l rows of length d

  int l() const { return static_cast<int>(rows.size()); }
  int d() const { return rows.empty() ? 0 : static_cast<int>(rows[0].size()); }
};

// Sign pattern of the l projections; bit j = 1 iff w_j . x >= 0.
MaskValue simhash(const Separators& sep, const std::vector<double>& x);

struct DensitySpec {
  enum class Kind { uniform_box, truncated_gaussian };
  Kind kind = Kind::uniform_box;
  std::vector<double> mean;    // truncated_gaussian only
  std::vector<double> stddev;  // diagonal
};

struct ValuationSpec {
  enum class Kind { coord_mean, affine_clipped };
  Kind kind = Kind::coord_mean;
  std::vector<double> weights;  // affine_clipped
  double offset = 0.0;
};

struct ContinuousItems {
  int d = 0;
  int l = 0;
  DensitySpec density;
  ValuationSpec valuation;
  std::uint64_t separator_seed = 0;
  Separators separators;
};

// ---------------------------------------------------------------------------
// EnvModel: immutable after construction, shared across parallel runs.
// ---------------------------------------------------------------------------

class EnvModel {
 public:
  double H = 1.0;
  bool known_distribution = false;  // buyer may see density + valuation
  std::variant<FiniteItems, ContinuousItems> items;
  PriceProcess prices;

  bool is_finite() const { return std::holds_alternative<FiniteItems>(items); }
  const FiniteItems& finite() const { return std::get<FiniteItems>(items); }
  const ContinuousItems& continuous() const {
    return std::get<ContinuousItems>(items);
  }

  int n_mask() const;
  Item sample_item(Rng& rng) const;
  MaskValue mask_value(const Item& item) const;
  double value_of(const Item& item) const;
  std::vector<double> sample_point(Rng& rng) const;  // continuous envs

  EnvView view() const;
};

// Validating constructors. Violations throw std::invalid_argument naming the
// offending field.
EnvModel make_finite_env(std::vector<double> values, std::vector<double> probs,
                         std::vector<int> mask_of, PriceProcess prices,
                         double H = 1.0);

EnvModel make_simhash_env(int d, int l, DensitySpec density,
                          ValuationSpec valuation,
                          std::uint64_t separator_seed, PriceProcess prices,
                          double H = 1.0);

StochasticPrices stochastic_price_process(std::vector<PriceDist> per_mask);
AdversarialPrices adversarial_price_process(const std::string& generator_id,
                                            std::uint64_t seed);

// Full oblivious (t, mask) -> price table; cond_values are the per-mask true
// conditional expected values, consumed by the threshold-sweep and
// near-oracle generators.
std::vector<std::vector<double>> materialize_adversarial_table(
    const AdversarialPrices& adv, long T, int n_mask, double H,
    const std::vector<double>& cond_values);

// JSON (de)serialization of the full environment descriptor, schema
// documented in the README. Round-trips exactly enough to reproduce runs.
std::string env_to_json(const EnvModel& env);
EnvModel env_from_json(const std::string& text);

}  // namespace ppa

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ppa {

// Thrown when a conditional expectation is requested for a mask value with
// zero (or zero estimated) probability mass.
struct no_mass_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a strategy is driven outside its phase machine (e.g. an
// exploration update during exploitation, or a step past the horizon).
struct phase_error : std::logic_error {
  using std::logic_error::logic_error;
};

// Thrown when supposedly realizable separator-recovery data turns out to be
// inseparable. Signals an environment bug, not a user error.
struct realizability_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An item for sale: either an index into a finite item table or a point in
// [0,1]^d. Exactly one representation is active.
struct Item {
  int finite_id = -1;
  std::vector<double> point;

  bool is_finite() const { return finite_id >= 0; }

  static Item finite(int id) {
    Item it;
    it.finite_id = id;
    return it;
  }
  static Item continuous(std::vector<double> x) {
    Item it;
    it.point = std::move(x);
    return it;
  }
};

// The masked image h(x) that the buyer sees: an index in [1..n] for finite
// masks, or a sign-pattern bit vector for SimHash masks.
struct MaskValue {
  int index = -1;                 // 1-based, finite masks only
  std::vector<std::uint8_t> bits; // SimHash masks only

  bool is_index() const { return index >= 1; }

  // 0-based key usable for table lookups; bit vectors are packed
  // little-endian (bits[0] is the lowest bit).
  int key() const {
    if (is_index()) return index - 1;
    int k = 0;
    for (std::size_t j = 0; j < bits.size(); ++j)
      if (bits[j]) k |= (1 << j);
    return k;
  }

  static MaskValue from_index(int i) {
    MaskValue m;
    m.index = i;
    return m;
  }
  static MaskValue from_bits(std::vector<std::uint8_t> b) {
    MaskValue m;
    m.bits = std::move(b);
    return m;
  }

  bool operator==(const MaskValue& o) const {
    return index == o.index && bits == o.bits;
  }
};

struct RoundRecord {
  long t = 0;  // 1-based round index
  MaskValue mask;
  double price = 0.0;
  int decision = 0;
  double utility = 0.0;
  std::optional<Item> revealed_item;  // present iff decision == 1
};

struct Transcript {
  std::vector<RoundRecord> records;
  long horizon = 0;
  std::uint64_t seed = 0;

  // Ground-truth side channel for regret accounting. Filled by the protocol
  // runner, never exposed to the strategy.
  std::vector<Item> true_items;
};

inline double buyer_utility(double value, double price, int decision) {
  return decision ? value - price : 0.0;
}

class EnvModel;

// What a strategy may legitimately see about the environment before the run
// starts. `env` is non-null only when the environment is flagged as having a
// buyer-known item distribution (the known-P setting); strategies for the
// unknown-P settings must not touch it.
struct EnvView {
  double H = 1.0;
  int n_mask = 0;  // number of mask values (2^l for SimHash)
  int d = 0;       // feature dimension, 0 for finite envs
  int l = 0;       // SimHash bit count, 0 for finite envs
  const EnvModel* known_distribution = nullptr;
};

// Two calls per round, mirroring the information flow of the protocol:
// decide() sees only (mask, price); feedback() reveals the item on purchase.
class BuyerStrategy {
 public:
  virtual ~BuyerStrategy() = default;

  virtual void start(const EnvView& env, long horizon, std::uint64_t seed) = 0;
  virtual int decide(const MaskValue& mask, double price) = 0;
  virtual void feedback(const std::optional<Item>& purchased, double utility) = 0;
  virtual std::string name() const = 0;
};

}  // namespace ppa

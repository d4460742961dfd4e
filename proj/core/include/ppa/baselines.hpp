#pragma once

#include "ppa/oracle.hpp"
#include "ppa/types.hpp"

namespace ppa {

class AlwaysBuyStrategy final : public BuyerStrategy {
 public:
  void start(const EnvView&, long, std::uint64_t) override {}
  int decide(const MaskValue&, double) override { return 1; }
  void feedback(const std::optional<Item>&, double) override {}
  std::string name() const override { return "always-buy"; }
};

class NeverBuyStrategy final : public BuyerStrategy {
 public:
  void start(const EnvView&, long, std::uint64_t) override {}
  int decide(const MaskValue&, double) override { return 0; }
  void feedback(const std::optional<Item>&, double) override {}
  std::string name() const override { return "never-buy"; }
};

// Buys iff a fixed threshold is at least the posted price, the same
// threshold for every mask value.
class FixedThresholdStrategy final : public BuyerStrategy {
 public:
  explicit FixedThresholdStrategy(double threshold) : threshold_(threshold) {}
  void start(const EnvView&, long, std::uint64_t) override {}
  int decide(const MaskValue&, double price) override {
    return threshold_ >= price ? 1 : 0;
  }
  void feedback(const std::optional<Item>&, double) override {}
  std::string name() const override { return "fixed-threshold"; }

 private:
  double threshold_;
};

// The myopic comparator of the regret definition, played as a strategy:
// buys iff E[v* | h(x)] > p, with E computed from ground truth.
class OracleStrategy final : public BuyerStrategy {
 public:
  explicit OracleStrategy(const Oracle& oracle) : oracle_(&oracle) {}
  void start(const EnvView&, long, std::uint64_t) override {}
  int decide(const MaskValue& mask, double price) override {
    if (oracle_->mask_mass(mask) <= 0.0) return 0;
    return oracle_->decide(mask, price);
  }
  void feedback(const std::optional<Item>&, double) override {}
  std::string name() const override { return "oracle"; }

 private:
  const Oracle* oracle_;
};

}  // namespace ppa

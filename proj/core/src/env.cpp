#include "ppa/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace ppa {

using nlohmann::json;

// ---------------------------------------------------------------------------
// SimHash
// ---------------------------------------------------------------------------

MaskValue simhash(const Separators& sep, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != sep.d())
    throw std::invalid_argument("simhash: point dimension does not match separators");
  std::vector<std::uint8_t> bits(sep.rows.size());
  for (std::size_t j = 0; j < sep.rows.size(); ++j) {
    double dot = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) dot += sep.rows[j][k] * x[k];
    bits[j] = dot >= 0.0 ? 1 : 0;
  }
  return MaskValue::from_bits(std::move(bits));
}

// ---------------------------------------------------------------------------
// EnvModel accessors
// ---------------------------------------------------------------------------

int EnvModel::n_mask() const {
  if (is_finite()) return finite().n;
  return 1 << continuous().l;
}

std::vector<double> EnvModel::sample_point(Rng& rng) const {
  const auto& c = continuous();
  std::vector<double> x(c.d);
  if (c.density.kind == DensitySpec::Kind::uniform_box) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : x) v = u(rng);
    return x;
  }
  // Truncated Gaussian: rejection from the untruncated Gaussian.
  std::normal_distribution<double> norm(0.0, 1.0);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    bool inside = true;
    for (int k = 0; k < c.d; ++k) {
      x[k] = c.density.mean[k] + c.density.stddev[k] * norm(rng);
      if (x[k] < 0.0 || x[k] > 1.0) inside = false;
    }
    if (inside) return x;
  }
  throw std::runtime_error("sample_point: truncated-gaussian rejection failed (mass of box ~ 0)");
}

Item EnvModel::sample_item(Rng& rng) const {
  if (is_finite()) {
    const auto& f = finite();
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < f.probs.size(); ++i) {
      acc += f.probs[i];
      if (u < acc) return Item::finite(static_cast<int>(i));
    }
    return Item::finite(static_cast<int>(f.probs.size()) - 1);
  }
  return Item::continuous(sample_point(rng));
}

MaskValue EnvModel::mask_value(const Item& item) const {
  if (is_finite()) return MaskValue::from_index(finite().mask_of[item.finite_id]);
  return simhash(continuous().separators, item.point);
}

double EnvModel::value_of(const Item& item) const {
  if (is_finite()) return finite().values[item.finite_id];
  const auto& c = continuous();
  const auto& x = item.point;
  double v = 0.0;
  switch (c.valuation.kind) {
    case ValuationSpec::Kind::coord_mean: {
      double s = std::accumulate(x.begin(), x.end(), 0.0);
      v = H * s / static_cast<double>(x.size());
      break;
    }
    case ValuationSpec::Kind::affine_clipped: {
      double s = c.valuation.offset;
      for (std::size_t k = 0; k < x.size(); ++k) s += c.valuation.weights[k] * x[k];
      v = std::min(H, s);
      break;
    }
  }
  return std::clamp(v, 0.0, H);
}

EnvView EnvModel::view() const {
  EnvView v;
  v.H = H;
  v.n_mask = n_mask();
  if (!is_finite()) {
    v.d = continuous().d;
    v.l = continuous().l;
  }
  if (known_distribution) v.known_distribution = this;
  return v;
}

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

static void validate_prices(const PriceProcess& prices, int n_mask, double H) {
  if (const auto* st = std::get_if<StochasticPrices>(&prices)) {
    if (st->per_mask.empty())
      throw std::invalid_argument("prices.per_mask: must not be empty");
    if (st->per_mask.size() != 1 &&
        st->per_mask.size() != static_cast<std::size_t>(n_mask))
      throw std::invalid_argument(
          "prices.per_mask: must be keyed by mask value (size 1 or n), got size " +
          std::to_string(st->per_mask.size()));
    for (const auto& d : st->per_mask) {
      double hi = d.kind == PriceDist::Kind::point ? d.lo : d.hi;
      if (d.lo < 0.0 || hi > H || d.lo > hi)
        throw std::invalid_argument("prices.per_mask: support must lie in [0,H]");
    }
  } else {
    const auto& adv = std::get<AdversarialPrices>(prices);
    if (adv.generator != "threshold-sweep" && adv.generator != "periodic-spike" &&
        adv.generator != "near-oracle")
      throw std::invalid_argument("prices.generator: unknown id '" + adv.generator + "'");
  }
}

EnvModel make_finite_env(std::vector<double> values, std::vector<double> probs,
                         std::vector<int> mask_of, PriceProcess prices, double H) {
  if (H <= 0.0) throw std::invalid_argument("H: must be positive");
  if (values.empty()) throw std::invalid_argument("values: must not be empty");
  if (probs.size() != values.size())
    throw std::invalid_argument("probs: size must match values");
  if (mask_of.size() != values.size())
    throw std::invalid_argument("mask: size must match values");

  double psum = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw std::invalid_argument("probs: entries must be nonnegative");
    psum += p;
  }
  if (std::abs(psum - 1.0) > 1e-12)
    throw std::invalid_argument("probs: must sum to 1 (got " + std::to_string(psum) + ")");

  int n = 0;
  for (int m : mask_of) {
    if (m < 1) throw std::invalid_argument("mask: indices must be >= 1");
    n = std::max(n, m);
  }
  for (double v : values)
    if (v < 0.0 || v > H) throw std::invalid_argument("values: must lie in [0,H]");

  validate_prices(prices, n, H);

  EnvModel env;
  env.H = H;
  env.known_distribution = false;
  FiniteItems f;
  f.values = std::move(values);
  f.probs = std::move(probs);
  f.mask_of = std::move(mask_of);
  f.n = n;
  env.items = std::move(f);
  env.prices = std::move(prices);
  return env;
}

// Draws a direction uniformly on the unit sphere, then projects it to be
// orthogonal to a random interior point of the box, so the hyperplane
// w . x = 0 passes through the box interior and both sign regions have
// positive mass.
static std::vector<double> draw_separator_row(int d, Rng& rng) {
  std::normal_distribution<double> norm(0.0, 1.0);
  std::uniform_real_distribution<double> mid(0.25, 0.75);
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<double> u(d), x0(d);
    double unorm = 0.0;
    for (int k = 0; k < d; ++k) {
      u[k] = norm(rng);
      x0[k] = mid(rng);
      unorm += u[k] * u[k];
    }
    if (unorm < 1e-12) continue;
    double ux0 = 0.0, x0n = 0.0;
    for (int k = 0; k < d; ++k) {
      ux0 += u[k] * x0[k];
      x0n += x0[k] * x0[k];
    }
    std::vector<double> w(d);
    double wn = 0.0;
    for (int k = 0; k < d; ++k) {
      w[k] = u[k] - (ux0 / x0n) * x0[k];
      wn += w[k] * w[k];
    }
    if (wn < 1e-10) continue;
    wn = std::sqrt(wn);
    for (auto& v : w) v /= wn;
    return w;
  }
  throw std::runtime_error("make_simhash_env: failed to draw a separator intersecting the box");
}

EnvModel make_simhash_env(int d, int l, DensitySpec density,
                          ValuationSpec valuation, std::uint64_t separator_seed,
                          PriceProcess prices, double H) {
  if (d < 1) throw std::invalid_argument("d: must be >= 1");
  if (l < 1) throw std::invalid_argument("l: must be >= 1");
  if (H <= 0.0) throw std::invalid_argument("H: must be positive");
  if (l > 20) throw std::invalid_argument("l: mask cardinality 2^l too large");

  if (density.kind == DensitySpec::Kind::truncated_gaussian) {
    if (static_cast<int>(density.mean.size()) != d ||
        static_cast<int>(density.stddev.size()) != d)
      throw std::invalid_argument("density: mean/stddev must have length d");
    for (double s : density.stddev)
      if (s <= 0.0) throw std::invalid_argument("density.stddev: must be positive");
  }
  if (valuation.kind == ValuationSpec::Kind::affine_clipped) {
    if (static_cast<int>(valuation.weights.size()) != d)
      throw std::invalid_argument("valuation.weights: must have length d");
    double lo = valuation.offset;
    for (double w : valuation.weights) lo += std::min(w, 0.0);
    if (lo < 0.0)
      throw std::invalid_argument("valuation: must be nonnegative on the box (concavity)");
  }

  validate_prices(prices, 1 << l, H);

  Rng rng = make_rng(separator_seed, Stream::items, 0xabcd);
  Separators sep;
  sep.rows.reserve(l);
  for (int j = 0; j < l; ++j) sep.rows.push_back(draw_separator_row(d, rng));

  EnvModel env;
  env.H = H;
  env.known_distribution = true;
  ContinuousItems c;
  c.d = d;
  c.l = l;
  c.density = std::move(density);
  c.valuation = std::move(valuation);
  c.separator_seed = separator_seed;
  c.separators = std::move(sep);
  env.items = std::move(c);
  env.prices = std::move(prices);
  return env;
}

StochasticPrices stochastic_price_process(std::vector<PriceDist> per_mask) {
  StochasticPrices st;
  st.per_mask = std::move(per_mask);
  return st;
}

AdversarialPrices adversarial_price_process(const std::string& generator_id,
                                            std::uint64_t seed) {
  if (generator_id != "threshold-sweep" && generator_id != "periodic-spike" &&
      generator_id != "near-oracle")
    throw std::invalid_argument("adversarial_price_process: unknown generator '" +
                                generator_id + "'");
  AdversarialPrices adv;
  adv.generator = generator_id;
  adv.seed = seed;
  return adv;
}

std::vector<std::vector<double>> materialize_adversarial_table(
    const AdversarialPrices& adv, long T, int n_mask, double H,
    const std::vector<double>& cond_values) {
  std::vector<std::vector<double>> table(
      static_cast<std::size_t>(T), std::vector<double>(n_mask, 0.0));
  auto clamp01H = [H](double p) { return std::clamp(p, 0.0, H); };

  if (adv.generator == "periodic-spike") {
    for (long t = 1; t <= T; ++t)
      for (int k = 0; k < n_mask; ++k)
        table[t - 1][k] = (t % adv.period == 0) ? H : clamp01H(adv.base);
    return table;
  }

  if (adv.generator == "near-oracle") {
    for (long t = 1; t <= T; ++t)
      for (int k = 0; k < n_mask; ++k)
        table[t - 1][k] =
            clamp01H(cond_values[k] + ((t % 2 == 1) ? -adv.epsilon : adv.epsilon));
    return table;
  }

  // threshold-sweep: cyclic grid of offsets in [-amplitude, amplitude]
  // around each mask value's true conditional value.
  const int P = std::max(2, adv.sweep_points);
  for (long t = 1; t <= T; ++t) {
    double frac = static_cast<double>((t - 1) % P) / static_cast<double>(P - 1);
    double off = -adv.amplitude + 2.0 * adv.amplitude * frac;
    for (int k = 0; k < n_mask; ++k) table[t - 1][k] = clamp01H(cond_values[k] + off);
  }
  return table;
}

// ---------------------------------------------------------------------------
// JSON schema
// ---------------------------------------------------------------------------

static json prices_to_json(const PriceProcess& prices) {
  json j;
  if (const auto* st = std::get_if<StochasticPrices>(&prices)) {
    j["kind"] = "stochastic";
    json dists = json::array();
    for (const auto& d : st->per_mask) {
      json e;
      e["dist"] = d.kind == PriceDist::Kind::point ? "point" : "uniform";
      e["lo"] = d.lo;
      if (d.kind == PriceDist::Kind::uniform) e["hi"] = d.hi;
      dists.push_back(e);
    }
    j["per_mask"] = dists;
  } else {
    const auto& adv = std::get<AdversarialPrices>(prices);
    j["kind"] = "adversarial";
    j["generator"] = adv.generator;
    j["period"] = adv.period;
    j["epsilon"] = adv.epsilon;
    j["base"] = adv.base;
    j["amplitude"] = adv.amplitude;
    j["sweep_points"] = adv.sweep_points;
    j["seed"] = adv.seed;
  }
  return j;
}

static PriceProcess prices_from_json(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "stochastic") {
    std::vector<PriceDist> dists;
    for (const auto& e : j.at("per_mask")) {
      PriceDist d;
      std::string id = e.at("dist").get<std::string>();
      if (id == "point")
        d.kind = PriceDist::Kind::point;
      else if (id == "uniform")
        d.kind = PriceDist::Kind::uniform;
      else
        throw std::invalid_argument("prices.per_mask.dist: unknown id '" + id + "'");
      d.lo = e.at("lo").get<double>();
      if (d.kind == PriceDist::Kind::uniform) d.hi = e.at("hi").get<double>();
      dists.push_back(d);
    }
    return stochastic_price_process(std::move(dists));
  }
  if (kind == "adversarial") {
    AdversarialPrices adv =
        adversarial_price_process(j.at("generator").get<std::string>(),
                                  j.value("seed", std::uint64_t{0}));
    adv.period = j.value("period", adv.period);
    adv.epsilon = j.value("epsilon", adv.epsilon);
    adv.base = j.value("base", adv.base);
    adv.amplitude = j.value("amplitude", adv.amplitude);
    adv.sweep_points = j.value("sweep_points", adv.sweep_points);
    return adv;
  }
  throw std::invalid_argument("prices.kind: must be 'stochastic' or 'adversarial'");
}

std::string env_to_json(const EnvModel& env) {
  json j;
  j["H"] = env.H;
  if (env.is_finite()) {
    const auto& f = env.finite();
    j["type"] = "finite";
    j["values"] = f.values;
    j["probs"] = f.probs;
    j["mask"] = f.mask_of;
  } else {
    const auto& c = env.continuous();
    j["type"] = "simhash";
    j["d"] = c.d;
    j["l"] = c.l;
    j["separator_seed"] = c.separator_seed;
    json dens;
    dens["id"] = c.density.kind == DensitySpec::Kind::uniform_box
                     ? "uniform"
                     : "truncated-gaussian";
    if (c.density.kind == DensitySpec::Kind::truncated_gaussian) {
      dens["mean"] = c.density.mean;
      dens["stddev"] = c.density.stddev;
    }
    j["density"] = dens;
    json val;
    val["id"] = c.valuation.kind == ValuationSpec::Kind::coord_mean
                    ? "coord-mean"
                    : "affine-clipped";
    if (c.valuation.kind == ValuationSpec::Kind::affine_clipped) {
      val["weights"] = c.valuation.weights;
      val["offset"] = c.valuation.offset;
    }
    j["valuation"] = val;
  }
  j["prices"] = prices_to_json(env.prices);
  return j.dump(2);
}

EnvModel env_from_json(const std::string& text) {
  json j = json::parse(text);
  double H = j.value("H", 1.0);
  std::string type = j.at("type").get<std::string>();
  PriceProcess prices = prices_from_json(j.at("prices"));
  if (type == "finite") {
    return make_finite_env(j.at("values").get<std::vector<double>>(),
                           j.at("probs").get<std::vector<double>>(),
                           j.at("mask").get<std::vector<int>>(), std::move(prices), H);
  }
  if (type == "simhash") {
    DensitySpec dens;
    const json& jd = j.at("density");
    std::string did = jd.at("id").get<std::string>();
    if (did == "uniform")
      dens.kind = DensitySpec::Kind::uniform_box;
    else if (did == "truncated-gaussian") {
      dens.kind = DensitySpec::Kind::truncated_gaussian;
      dens.mean = jd.at("mean").get<std::vector<double>>();
      dens.stddev = jd.at("stddev").get<std::vector<double>>();
    } else
      throw std::invalid_argument("density.id: unknown id '" + did + "'");

    ValuationSpec val;
    const json& jv = j.at("valuation");
    std::string vid = jv.at("id").get<std::string>();
    if (vid == "coord-mean")
      val.kind = ValuationSpec::Kind::coord_mean;
    else if (vid == "affine-clipped") {
      val.kind = ValuationSpec::Kind::affine_clipped;
      val.weights = jv.at("weights").get<std::vector<double>>();
      val.offset = jv.value("offset", 0.0);
    } else
      throw std::invalid_argument("valuation.id: unknown id '" + vid + "'");

    return make_simhash_env(j.at("d").get<int>(), j.at("l").get<int>(),
                            std::move(dens), std::move(val),
                            j.value("separator_seed", std::uint64_t{0}),
                            std::move(prices), H);
  }
  throw std::invalid_argument("type: must be 'finite' or 'simhash'");
}

}  // namespace ppa

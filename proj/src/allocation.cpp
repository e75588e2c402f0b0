#include "csc/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace csc {

std::string_view to_string(Mechanism mechanism) {
  switch (mechanism) {
    case Mechanism::ProRata: return "prorata";
    case Mechanism::GlassFilling: return "glass";
    case Mechanism::PrioritizedGlassFilling: return "priority-glass";
    case Mechanism::DoubleAuction: return "auction";
  }
  return "?";
}

Mechanism parse_mechanism(std::string_view name) {
  for (auto m : kAllMechanisms) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown mechanism '" + std::string(name) +
                              "' (expected prorata, glass, priority-glass or auction)");
}

double AllocationOutcome::traded() const {
  return std::accumulate(consumer_alloc.begin(), consumer_alloc.end(), 0.0);
}

double community_energy(std::span<const double> imports, std::span<const double> exports) {
  const double demand = std::accumulate(imports.begin(), imports.end(), 0.0);
  const double supply = std::accumulate(exports.begin(), exports.end(), 0.0);
  return std::min(demand, supply);
}

std::vector<double> glass_fill(std::span<const double> quantities, double energy) {
  std::vector<double> alloc(quantities.size(), 0.0);
  std::vector<std::size_t> eligible;
  double capacity = 0.0;
  for (std::size_t i = 0; i < quantities.size(); ++i) {
    if (quantities[i] > 0.0) {
      eligible.push_back(i);
      capacity += quantities[i];
    }
  }
  energy = std::min(energy, capacity);
  if (!(energy > 0.0)) return alloc;

  // Residual surplus below this is floating-point noise from the running sum.
  const double noise = 1e-13 * std::max(1.0, energy);
  double surplus = energy;
  // Each round either saturates a member or hands out the whole surplus.
  const std::size_t max_rounds = 2 * eligible.size() + 2;
  for (std::size_t round = 0; round < max_rounds && surplus > noise && !eligible.empty(); ++round) {
    const double share = surplus / static_cast<double>(eligible.size());
    for (auto i : eligible) alloc[i] = std::min(quantities[i], alloc[i] + share);

    double given = 0.0;
    for (double a : alloc) given += a;
    surplus = energy - given;
    std::erase_if(eligible, [&](std::size_t i) { return !(alloc[i] < quantities[i]); });
  }
  return alloc;
}

std::vector<double> fill_by_levels(std::span<const double> quantities, double energy,
                                   std::span<const std::int64_t> level_keys) {
  if (level_keys.size() != quantities.size()) {
    throw std::invalid_argument("fill_by_levels: one level key per member required");
  }
  std::vector<double> alloc(quantities.size(), 0.0);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < quantities.size(); ++i) {
    if (quantities[i] > 0.0) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return level_keys[a] < level_keys[b]; });

  double given = 0.0;
  std::vector<double> level_quantities;
  for (std::size_t begin = 0; begin < order.size();) {
    std::size_t end = begin;
    while (end < order.size() && level_keys[order[end]] == level_keys[order[begin]]) ++end;

    const double remaining = energy - given;
    if (!(remaining > 0.0)) break;
    level_quantities.clear();
    for (std::size_t k = begin; k < end; ++k) level_quantities.push_back(quantities[order[k]]);
    const auto level_alloc = glass_fill(level_quantities, remaining);
    for (std::size_t k = begin; k < end; ++k) {
      alloc[order[k]] = level_alloc[k - begin];
      given += level_alloc[k - begin];
    }
    begin = end;
  }
  return alloc;
}

namespace {

std::vector<double> pro_rata_side(std::span<const double> quantities, double energy) {
  std::vector<double> alloc(quantities.size(), 0.0);
  const double total = std::accumulate(quantities.begin(), quantities.end(), 0.0);
  if (!(total > 0.0) || !(energy > 0.0)) return alloc;
  for (std::size_t i = 0; i < quantities.size(); ++i) {
    if (quantities[i] > 0.0) alloc[i] = std::min(quantities[i], quantities[i] / total * energy);
  }
  return alloc;
}

AllocationOutcome make_outcome(std::vector<double> consumer, std::vector<double> producer) {
  AllocationOutcome out;
  out.consumer_alloc = std::move(consumer);
  out.producer_alloc = std::move(producer);
  return out;
}

std::int64_t price_key(double price) {
  // nano-euro resolution so equal tariffs always share a level
  return std::llround(price * 1e9);
}

}  // namespace

AllocationOutcome allocate_pro_rata(std::span<const double> imports, std::span<const double> exports) {
  const double energy = community_energy(imports, exports);
  return make_outcome(pro_rata_side(imports, energy), pro_rata_side(exports, energy));
}

AllocationOutcome allocate_glass_filling(std::span<const double> imports,
                                         std::span<const double> exports) {
  const double energy = community_energy(imports, exports);
  return make_outcome(glass_fill(imports, energy), glass_fill(exports, energy));
}

PriorityState PriorityState::for_axis(const TimeAxis& axis, std::chrono::seconds window) {
  if (axis.step.count() <= 0) throw std::invalid_argument("axis step must be positive");
  return PriorityState(static_cast<std::size_t>(window / axis.step));
}

void PriorityState::set_cumulative(std::vector<double> consumer, std::vector<double> producer) {
  consumer_ = std::move(consumer);
  producer_ = std::move(producer);
  history_.clear();
}

void PriorityState::expire_before(std::size_t t) {
  if (window_ == 0) return;
  while (!history_.empty() && history_.front().t + window_ <= t) {
    for (auto [i, e] : history_.front().consumer) consumer_[i] = std::max(0.0, consumer_[i] - e);
    for (auto [i, e] : history_.front().producer) producer_[i] = std::max(0.0, producer_[i] - e);
    history_.pop_front();
  }
}

void PriorityState::record(std::size_t t, std::span<const double> consumer,
                           std::span<const double> producer) {
  Entry entry{t, {}, {}};
  auto add = [](std::vector<double>& cumulative, std::span<const double> alloc, auto& sparse) {
    if (cumulative.size() < alloc.size()) cumulative.resize(alloc.size(), 0.0);
    for (std::size_t i = 0; i < alloc.size(); ++i) {
      if (alloc[i] > 0.0) {
        cumulative[i] += alloc[i];
        sparse.emplace_back(static_cast<std::uint32_t>(i), alloc[i]);
      }
    }
  };
  add(consumer_, consumer, entry.consumer);
  add(producer_, producer, entry.producer);
  if (window_ != 0) history_.push_back(std::move(entry));
}

std::vector<std::int64_t> PriorityState::levels(const std::vector<double>& cumulative, std::size_t n) {
  std::vector<std::int64_t> keys(n, 0);
  for (std::size_t i = 0; i < n && i < cumulative.size(); ++i) {
    keys[i] = std::llround(cumulative[i] * 1000.0);  // Wh
  }
  return keys;
}

AllocationOutcome allocate_prioritized_glass_filling(std::span<const double> imports,
                                                     std::span<const double> exports,
                                                     PriorityState& state, std::size_t t) {
  state.expire_before(t);
  const double energy = community_energy(imports, exports);
  const auto consumer_keys = state.consumer_levels(imports.size());
  const auto producer_keys = state.producer_levels(exports.size());
  auto out = make_outcome(fill_by_levels(imports, energy, consumer_keys),
                          fill_by_levels(exports, energy, producer_keys));
  out.t = t;
  state.record(t, out.consumer_alloc, out.producer_alloc);
  return out;
}

namespace {

std::vector<std::int64_t> auction_keys(std::span<const double> quantities,
                                       std::span<const double> prices, bool descending,
                                       const char* side) {
  std::vector<std::int64_t> keys(quantities.size(), 0);
  for (std::size_t i = 0; i < quantities.size(); ++i) {
    if (!(quantities[i] > 0.0)) continue;
    if (i >= prices.size() || std::isnan(prices[i])) {
      throw std::invalid_argument(std::string("double auction: missing ") + side +
                                  " price for active member " + std::to_string(i));
    }
    keys[i] = descending ? -price_key(prices[i]) : price_key(prices[i]);
  }
  return keys;
}

}  // namespace

AllocationOutcome allocate_double_auction(std::span<const double> imports,
                                          std::span<const double> exports,
                                          std::span<const double> bids,
                                          std::span<const double> asks) {
  const auto consumer_keys = auction_keys(imports, bids, true, "bid");
  const auto producer_keys = auction_keys(exports, asks, false, "ask");
  const double energy = community_energy(imports, exports);
  auto out = make_outcome(fill_by_levels(imports, energy, consumer_keys),
                          fill_by_levels(exports, energy, producer_keys));
  apply_clearing_price(out, bids, asks);
  return out;
}

namespace {

struct AwardedBounds {
  double max_ask = -std::numeric_limits<double>::infinity();
  double min_bid = std::numeric_limits<double>::infinity();
  bool any = false;
};

AwardedBounds awarded_bounds(const AllocationOutcome& outcome, std::span<const double> bids,
                             std::span<const double> asks) {
  AwardedBounds b;
  bool any_consumer = false;
  bool any_producer = false;
  for (std::size_t i = 0; i < outcome.consumer_alloc.size(); ++i) {
    if (outcome.consumer_alloc[i] > 0.0) {
      b.min_bid = std::min(b.min_bid, bids[i]);
      any_consumer = true;
    }
  }
  for (std::size_t j = 0; j < outcome.producer_alloc.size(); ++j) {
    if (outcome.producer_alloc[j] > 0.0) {
      b.max_ask = std::max(b.max_ask, asks[j]);
      any_producer = true;
    }
  }
  b.any = any_consumer && any_producer;
  return b;
}

}  // namespace

std::optional<double> clearing_price(const AllocationOutcome& outcome, std::span<const double> bids,
                                     std::span<const double> asks) {
  const auto b = awarded_bounds(outcome, bids, asks);
  if (!b.any) return std::nullopt;
  return (b.max_ask + b.min_bid) / 2.0;
}

void apply_clearing_price(AllocationOutcome& outcome, std::span<const double> bids,
                          std::span<const double> asks) {
  const auto b = awarded_bounds(outcome, bids, asks);
  outcome.flags &= static_cast<std::uint8_t>(~kPriceInversion);
  if (!b.any) {
    outcome.price.reset();
    return;
  }
  outcome.price = (b.max_ask + b.min_bid) / 2.0;
  if (b.max_ask > b.min_bid) outcome.flags |= kPriceInversion;
}

std::vector<AllocationOutcome> run_mechanism(const Community& community, Mechanism mechanism,
                                             const MarketOptions& options) {
  const std::size_t n = community.size();
  const double max_excise = community.max_excise();

  std::vector<const TariffSchedule*> tariffs(n);
  std::vector<double> asks(n);
  for (std::size_t i = 0; i < n; ++i) {
    tariffs[i] = &community.tariff_of(i);
    asks[i] = tariffs[i]->producer_price(community.members[i].fiscal, max_excise);
  }

  PriorityState state = PriorityState::for_axis(community.axis, options.priority_window);
  std::vector<AllocationOutcome> outcomes;
  outcomes.reserve(community.axis.count);
  std::vector<double> imports(n), exports(n), bids(n);
  for (std::size_t t = 0; t < community.axis.count; ++t) {
    const auto time = community.axis.at(t);
    for (std::size_t i = 0; i < n; ++i) {
      imports[i] = community.members[i].imports.values.at(t);
      exports[i] = community.members[i].exports.values.at(t);
      bids[i] = tariffs[i]->consumer_price(time);
    }
    AllocationOutcome out;
    switch (mechanism) {
      case Mechanism::ProRata: out = allocate_pro_rata(imports, exports); break;
      case Mechanism::GlassFilling: out = allocate_glass_filling(imports, exports); break;
      case Mechanism::PrioritizedGlassFilling:
        out = allocate_prioritized_glass_filling(imports, exports, state, t);
        break;
      case Mechanism::DoubleAuction: out = allocate_double_auction(imports, exports, bids, asks); break;
    }
    out.t = t;
    apply_clearing_price(out, bids, asks);
    outcomes.push_back(std::move(out));
  }
  return outcomes;
}

}  // namespace csc

#pragma once

// Ex-post local energy market mechanisms. Every per-interval operation works
// on dense vectors indexed by member position within the community; a zero
// quantity means the member is not part of that interval's market.

#include <array>
#include <chrono>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "csc/core.hpp"

namespace csc {

enum class Mechanism { ProRata, GlassFilling, PrioritizedGlassFilling, DoubleAuction };

inline constexpr std::array<Mechanism, 4> kAllMechanisms = {
    Mechanism::ProRata, Mechanism::GlassFilling, Mechanism::PrioritizedGlassFilling,
    Mechanism::DoubleAuction};

/// CLI names: prorata, glass, priority-glass, auction.
std::string_view to_string(Mechanism mechanism);
/// Throws std::invalid_argument for an unknown name.
Mechanism parse_mechanism(std::string_view name);

enum OutcomeFlag : std::uint8_t {
  kNoFlags = 0,
  /// Max awarded ask exceeds min awarded bid; the trade cannot benefit everyone.
  kPriceInversion = 1u << 0,
};

struct AllocationOutcome {
  std::size_t t = 0;
  std::vector<double> consumer_alloc;
  std::vector<double> producer_alloc;
  std::optional<double> price;
  std::uint8_t flags = kNoFlags;

  bool has(OutcomeFlag flag) const { return (flags & flag) != 0; }
  double traded() const;
  bool operator==(const AllocationOutcome&) const = default;
};

/// min(sum of imports, sum of exports).
double community_energy(std::span<const double> imports, std::span<const double> exports);

/// Iterative equal-share filling: each round hands every unsaturated member an
/// equal slice of the undistributed energy, capped by its quantity. Converges
/// to min(quantity_i, L) for a single level L. `energy` must not exceed the
/// total quantity.
std::vector<double> glass_fill(std::span<const double> quantities, double energy);

/// Serves groups of members in order of `level_keys` (ascending), glass-filling
/// each group with what remains. Members with zero quantity are skipped.
std::vector<double> fill_by_levels(std::span<const double> quantities, double energy,
                                   std::span<const std::int64_t> level_keys);

AllocationOutcome allocate_pro_rata(std::span<const double> imports, std::span<const double> exports);

AllocationOutcome allocate_glass_filling(std::span<const double> imports,
                                         std::span<const double> exports);

/// Cumulative locally allocated energy per member over a rolling window,
/// tracked separately for the consumer and producer sides.
class PriorityState {
 public:
  static constexpr std::chrono::seconds kDefaultWindow = std::chrono::days{365};

  /// `window_intervals` of zero means no expiry.
  explicit PriorityState(std::size_t window_intervals = 0) : window_(window_intervals) {}
  static PriorityState for_axis(const TimeAxis& axis, std::chrono::seconds window = kDefaultWindow);

  double consumer_cumulative(std::size_t member) const { return get(consumer_, member); }
  double producer_cumulative(std::size_t member) const { return get(producer_, member); }
  std::size_t window() const { return window_; }

  /// Seeds cumulative totals directly, outside the window bookkeeping.
  void set_cumulative(std::vector<double> consumer, std::vector<double> producer);

  /// Drops contributions recorded at intervals <= t - window.
  void expire_before(std::size_t t);
  void record(std::size_t t, std::span<const double> consumer, std::span<const double> producer);

  /// Cumulative energies quantized to 1 Wh; equal keys share a priority level.
  std::vector<std::int64_t> consumer_levels(std::size_t n) const { return levels(consumer_, n); }
  std::vector<std::int64_t> producer_levels(std::size_t n) const { return levels(producer_, n); }

 private:
  struct Entry {
    std::size_t t;
    std::vector<std::pair<std::uint32_t, double>> consumer;
    std::vector<std::pair<std::uint32_t, double>> producer;
  };

  static double get(const std::vector<double>& v, std::size_t i) { return i < v.size() ? v[i] : 0.0; }
  static std::vector<std::int64_t> levels(const std::vector<double>& cumulative, std::size_t n);

  std::size_t window_;
  std::vector<double> consumer_;
  std::vector<double> producer_;
  std::deque<Entry> history_;
};

/// Serves members with the least cumulative local energy first. Updates
/// `state` with this interval's allocations (after expiring old entries).
AllocationOutcome allocate_prioritized_glass_filling(std::span<const double> imports,
                                                     std::span<const double> exports,
                                                     PriorityState& state, std::size_t t = 0);

/// Price-priority filling: consumers by bid descending, producers by ask
/// ascending, members with the same price sharing a level. The full community
/// energy is traded; a crossing marginal bid/ask is flagged, not truncated.
/// Sets the uniform clearing price. Throws std::invalid_argument when an
/// active member has no (or a NaN) price.
AllocationOutcome allocate_double_auction(std::span<const double> imports,
                                          std::span<const double> exports,
                                          std::span<const double> bids,
                                          std::span<const double> asks);

/// Midpoint of the highest ask among awarded producers and the lowest bid
/// among awarded consumers; empty when nothing is traded.
std::optional<double> clearing_price(const AllocationOutcome& outcome, std::span<const double> bids,
                                     std::span<const double> asks);

/// Sets outcome.price and the price-inversion flag.
void apply_clearing_price(AllocationOutcome& outcome, std::span<const double> bids,
                          std::span<const double> asks);

struct MarketOptions {
  std::chrono::seconds priority_window = PriorityState::kDefaultWindow;
};

/// One outcome per interval, in time order, each priced by the uniform
/// clearing rule using member bids/asks derived from their tariffs.
std::vector<AllocationOutcome> run_mechanism(const Community& community, Mechanism mechanism,
                                             const MarketOptions& options = {});

}  // namespace csc

#pragma once

// Community data model: aligned meter series, members, tariffs and the
// validation rules every other module relies on.

#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace csc {

/// Tolerance for every energy equality / saturation comparison (kWh).
inline constexpr double kEnergyTolerance = 1e-9;

using Timestamp = std::chrono::sys_seconds;

struct TimeAxis {
  Timestamp start{};
  std::chrono::seconds step{std::chrono::minutes{15}};
  std::size_t count = 0;

  Timestamp at(std::size_t t) const { return start + step * static_cast<long long>(t); }
  bool operator==(const TimeAxis&) const = default;
};

/// Non-negative kWh per interval. Imports and exports are separate series.
struct EnergySeries {
  TimeAxis axis;
  std::vector<double> values;

  EnergySeries() = default;
  explicit EnergySeries(const TimeAxis& a) : axis(a), values(a.count, 0.0) {}
  EnergySeries(const TimeAxis& a, std::vector<double> v) : axis(a), values(std::move(v)) {}

  double operator[](std::size_t t) const { return values[t]; }
  double total() const;
  bool all_zero() const;
};

struct FiscalStatus {
  bool vat_liable = false;
  bool excise_liable = false;
  bool operator==(const FiscalStatus&) const = default;
};

enum class Role { Inactive, Consumer, Producer, Prosumer };

const char* to_string(Role role);

struct Member {
  std::string id;
  EnergySeries imports;
  EnergySeries exports;
  std::string tariff_id;
  FiscalStatus fiscal;

  /// Derived from the series, never stored.
  Role role() const;
};

/// Either a flat price or a two-band daily time-of-use price. Bands are
/// selected by the UTC hour of the interval start; the peak band covers
/// [peak_start_hour, peak_end_hour).
struct PriceShape {
  double peak = 0.0;
  double offpeak = 0.0;
  int peak_start_hour = 8;
  int peak_end_hour = 20;

  static PriceShape flat(double price) { return {price, price, 0, 24}; }
  static PriceShape time_of_use(double peak, double offpeak, int start_hour, int end_hour) {
    return {peak, offpeak, start_hour, end_hour};
  }

  bool is_flat() const { return peak == offpeak; }
  bool in_peak(Timestamp time) const;
  double at(Timestamp time) const { return in_peak(time) ? peak : offpeak; }
  bool operator==(const PriceShape&) const = default;
};

/// All monetary rates are EUR/kWh excluding VAT.
struct TariffSchedule {
  PriceShape energy_price = PriceShape::flat(0.0);
  PriceShape network_charge = PriceShape::flat(0.0);
  /// Optional differentiated network rate for locally supplied energy.
  std::optional<double> csc_network_charge;
  double excise_rate = 0.0;
  double vat_rate = 0.0;
  double export_tariff = 0.0;

  /// Supplier energy price including excise and VAT, excluding network charges.
  double consumer_price(Timestamp time) const {
    return (energy_price.at(time) + excise_rate) * (1.0 + vat_rate);
  }
  /// Export tariff, plus the community-max excise and VAT when the producer is liable.
  double producer_price(const FiscalStatus& fiscal, double community_max_excise) const {
    double price = export_tariff + (fiscal.excise_liable ? community_max_excise : 0.0);
    return fiscal.vat_liable ? price * (1.0 + vat_rate) : price;
  }
  bool operator==(const TariffSchedule&) const = default;
};

using TariffTable = std::map<std::string, TariffSchedule>;

struct Community {
  TimeAxis axis;
  std::vector<Member> members;
  TariffTable tariffs;

  std::size_t size() const { return members.size(); }
  /// Throws std::out_of_range on a dangling tariff id.
  const TariffSchedule& tariff_of(std::size_t member) const;
  /// Largest excise rate across the tariffs referenced by members.
  double max_excise() const;
  std::optional<std::size_t> index_of(const std::string& id) const;
};

enum class FindingKind {
  AxisMismatch,
  LengthMismatch,
  NegativeValue,
  SimultaneousFlow,
  DanglingTariff,
  InvalidRate,
  PriceInversion,
};

const char* to_string(FindingKind kind);

struct Finding {
  FindingKind kind;
  std::string member_id;
  std::optional<std::size_t> interval;
  std::string message;
};

using ValidationReport = std::vector<Finding>;

/// Reports every violated invariant. Never throws; an empty report means
/// the community is accepted.
ValidationReport validate_community(const Community& community,
                                    double tolerance = kEnergyTolerance);

/// Reports every interval in which some producer's ask is not strictly below
/// some consumer's bid, i.e. where a trade cannot benefit both sides.
ValidationReport validate_tariffs(const Community& community);

/// exports[t] - imports[t]; positive means the member injects.
double net_injection(const Member& member, std::size_t t);

std::string describe(const Finding& finding);

}  // namespace csc

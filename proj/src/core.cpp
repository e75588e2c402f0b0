#include "csc/core.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>

namespace csc {

double EnergySeries::total() const {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

bool EnergySeries::all_zero() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

const char* to_string(Role role) {
  switch (role) {
    case Role::Inactive: return "inactive";
    case Role::Consumer: return "consumer";
    case Role::Producer: return "producer";
    case Role::Prosumer: return "prosumer";
  }
  return "?";
}

Role Member::role() const {
  const bool imports_any = !imports.all_zero();
  const bool exports_any = !exports.all_zero();
  if (imports_any && exports_any) return Role::Prosumer;
  if (imports_any) return Role::Consumer;
  if (exports_any) return Role::Producer;
  return Role::Inactive;
}

bool PriceShape::in_peak(Timestamp time) const {
  using namespace std::chrono;
  const auto since_midnight = time - floor<days>(time);
  const int hour = static_cast<int>(duration_cast<hours>(since_midnight).count());
  if (peak_start_hour <= peak_end_hour) return hour >= peak_start_hour && hour < peak_end_hour;
  // band wraps past midnight
  return hour >= peak_start_hour || hour < peak_end_hour;
}

const TariffSchedule& Community::tariff_of(std::size_t member) const {
  const auto it = tariffs.find(members.at(member).tariff_id);
  if (it == tariffs.end()) {
    throw std::out_of_range("member '" + members[member].id + "' references unknown tariff '" +
                            members[member].tariff_id + "'");
  }
  return it->second;
}

double Community::max_excise() const {
  double result = 0.0;
  for (const auto& m : members) {
    if (auto it = tariffs.find(m.tariff_id); it != tariffs.end()) {
      result = std::max(result, it->second.excise_rate);
    }
  }
  return result;
}

std::optional<std::size_t> Community::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (members[i].id == id) return i;
  }
  return std::nullopt;
}

const char* to_string(FindingKind kind) {
  switch (kind) {
    case FindingKind::AxisMismatch: return "axis mismatch";
    case FindingKind::LengthMismatch: return "length mismatch";
    case FindingKind::NegativeValue: return "negative value";
    case FindingKind::SimultaneousFlow: return "simultaneous flow";
    case FindingKind::DanglingTariff: return "dangling tariff";
    case FindingKind::InvalidRate: return "invalid rate";
    case FindingKind::PriceInversion: return "price inversion";
  }
  return "?";
}

std::string describe(const Finding& finding) {
  std::ostringstream out;
  out << to_string(finding.kind);
  if (!finding.member_id.empty()) out << " [" << finding.member_id << "]";
  if (finding.interval) out << " at interval " << *finding.interval;
  if (!finding.message.empty()) out << ": " << finding.message;
  return out.str();
}

namespace {

void check_series(const Community& community, const Member& member, const EnergySeries& series,
                  const char* name, ValidationReport& report) {
  if (!(series.axis == community.axis)) {
    report.push_back({FindingKind::AxisMismatch, member.id, std::nullopt,
                      std::string(name) + " axis differs from community axis"});
  }
  if (series.values.size() != community.axis.count) {
    report.push_back({FindingKind::LengthMismatch, member.id, std::nullopt,
                      std::string(name) + " has " + std::to_string(series.values.size()) +
                          " values, axis has " + std::to_string(community.axis.count)});
  }
  for (std::size_t t = 0; t < series.values.size(); ++t) {
    if (!(series.values[t] >= 0.0)) {
      report.push_back({FindingKind::NegativeValue, member.id, t,
                        std::string(name) + " value " + std::to_string(series.values[t])});
    }
  }
}

void check_rate(const std::string& tariff_id, const char* name, double value,
                ValidationReport& report) {
  if (!(value >= 0.0)) {
    report.push_back({FindingKind::InvalidRate, "", std::nullopt,
                      "tariff '" + tariff_id + "' " + name + " is negative"});
  }
}

}  // namespace

ValidationReport validate_community(const Community& community, double tolerance) {
  ValidationReport report;
  if (community.axis.step.count() <= 0 || community.axis.count == 0) {
    report.push_back({FindingKind::AxisMismatch, "", std::nullopt, "axis must have step > 0 and count > 0"});
  }
  for (const auto& [id, tariff] : community.tariffs) {
    for (const auto& shape : {tariff.energy_price, tariff.network_charge}) {
      check_rate(id, "price band", std::min(shape.peak, shape.offpeak), report);
    }
    check_rate(id, "excise rate", tariff.excise_rate, report);
    check_rate(id, "export tariff", tariff.export_tariff, report);
    if (tariff.csc_network_charge) check_rate(id, "csc network charge", *tariff.csc_network_charge, report);
    if (!(tariff.vat_rate >= 0.0 && tariff.vat_rate < 1.0)) {
      report.push_back({FindingKind::InvalidRate, "", std::nullopt,
                        "tariff '" + id + "' vat rate outside [0, 1)"});
    }
  }
  for (const auto& member : community.members) {
    check_series(community, member, member.imports, "imports", report);
    check_series(community, member, member.exports, "exports", report);
    const std::size_t n = std::min(member.imports.values.size(), member.exports.values.size());
    for (std::size_t t = 0; t < n; ++t) {
      if (member.imports.values[t] > tolerance && member.exports.values[t] > tolerance) {
        report.push_back({FindingKind::SimultaneousFlow, member.id, t,
                          "import " + std::to_string(member.imports.values[t]) + " and export " +
                              std::to_string(member.exports.values[t])});
      }
    }
    if (!community.tariffs.contains(member.tariff_id)) {
      report.push_back({FindingKind::DanglingTariff, member.id, std::nullopt,
                        "unknown tariff '" + member.tariff_id + "'"});
    }
  }
  return report;
}

ValidationReport validate_tariffs(const Community& community) {
  ValidationReport report;
  std::vector<std::size_t> producers;
  std::vector<std::size_t> consumers;
  for (std::size_t i = 0; i < community.size(); ++i) {
    const auto& m = community.members[i];
    if (!community.tariffs.contains(m.tariff_id)) continue;
    if (!m.exports.all_zero()) producers.push_back(i);
    if (!m.imports.all_zero()) consumers.push_back(i);
  }
  if (producers.empty() || consumers.empty()) return report;

  const double max_excise = community.max_excise();
  // Asks do not depend on time.
  double max_ask = -std::numeric_limits<double>::infinity();
  std::size_t max_ask_member = producers.front();
  for (auto j : producers) {
    const double ask = community.tariff_of(j).producer_price(community.members[j].fiscal, max_excise);
    if (ask > max_ask) {
      max_ask = ask;
      max_ask_member = j;
    }
  }
  for (std::size_t t = 0; t < community.axis.count; ++t) {
    const auto time = community.axis.at(t);
    double min_bid = std::numeric_limits<double>::infinity();
    std::size_t min_bid_member = consumers.front();
    for (auto i : consumers) {
      const double bid = community.tariff_of(i).consumer_price(time);
      if (bid < min_bid) {
        min_bid = bid;
        min_bid_member = i;
      }
    }
    if (!(max_ask < min_bid)) {
      report.push_back({FindingKind::PriceInversion, community.members[min_bid_member].id, t,
                        "ask " + std::to_string(max_ask) + " of '" +
                            community.members[max_ask_member].id + "' >= bid " +
                            std::to_string(min_bid)});
    }
  }
  return report;
}

double net_injection(const Member& member, std::size_t t) {
  if (t >= member.imports.values.size() || t >= member.exports.values.size()) {
    throw std::out_of_range("interval " + std::to_string(t) + " out of range for member '" +
                            member.id + "'");
  }
  return member.exports.values[t] - member.imports.values[t];
}

}  // namespace csc

#pragma once

// File formats exchanged with the outside world: meter CSV, tariff JSON,
// allocation / bill / fairness CSVs.

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "csc/allocation.hpp"
#include "csc/billing.hpp"
#include "csc/core.hpp"
#include "csc/fairness.hpp"

namespace csc {

/// Malformed input: bad row, unparsable value, unknown reference.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input parsed but violates community invariants.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& what, ValidationReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

/// RFC 3339, UTC only: YYYY-MM-DDTHH:MM:SSZ (or +00:00 suffix).
Timestamp parse_timestamp(const std::string& text);
std::string format_timestamp(Timestamp time);

/// Shortest decimal that round-trips exactly.
std::string format_number(double value);
/// Fixed two decimals, no negative zero.
std::string format_money(double value);

// -- tariffs ------------------------------------------------------------------

struct MemberAssignment {
  std::string tariff_id;
  FiscalStatus fiscal;
};

/// Top-level keys are tariff ids, except the reserved "members" object which
/// maps member ids to their tariff id and fiscal flags.
struct TariffFile {
  TariffTable tariffs;
  std::map<std::string, MemberAssignment> members;
};

TariffFile tariff_file_from_json(const nlohmann::json& j);
nlohmann::json tariff_file_to_json(const Community& community);
TariffFile read_tariff_file(const std::string& path);
void write_tariff_file(const std::string& path, const Community& community);

// -- meters -------------------------------------------------------------------

void write_meter_csv(std::ostream& out, const Community& community);
void write_meter_csv(const std::string& path, const Community& community);

/// Parses `member_id,timestamp,import_kwh,export_kwh`, attaches tariffs and
/// validates. Throws FormatError on malformed rows, non-monotonic timestamps
/// or members absent from the tariff file, and ValidationError on invariant
/// violations (e.g. a missing interval) unless `force` is set.
Community read_meter_csv(std::istream& in, const TariffFile& tariffs, bool force = false);
Community ingest_meter_csv(const std::string& path, const TariffFile& tariffs, bool force = false);

// -- allocations ----------------------------------------------------------------

/// `timestamp,member_id,role,allocated_kwh,price_eur_per_kwh,flags`; one row per
/// member with a positive allocation, consumers before producers.
void write_allocations_csv(std::ostream& out, const Community& community,
                           std::span<const AllocationOutcome> outcomes);
/// Rebuilds one outcome per axis interval; intervals without rows trade nothing.
std::vector<AllocationOutcome> read_allocations_csv(std::istream& in, const Community& community);

// -- bills -------------------------------------------------------------------------

struct BillRow {
  std::string member_id;
  std::string scenario;
  std::string mechanism;
  BillBreakdown bill;
  double utility = 0.0;
};

inline constexpr const char* kBillsHeader =
    "member_id,scenario,mechanism,energy_cost,excise_cost,network_cost,csc_cost,producer_revenue,"
    "total,utility";

void write_bill_row(std::ostream& out, const BillRow& row);
std::vector<BillRow> read_bills_csv(std::istream& in);

// -- fairness -------------------------------------------------------------------------

struct FairnessRow {
  std::string community_id;
  double uptake = 0.0;
  std::string mechanism;
  FairnessReport report;
};

inline constexpr const char* kFairnessHeader =
    "community_id,uptake,mechanism,jain,min_max,merit_index,social_welfare,weighted_utility";

void write_fairness_row(std::ostream& out, const FairnessRow& row);

/// Splits one CSV line on commas (no quoting is used by these formats).
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace csc

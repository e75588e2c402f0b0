#pragma once

// Community sweep: generate -> allocate -> bill -> score, for every
// (community, uptake, mechanism), plus the aggregate views.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "csc/allocation.hpp"
#include "csc/billing.hpp"
#include "csc/fairness.hpp"
#include "csc/scenario.hpp"

namespace csc {

inline constexpr const char* kVersion = "0.3.0";

struct SweepOptions {
  /// Outputs land in out_root/<config-hash>/.
  std::filesystem::path out_root = "out";
  unsigned jobs = 1;
  /// Reuse per-community partial results already flushed to disk.
  bool resume = false;
  bool write_outputs = true;
  bool log_progress = true;
};

struct MemberOutcome {
  std::string id;
  /// Gross annual consumption before PV netting; ranks members in the
  /// savings profile. Equals import_kwh when the load is not known.
  double consumption_kwh = 0.0;
  double import_kwh = 0.0;
  double export_kwh = 0.0;
  double local_in_kwh = 0.0;
  double local_out_kwh = 0.0;
  BillBreakdown baseline;
  BillBreakdown with_csc;
  double utility = 0.0;

  /// 100 u / B when the baseline bill is positive; empty for members whose
  /// baseline is <= 0 (net producers), whose saving is reported in EUR.
  std::optional<double> saving_pct() const;
};

struct CellResult {
  std::size_t community = 0;
  double uptake = 0.0;
  Mechanism mechanism = Mechanism::ProRata;
  std::vector<MemberOutcome> members;
  FairnessReport report;
  std::size_t inverted_intervals = 0;

  std::vector<double> utilities() const;
};

struct SweepResult {
  ScenarioConfig config;
  std::string config_hash;
  std::filesystem::path out_dir;
  /// Ordered by (community, uptake level, mechanism).
  std::vector<CellResult> cells;
  double runtime_seconds = 0.0;

  const CellResult* find(std::size_t community, double uptake, Mechanism mechanism) const;
};

/// Allocates, bills and scores one generated community under one mechanism.
CellResult evaluate_cell(const Community& community, std::span<const double> contributions,
                         Mechanism mechanism, const BillingOptions& billing = {});

/// Throws std::runtime_error on I/O failure.
SweepResult run_sweep(const ScenarioConfig& config, const SweepOptions& options = {});

/// Hex digest of the canonical config JSON.
std::string config_hash(const ScenarioConfig& config);

struct SavingsPoint {
  std::size_t rank = 0;  // 1 = largest consumer
  std::optional<double> mean_saving_pct;
  std::size_t samples = 0;
};

/// Members of each community ranked by annual consumption (descending), mean
/// percentage saving per rank across communities. Throws std::out_of_range
/// when the slice is absent.
std::vector<SavingsPoint> savings_profile(const SweepResult& sweep, Mechanism mechanism, double uptake);

/// Mean percentage saving over every member with a positive baseline bill.
std::optional<double> mean_saving_pct(const SweepResult& sweep, Mechanism mechanism, double uptake);

struct FairnessCell {
  double uptake = 0.0;
  Mechanism mechanism = Mechanism::ProRata;
  /// Averages over communities of the per-uptake normalized indicators;
  /// empty when every community is degenerate for that indicator.
  NormalizedIndicators mean;
};

std::vector<FairnessCell> fairness_matrix(const SweepResult& sweep);

/// allocations.csv, bills.csv, fairness.csv, summary.csv, savings_profile.csv,
/// summary.json and manifest.json under sweep.out_dir.
void write_sweep_outputs(const SweepResult& sweep);

std::string community_label(std::size_t community);
std::string scenario_label(std::size_t community, double uptake);

}  // namespace csc

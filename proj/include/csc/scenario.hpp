#pragma once

// Deterministic synthetic communities: a pool of residential load profiles,
// PV production, tariff assignment and PV ownership for a given uptake.

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "csc/allocation.hpp"
#include "csc/core.hpp"

namespace csc {

struct TariffDefaults {
  double fixed_energy_price = 0.20;
  double tou_peak_price = 0.24;
  double tou_offpeak_price = 0.16;
  int peak_start_hour = 6;  // UTC
  int peak_end_hour = 22;
  double network_charge = 0.05;
  double excise_rate = 0.02998;
  double vat_rate = 0.20;
};

struct ScenarioConfig {
  std::size_t communities = 50;
  std::size_t members_per_community = 20;
  std::vector<double> uptake_levels{0.0, 0.2, 0.4, 0.6, 0.8};
  double pv_capacity_kw = 3.0;
  double new_pv_share = 0.3;
  double new_feed_in = 0.04;
  double old_feed_in = 0.1269;
  /// Probability that a member is on the time-of-use tariff.
  double tariff_mix = 0.5;
  std::uint64_t seed = 42;
  int year = 2025;

  std::size_t days = 365;
  int step_minutes = 15;
  std::size_t pool_size = 200;
  double min_annual_kwh = 1500.0;
  double max_annual_kwh = 6000.0;
  double load_noise = 0.25;
  double capacity_factor = 0.14;
  double pmo_fee = 0.0;
  TariffDefaults tariffs;
  std::vector<Mechanism> mechanisms{kAllMechanisms.begin(), kAllMechanisms.end()};

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
  TimeAxis axis() const;
};

/// Flat JSON object; unknown keys are rejected.
ScenarioConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ScenarioConfig& config);
ScenarioConfig load_config(const std::string& path);

/// 64-bit stream seed for (seed, community, member, purpose). Streams for
/// different tuples are independent, so adding members leaves earlier
/// draws untouched.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t community, std::uint64_t member,
                          std::string_view purpose);
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t community, std::uint64_t member,
                            std::string_view purpose);

/// Shape parameters of one household; `annual_kwh` is the exact consumption
/// over a 365-day year.
struct LoadProfileClass {
  double annual_kwh = 3000.0;
  double base = 0.45;
  double morning_weight = 0.5;
  double morning_hour = 7.5;
  double evening_weight = 1.2;
  double evening_hour = 19.0;
  double daytime_weight = 0.3;
  double winter_amplitude = 0.3;
  double weekend_boost = 0.15;

  static LoadProfileClass draw(std::mt19937_64& stream, double min_annual_kwh, double max_annual_kwh);
};

/// Base load + morning and evening peaks + weekly and seasonal modulation +
/// multiplicative noise (`noise` is the log-normal sigma; 0 disables it).
/// The profile is generated for the 365-day year starting on January 1 of the
/// axis start year, scaled to `annual_kwh`, then sampled on `axis`.
EnergySeries synthetic_load_profile(std::mt19937_64& stream, const LoadProfileClass& profile,
                                    const TimeAxis& axis, double noise);

/// Daylight bell curve with seasonal amplitude and random daily cloud
/// attenuation, calibrated so the reference year reaches `capacity_factor`.
/// Interval energy never exceeds capacity * step.
EnergySeries synthetic_pv_profile(std::mt19937_64& stream, double capacity_kw, const TimeAxis& axis,
                                  double capacity_factor = 0.14);

struct GeneratedCommunity {
  Community community;
  std::vector<std::size_t> pool_indices;
  std::vector<std::size_t> pv_owners;    // member positions
  std::vector<std::size_t> new_pv;       // subset of pv_owners on the new feed-in tariff
  std::vector<double> annual_load_kwh;   // gross consumption before netting
};

/// Profiles depend only on (seed, index); uptake changes ownership alone.
GeneratedCommunity generate_community(const ScenarioConfig& config, std::size_t index, double uptake);

/// round(uptake * members), half away from zero.
std::size_t pv_owner_count(double uptake, std::size_t members);

}  // namespace csc

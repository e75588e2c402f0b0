#pragma once

// Test-only builders and independent oracles. Nothing here calls into the
// allocation or billing implementation paths it is used to check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "csc/core.hpp"

namespace csc::testing {

inline TimeAxis make_axis(std::size_t count, int step_minutes = 15) {
  using namespace std::chrono;
  TimeAxis axis;
  axis.start = sys_seconds{sys_days{year{2025} / January / 1}};
  axis.step = minutes{step_minutes};
  axis.count = count;
  return axis;
}

inline TariffSchedule flat_tariff(double energy, double network, double excise, double vat,
                                  double export_tariff) {
  TariffSchedule t;
  t.energy_price = PriceShape::flat(energy);
  t.network_charge = PriceShape::flat(network);
  t.excise_rate = excise;
  t.vat_rate = vat;
  t.export_tariff = export_tariff;
  return t;
}

inline Member make_member(const TimeAxis& axis, std::string id, std::vector<double> imports,
                          std::vector<double> exports, std::string tariff = "default") {
  Member m;
  m.id = std::move(id);
  m.imports = EnergySeries(axis, std::move(imports));
  m.exports = EnergySeries(axis, std::move(exports));
  m.tariff_id = std::move(tariff);
  return m;
}

/// Water level L with sum_i min(q_i, L) = energy, found by bisection.
inline std::vector<double> water_level_oracle(const std::vector<double>& q, double energy) {
  const double total = std::accumulate(q.begin(), q.end(), 0.0);
  energy = std::min(energy, total);
  double lo = 0.0;
  double hi = q.empty() ? 0.0 : *std::max_element(q.begin(), q.end());
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    double filled = 0.0;
    for (double x : q) filled += std::min(x, mid);
    (filled < energy ? lo : hi) = mid;
  }
  std::vector<double> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = std::min(q[i], hi);
  return out;
}

/// Random per-interval market: each member is idle, importing or exporting.
struct Instance {
  std::vector<double> imports;
  std::vector<double> exports;
  std::vector<double> bids;
  std::vector<double> asks;
};

inline Instance random_instance(std::mt19937_64& rng, std::size_t max_members = 20) {
  std::uniform_int_distribution<std::size_t> size(1, max_members);
  std::uniform_real_distribution<double> qty(0.0, 3.0);
  std::uniform_int_distribution<int> kind(0, 5);
  // A small price grid so ties (shared levels) actually occur.
  const double bid_grid[] = {0.22, 0.25, 0.25, 0.276, 0.32};
  const double ask_grid[] = {0.04, 0.04, 0.10, 0.1269, 0.15};
  std::uniform_int_distribution<int> pick(0, 4);
  Instance in;
  const std::size_t n = size(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const int k = kind(rng);
    in.imports.push_back(k <= 2 ? qty(rng) : 0.0);
    in.exports.push_back(k >= 3 && k <= 4 ? qty(rng) : 0.0);
    in.bids.push_back(bid_grid[pick(rng)]);
    in.asks.push_back(ask_grid[pick(rng)]);
  }
  return in;
}

inline double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace csc::testing

#include "csc/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace csc {

namespace {

double sign(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

}  // namespace

Indicator jain_index(std::span<const double> utilities) {
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double u : utilities) {
    sum += u;
    sum_sq += u * u;
  }
  if (utilities.empty() || sum_sq == 0.0) return std::nullopt;
  return sum * sum / (static_cast<double>(utilities.size()) * sum_sq);
}

Indicator min_max_ratio(std::span<const double> utilities) {
  if (utilities.empty()) return std::nullopt;
  const auto [lo, hi] = std::minmax_element(utilities.begin(), utilities.end());
  // A non-positive maximum makes the ratio meaningless (it would exceed 1).
  if (!(*hi > 0.0)) return std::nullopt;
  return *lo / *hi;
}

double contribution(std::span<const double> own_net, std::span<const double> rest_net) {
  if (own_net.size() != rest_net.size()) {
    throw std::invalid_argument("contribution: series lengths differ");
  }
  double c = 0.0;
  for (std::size_t t = 0; t < own_net.size(); ++t) {
    c += -sign(own_net[t]) * std::min(std::abs(own_net[t]), std::abs(rest_net[t])) * rest_net[t];
  }
  return c;
}

std::vector<double> contributions(const Community& community) {
  const std::size_t n = community.size();
  const std::size_t steps = community.axis.count;
  std::vector<double> total(steps, 0.0);
  for (const auto& m : community.members) {
    for (std::size_t t = 0; t < steps; ++t) total[t] += net_injection(m, t);
  }
  std::vector<double> result(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = community.members[i];
    double c = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
      const double own = net_injection(m, t);
      const double rest = total[t] - own;
      c += -sign(own) * std::min(std::abs(own), std::abs(rest)) * rest;
    }
    result[i] = c;
  }
  return result;
}

Indicator meritocratic_index(std::span<const double> utilities, std::span<const double> contributions) {
  if (utilities.size() != contributions.size()) {
    throw std::invalid_argument("meritocratic_index: one contribution per utility required");
  }
  if (utilities.empty()) return std::nullopt;
  if (std::all_of(utilities.begin(), utilities.end(), [](double u) { return u == 0.0; })) return std::nullopt;
  const double total_c = std::accumulate(contributions.begin(), contributions.end(), 0.0);
  if (total_c == 0.0) return std::nullopt;
  const double total_u = std::accumulate(utilities.begin(), utilities.end(), 0.0);
  double sq = 0.0;
  for (std::size_t i = 0; i < utilities.size(); ++i) {
    const double ideal = contributions[i] / total_c * total_u;
    sq += (utilities[i] - ideal) * (utilities[i] - ideal);
  }
  return std::sqrt(sq / static_cast<double>(utilities.size()));
}

double social_welfare(std::span<const double> utilities) {
  return std::accumulate(utilities.begin(), utilities.end(), 0.0);
}

double weighted_utility(std::span<const double> utilities, std::span<const double> weights) {
  if (weights.size() != utilities.size()) {
    throw std::invalid_argument("weighted_utility: missing weight for some member");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < utilities.size(); ++i) sum += weights[i] * utilities[i];
  return sum;
}

FairnessReport evaluate_fairness(std::span<const double> utilities,
                                 std::span<const double> contribs,
                                 std::optional<std::span<const double>> weights) {
  FairnessReport report;
  report.jain = jain_index(utilities);
  report.min_max = min_max_ratio(utilities);
  report.meritocratic_index = meritocratic_index(utilities, contribs);
  report.social_welfare = social_welfare(utilities);
  if (weights) report.weighted_utility = weighted_utility(utilities, *weights);
  report.contribution.assign(contribs.begin(), contribs.end());
  return report;
}

std::vector<NormalizedIndicators> normalize_reports(std::span<const FairnessReport> reports) {
  std::vector<NormalizedIndicators> out(reports.size());
  double max_welfare = -std::numeric_limits<double>::infinity();
  double lo_merit = std::numeric_limits<double>::infinity();
  double hi_merit = -std::numeric_limits<double>::infinity();
  for (const auto& r : reports) {
    max_welfare = std::max(max_welfare, r.social_welfare);
    if (r.meritocratic_index) {
      lo_merit = std::min(lo_merit, *r.meritocratic_index);
      hi_merit = std::max(hi_merit, *r.meritocratic_index);
    }
  }
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const auto& r = reports[k];
    auto& n = out[k];
    n.jain = r.jain;
    n.min_max = r.min_max;
    if (max_welfare > 0.0) n.social_welfare = r.social_welfare / max_welfare;
    if (r.meritocratic_index) {
      n.meritocratic =
          hi_merit > lo_merit ? 1.0 - (*r.meritocratic_index - lo_merit) / (hi_merit - lo_merit) : 1.0;
    }
  }
  return out;
}

}  // namespace csc

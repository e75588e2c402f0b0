#pragma once

// Fairness indicators over annual member utilities (EUR). Utility and
// contribution vectors are aligned with community member order.

#include <optional>
#include <span>
#include <vector>

#include "csc/core.hpp"

namespace csc {

/// An indicator value, or empty when the input is degenerate (e.g. all-zero
/// utilities) and the indicator is undefined.
using Indicator = std::optional<double>;

/// (sum u)^2 / (n sum u^2); degenerate for an all-zero or empty vector.
Indicator jain_index(std::span<const double> utilities);

/// min u / max u; degenerate when max u <= 0.
Indicator min_max_ratio(std::span<const double> utilities);

/// Contribution of one member to the rest of the community's trades (kWh^2):
/// sum_t -sign(own_t) * min(|own_t|, |rest_t|) * rest_t, over net injections.
double contribution(std::span<const double> own_net, std::span<const double> rest_net);

/// Contribution of every member, from one pass over the community net injection.
std::vector<double> contributions(const Community& community);

/// RMS gap between utilities and contribution-proportional shares of the
/// total; degenerate when the contributions sum to zero or every utility is zero.
Indicator meritocratic_index(std::span<const double> utilities, std::span<const double> contributions);

double social_welfare(std::span<const double> utilities);

/// Throws std::invalid_argument when weights do not cover every member.
double weighted_utility(std::span<const double> utilities, std::span<const double> weights);

struct FairnessReport {
  Indicator jain;
  Indicator min_max;
  Indicator meritocratic_index;
  double social_welfare = 0.0;
  std::optional<double> weighted_utility;
  std::vector<double> contribution;
};

FairnessReport evaluate_fairness(std::span<const double> utilities,
                                 std::span<const double> contributions,
                                 std::optional<std::span<const double>> weights = std::nullopt);

/// Indicators rescaled for side-by-side comparison of mechanisms at one
/// uptake level: jain and min-max unchanged, welfare divided by the largest
/// welfare, merit index mapped affinely so the most meritocratic mechanism
/// scores 1 and the least scores 0.
struct NormalizedIndicators {
  Indicator jain;
  Indicator min_max;
  Indicator meritocratic;
  Indicator social_welfare;
};

std::vector<NormalizedIndicators> normalize_reports(std::span<const FairnessReport> reports);

}  // namespace csc

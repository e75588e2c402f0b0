#pragma once

// Variable part of member bills with and without local trading, under the
// French supplier/excise/VAT structure. All amounts in EUR.

#include <cstddef>
#include <span>
#include <vector>

#include "csc/allocation.hpp"
#include "csc/core.hpp"

namespace csc {

struct BillingOptions {
  /// Fraction of local-trade payments retained by the community organiser.
  double pmo_fee = 0.0;
};

struct BillBreakdown {
  double energy_cost = 0.0;    // supplier energy incl. VAT
  double excise_cost = 0.0;    // excise incl. VAT
  double network_cost = 0.0;   // network charges incl. VAT
  double csc_cost = 0.0;       // payments for locally sourced energy
  double producer_revenue = 0.0;

  double total() const {
    return energy_cost + excise_cost + network_cost + csc_cost - producer_revenue;
  }
  bool operator==(const BillBreakdown&) const = default;
};

/// Consumer-side reservation price at interval t (EUR/kWh).
double bid_price(const Community& community, std::size_t member, std::size_t t);

/// Producer-side reservation price (EUR/kWh).
double ask_price(const Community& community, std::size_t member);

BillBreakdown bill_without_csc(const Community& community, std::size_t member);

/// Throws std::invalid_argument when the outcomes do not cover the
/// community axis or do not match its member count.
BillBreakdown bill_with_csc(const Community& community, std::size_t member,
                            std::span<const AllocationOutcome> outcomes,
                            const BillingOptions& options = {});

/// Annual benefit u_i = B_i - B^_i.
double utility(const Community& community, std::size_t member,
               std::span<const AllocationOutcome> outcomes, const BillingOptions& options = {});

struct MemberBills {
  BillBreakdown baseline;
  BillBreakdown with_csc;
  double utility() const { return baseline.total() - with_csc.total(); }
};

std::vector<MemberBills> bill_community(const Community& community,
                                        std::span<const AllocationOutcome> outcomes,
                                        const BillingOptions& options = {});

}  // namespace csc

#include "csc/billing.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace csc {

double bid_price(const Community& community, std::size_t member, std::size_t t) {
  return community.tariff_of(member).consumer_price(community.axis.at(t));
}

double ask_price(const Community& community, std::size_t member) {
  return community.tariff_of(member).producer_price(community.members.at(member).fiscal,
                                                    community.max_excise());
}

BillBreakdown bill_without_csc(const Community& community, std::size_t member) {
  const auto& tariff = community.tariff_of(member);
  const auto& m = community.members[member];
  const double vat = 1.0 + tariff.vat_rate;
  BillBreakdown bill;
  for (std::size_t t = 0; t < community.axis.count; ++t) {
    const auto time = community.axis.at(t);
    const double imported = m.imports.values[t];
    if (imported > 0.0) {
      bill.energy_cost += imported * tariff.energy_price.at(time) * vat;
      bill.excise_cost += imported * tariff.excise_rate * vat;
      bill.network_cost += imported * tariff.network_charge.at(time) * vat;
    }
    bill.producer_revenue += m.exports.values[t] * tariff.export_tariff;
  }
  return bill;
}

BillBreakdown bill_with_csc(const Community& community, std::size_t member,
                            std::span<const AllocationOutcome> outcomes,
                            const BillingOptions& options) {
  if (outcomes.size() != community.axis.count) {
    throw std::invalid_argument("bill_with_csc: " + std::to_string(outcomes.size()) +
                                " outcomes for an axis of " + std::to_string(community.axis.count));
  }
  const auto& tariff = community.tariff_of(member);
  const auto& m = community.members[member];
  const double vat = 1.0 + tariff.vat_rate;
  const double max_excise = community.max_excise();

  BillBreakdown bill;
  for (std::size_t t = 0; t < community.axis.count; ++t) {
    const auto& out = outcomes[t];
    if (out.t != t || out.consumer_alloc.size() != community.size() ||
        out.producer_alloc.size() != community.size()) {
      throw std::invalid_argument("bill_with_csc: outcome " + std::to_string(t) +
                                  " does not match the community");
    }
    const auto time = community.axis.at(t);
    const double imported = m.imports.values[t];
    const double exported = m.exports.values[t];
    const double local_in = out.consumer_alloc[member];
    const double local_out = out.producer_alloc[member];
    const double price = out.price.value_or(0.0);

    const double from_grid = std::max(0.0, imported - local_in);
    bill.energy_cost += from_grid * tariff.energy_price.at(time) * vat;
    bill.excise_cost += from_grid * tariff.excise_rate * vat;
    if (tariff.csc_network_charge) {
      bill.network_cost += (from_grid * tariff.network_charge.at(time) +
                            local_in * *tariff.csc_network_charge) * vat;
    } else {
      bill.network_cost += imported * tariff.network_charge.at(time) * vat;
    }
    bill.csc_cost += local_in * price;

    const double to_grid = std::max(0.0, exported - local_out);
    double sales = local_out * price * (1.0 - options.pmo_fee);
    if (m.fiscal.vat_liable) sales -= sales * tariff.vat_rate / vat;
    if (m.fiscal.excise_liable) sales -= local_out * max_excise;
    bill.producer_revenue += to_grid * tariff.export_tariff + sales;
  }
  return bill;
}

double utility(const Community& community, std::size_t member,
               std::span<const AllocationOutcome> outcomes, const BillingOptions& options) {
  return bill_without_csc(community, member).total() -
         bill_with_csc(community, member, outcomes, options).total();
}

std::vector<MemberBills> bill_community(const Community& community,
                                        std::span<const AllocationOutcome> outcomes,
                                        const BillingOptions& options) {
  std::vector<MemberBills> bills;
  bills.reserve(community.size());
  for (std::size_t i = 0; i < community.size(); ++i) {
    bills.push_back({bill_without_csc(community, i), bill_with_csc(community, i, outcomes, options)});
  }
  return bills;
}

}  // namespace csc

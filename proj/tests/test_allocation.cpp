#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "csc/allocation.hpp"
#include "support.hpp"

using namespace csc;
using namespace csc::testing;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_vec(const std::vector<double>& got, const std::vector<double>& want, double tol = 1e-12) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CAPTURE(i);
    CHECK(got[i] == doctest::Approx(want[i]).epsilon(tol));
  }
}

}  // namespace

TEST_CASE("community_energy is min of demand and supply") {
  CHECK(community_energy(std::vector{1.0, 3.0}, std::vector{2.0}) == 2.0);
  CHECK(community_energy(std::vector<double>{}, std::vector{5.0}) == 0.0);
  CHECK(community_energy(std::vector{2.0}, std::vector{2.0}) == 2.0);
}

TEST_CASE("mechanism names round trip") {
  for (auto m : kAllMechanisms) CHECK(parse_mechanism(to_string(m)) == m);
  CHECK_THROWS_AS(parse_mechanism("lottery"), std::invalid_argument);
}

// members: a, b, p
TEST_CASE("pro-rata examples") {
  SUBCASE("symmetric") {
    const auto o = allocate_pro_rata(std::vector{2.0, 2.0, 0.0}, std::vector{0.0, 0.0, 2.0});
    check_vec(o.consumer_alloc, {1, 1, 0});
    check_vec(o.producer_alloc, {0, 0, 2});
  }
  SUBCASE("proportional to imports") {
    const auto o = allocate_pro_rata(std::vector{1.0, 3.0, 0.0}, std::vector{0.0, 0.0, 2.0});
    check_vec(o.consumer_alloc, {0.5, 1.5, 0});
    check_vec(o.producer_alloc, {0, 0, 2});
  }
  SUBCASE("producer side scaled") {
    const auto o = allocate_pro_rata(std::vector{1.0, 1.0, 0.0}, std::vector{0.0, 0.0, 4.0});
    check_vec(o.consumer_alloc, {1, 1, 0});
    check_vec(o.producer_alloc, {0, 0, 2});
  }
  SUBCASE("no supply means no allocation") {
    const auto o = allocate_pro_rata(std::vector{1.0, 1.0}, std::vector{0.0, 0.0});
    check_vec(o.consumer_alloc, {0, 0});
  }
}

TEST_CASE("glass_fill examples agree with the water-level oracle") {
  struct Case {
    std::vector<double> q;
    double energy;
    std::vector<double> want;
  };
  const Case cases[] = {
      {{2, 2, 2}, 3, {1, 1, 1}},
      {{1, 5}, 4, {1, 3}},
      {{1, 2, 9}, 6, {1, 2, 3}},
  };
  for (const auto& c : cases) {
    const auto got = glass_fill(c.q, c.energy);
    check_vec(got, c.want);
    check_vec(got, water_level_oracle(c.q, c.energy), 1e-9);
  }
}

TEST_CASE("glass_fill ignores idle members and caps energy at capacity") {
  check_vec(glass_fill(std::vector{0.0, 2.0, 0.0, 2.0}, 2.0), {0, 1, 0, 1});
  check_vec(glass_fill(std::vector{1.0, 1.0}, 5.0), {1, 1});
  check_vec(glass_fill(std::vector<double>{}, 1.0), {});
}

TEST_CASE("glass-filling allocates both sides") {
  const auto o = allocate_glass_filling(std::vector{1.0, 5.0, 0.0, 0.0}, std::vector{0.0, 0.0, 1.0, 9.0});
  check_vec(o.consumer_alloc, {1, 5, 0, 0});
  check_vec(o.producer_alloc, {0, 0, 1, 5});
}

TEST_CASE("prioritized glass-filling examples") {
  SUBCASE("lowest cumulative served first") {
    PriorityState state;
    state.set_cumulative({0.0, 10.0, 0.0}, {});
    const auto o = allocate_prioritized_glass_filling(std::vector{3.0, 3.0, 0.0}, std::vector{0.0, 0.0, 4.0}, state);
    check_vec(o.consumer_alloc, {3, 1, 0});
    CHECK(state.consumer_cumulative(0) == doctest::Approx(3.0));
    CHECK(state.consumer_cumulative(1) == doctest::Approx(11.0));
    CHECK(state.producer_cumulative(2) == doctest::Approx(4.0));
  }
  SUBCASE("single level degenerates to glass-filling") {
    PriorityState state;
    state.set_cumulative({5.0, 5.0, 0.0}, {});
    const std::vector imports{1.0, 5.0, 0.0};
    const std::vector exports{0.0, 0.0, 4.0};
    const auto o = allocate_prioritized_glass_filling(imports, exports, state);
    const auto g = allocate_glass_filling(imports, exports);
    CHECK(o.consumer_alloc == g.consumer_alloc);
    CHECK(o.producer_alloc == g.producer_alloc);
  }
  SUBCASE("two-member top level then remainder") {
    PriorityState state;
    state.set_cumulative({0.0, 0.0, 5.0, 0.0}, {});
    const auto o =
        allocate_prioritized_glass_filling(std::vector{1.0, 4.0, 4.0, 0.0}, std::vector{0.0, 0.0, 0.0, 6.0}, state);
    check_vec(o.consumer_alloc, {1, 4, 1, 0});
  }
}

TEST_CASE("priority levels are quantized to 1 Wh") {
  PriorityState state;
  state.set_cumulative({1.0, 1.0 + 1e-7}, {});
  const auto keys = state.consumer_levels(2);
  CHECK(keys[0] == keys[1]);
  state.set_cumulative({1.0, 1.002}, {});
  const auto split = state.consumer_levels(2);
  CHECK(split[0] < split[1]);
}

TEST_CASE("priority window expires old contributions") {
  PriorityState state(2);
  const std::vector none{0.0, 0.0};
  state.record(0, std::vector{1.0, 0.0}, none);
  state.record(1, std::vector{0.0, 2.0}, none);
  CHECK(state.consumer_cumulative(0) == 1.0);
  state.expire_before(2);
  CHECK(state.consumer_cumulative(0) == 0.0);
  CHECK(state.consumer_cumulative(1) == 2.0);
  state.expire_before(3);
  CHECK(state.consumer_cumulative(1) == 0.0);

  const auto axis = make_axis(10);
  CHECK(PriorityState::for_axis(axis).window() == 365u * 96u);
}

TEST_CASE("double auction examples") {
  SUBCASE("price priority then clearing price") {
    const auto o = allocate_double_auction(std::vector{2.0, 2.0, 0.0}, std::vector{0.0, 0.0, 3.0},
                                           std::vector{0.25, 0.20, kNaN}, std::vector{kNaN, kNaN, 0.05});
    check_vec(o.consumer_alloc, {2, 1, 0});
    check_vec(o.producer_alloc, {0, 0, 3});
    REQUIRE(o.price);
    CHECK(*o.price == doctest::Approx(0.125));
    CHECK_FALSE(o.has(kPriceInversion));
  }
  SUBCASE("equal prices reduce to glass-filling") {
    const std::vector imports{1.0, 4.0, 2.0, 0.0, 0.0};
    const std::vector exports{0.0, 0.0, 0.0, 1.5, 3.0};
    const std::vector bids(5, 0.25);
    const std::vector asks(5, 0.04);
    const auto o = allocate_double_auction(imports, exports, bids, asks);
    const auto g = allocate_glass_filling(imports, exports);
    CHECK(o.consumer_alloc == g.consumer_alloc);
    CHECK(o.producer_alloc == g.producer_alloc);
  }
  SUBCASE("crossing prices trade in full and are flagged") {
    const auto o = allocate_double_auction(std::vector{1.0, 0.0}, std::vector{0.0, 1.0},
                                           std::vector{0.10, kNaN}, std::vector{kNaN, 0.30});
    CHECK(o.traded() == doctest::Approx(1.0));
    REQUIRE(o.price);
    CHECK(*o.price == doctest::Approx(0.20));
    CHECK(o.has(kPriceInversion));
  }
  SUBCASE("missing price for an active member") {
    CHECK_THROWS_AS(allocate_double_auction(std::vector{1.0, 0.0}, std::vector{0.0, 1.0},
                                            std::vector{kNaN, kNaN}, std::vector{kNaN, 0.04}),
                    std::invalid_argument);
    CHECK_THROWS_AS(allocate_double_auction(std::vector{1.0, 0.0}, std::vector{0.0, 1.0},
                                            std::vector{0.2}, std::vector<double>{}),
                    std::invalid_argument);
  }
}

TEST_CASE("clearing price examples") {
  AllocationOutcome o;
  SUBCASE("single pair midpoint") {
    o.consumer_alloc = {1.0, 0.0};
    o.producer_alloc = {0.0, 1.0};
    const auto p = clearing_price(o, std::vector{0.24, 0.0}, std::vector{0.0, 0.04});
    REQUIRE(p);
    CHECK(*p == doctest::Approx(0.14));
  }
  SUBCASE("no trade, no price") {
    o.consumer_alloc = {0.0, 0.0};
    o.producer_alloc = {0.0, 0.0};
    CHECK_FALSE(clearing_price(o, std::vector{0.24, 0.0}, std::vector{0.0, 0.04}));
  }
  SUBCASE("max awarded ask and min awarded bid") {
    // consumers 0,1 ; producers 2,3 ; member 4 is an unawarded consumer with a lower bid
    o.consumer_alloc = {1.0, 1.0, 0.0, 0.0, 0.0};
    o.producer_alloc = {0.0, 0.0, 1.0, 1.0, 0.0};
    const std::vector bids{0.22, 0.30, 0.0, 0.0, 0.01};
    const std::vector asks{0.0, 0.0, 0.04, 0.06, 0.50};
    const auto p = clearing_price(o, bids, asks);
    REQUIRE(p);
    CHECK(*p == doctest::Approx(0.14));
  }
}

TEST_CASE("run_mechanism over a small community") {
  Community c;
  c.axis = make_axis(4);
  c.tariffs["c"] = flat_tariff(0.20, 0.05, 0.0, 0.0, 0.0);
  c.tariffs["p"] = flat_tariff(0.20, 0.05, 0.0, 0.0, 0.08);

  SUBCASE("no producers, no trades") {
    c.members.push_back(make_member(c.axis, "a", {1, 1, 1, 1}, {0, 0, 0, 0}, "c"));
    for (auto m : kAllMechanisms) {
      for (const auto& o : run_mechanism(c, m)) {
        CHECK(o.traded() == 0.0);
        CHECK_FALSE(o.price);
      }
    }
  }
  SUBCASE("single pair overlapping in one interval") {
    c.members.push_back(make_member(c.axis, "a", {0, 1, 0, 2}, {0, 0, 0, 0}, "c"));
    c.members.push_back(make_member(c.axis, "p", {0, 0, 0, 0}, {3, 1, 0, 0}, "p"));
    for (auto m : kAllMechanisms) {
      CAPTURE(to_string(m));
      const auto out = run_mechanism(c, m);
      REQUIRE(out.size() == 4);
      CHECK(out[1].consumer_alloc[0] == doctest::Approx(1.0));
      CHECK(out[1].producer_alloc[1] == doctest::Approx(1.0));
      REQUIRE(out[1].price);
      CHECK(*out[1].price == doctest::Approx((0.20 + 0.08) / 2));
      for (std::size_t t : {0u, 2u, 3u}) {
        CHECK(out[t].traded() == 0.0);
        CHECK_FALSE(out[t].price);
      }
    }
  }
}

TEST_CASE("run_mechanism is deterministic") {
  std::mt19937_64 rng(7);
  Community c;
  c.axis = make_axis(48);
  c.tariffs["c"] = flat_tariff(0.20, 0.05, 0.02998, 0.2, 0.04);
  std::uniform_real_distribution<double> q(-2.0, 2.0);
  for (int i = 0; i < 6; ++i) {
    std::vector<double> imp(48), exp(48);
    for (int t = 0; t < 48; ++t) {
      const double x = q(rng);
      (x > 0 ? imp : exp)[t] = std::abs(x);
    }
    c.members.push_back(make_member(c.axis, "m" + std::to_string(i), imp, exp, "c"));
  }
  for (auto m : kAllMechanisms) CHECK(run_mechanism(c, m) == run_mechanism(c, m));
}

TEST_CASE("allocation invariants on random instances") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const auto in = random_instance(rng);
    const double energy = community_energy(in.imports, in.exports);
    PriorityState state;
    std::vector<double> seed_cum(in.imports.size());
    std::uniform_int_distribution<int> level(0, 3);
    for (auto& v : seed_cum) v = level(rng);
    state.set_cumulative(seed_cum, seed_cum);

    const AllocationOutcome outcomes[] = {
        allocate_pro_rata(in.imports, in.exports),
        allocate_glass_filling(in.imports, in.exports),
        allocate_prioritized_glass_filling(in.imports, in.exports, state),
        allocate_double_auction(in.imports, in.exports, in.bids, in.asks),
    };
    for (const auto& o : outcomes) {
      CHECK(std::abs(sum(o.consumer_alloc) - energy) <= kEnergyTolerance);
      CHECK(std::abs(sum(o.producer_alloc) - energy) <= kEnergyTolerance);
      for (std::size_t i = 0; i < in.imports.size(); ++i) {
        CHECK(o.consumer_alloc[i] >= 0.0);
        CHECK(o.consumer_alloc[i] <= in.imports[i] + kEnergyTolerance);
        CHECK(o.producer_alloc[i] <= in.exports[i] + kEnergyTolerance);
      }
    }
    check_vec(outcomes[1].consumer_alloc, water_level_oracle(in.imports, energy), 1e-9);
  }
}

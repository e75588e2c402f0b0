#include <doctest.h>

#include <sstream>

#include "csc/io.hpp"
#include "csc/scenario.hpp"
#include "support.hpp"

using namespace csc;
using namespace csc::testing;

namespace {

GeneratedCommunity sample_community() {
  ScenarioConfig cfg;
  cfg.days = 2;
  cfg.members_per_community = 6;
  return generate_community(cfg, 0, 0.5);
}

TariffFile tariffs_of(const Community& c) { return tariff_file_from_json(tariff_file_to_json(c)); }

std::string csv_of(const Community& c) {
  std::ostringstream out;
  write_meter_csv(out, c);
  return out.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

std::string join(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

}  // namespace

TEST_CASE("timestamps are RFC 3339 UTC") {
  const auto t = parse_timestamp("2025-03-01T12:15:00Z");
  CHECK(format_timestamp(t) == "2025-03-01T12:15:00Z");
  CHECK(parse_timestamp("2025-03-01T12:15:00+00:00") == t);
  CHECK_THROWS_AS(parse_timestamp("2025-03-01T12:15:00+01:00"), FormatError);
  CHECK_THROWS_AS(parse_timestamp("2025-13-01T00:00:00Z"), FormatError);
  CHECK_THROWS_AS(parse_timestamp("yesterday"), FormatError);
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(-0.0) == "0");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_money(298.1832) == "298.18");
  CHECK(format_money(-0.001) == "0.00");
}

TEST_CASE("meter CSV round trip reproduces the series exactly") {
  const auto gen = sample_community();
  const auto& c = gen.community;
  std::istringstream in(csv_of(c));
  const auto back = read_meter_csv(in, tariffs_of(c));
  REQUIRE(back.size() == c.size());
  CHECK(back.axis == c.axis);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(back.members[i].id == c.members[i].id);
    CHECK(back.members[i].tariff_id == c.members[i].tariff_id);
    CHECK(back.members[i].imports.values == c.members[i].imports.values);
    CHECK(back.members[i].exports.values == c.members[i].exports.values);
  }
  CHECK(back.tariffs.size() == c.tariffs.size());
}

TEST_CASE("shuffled timestamps are reported with member and row") {
  const auto gen = sample_community();
  auto lines = lines_of(csv_of(gen.community));
  std::swap(lines[3], lines[4]);  // rows 4 and 5 belong to the first member
  std::istringstream in(join(lines));
  try {
    read_meter_csv(in, tariffs_of(gen.community));
    FAIL("expected a FormatError");
  } catch (const FormatError& e) {
    const std::string what = e.what();
    CHECK(what.find(gen.community.members[0].id) != std::string::npos);
    CHECK(what.find("row 5") != std::string::npos);
  }
}

TEST_CASE("a missing interval is a length mismatch unless forced") {
  const auto gen = sample_community();
  auto lines = lines_of(csv_of(gen.community));
  lines.erase(lines.begin() + 10);
  const auto text = join(lines);
  {
    std::istringstream in(text);
    try {
      read_meter_csv(in, tariffs_of(gen.community));
      FAIL("expected a ValidationError");
    } catch (const ValidationError& e) {
      REQUIRE_FALSE(e.report().empty());
      CHECK(e.report()[0].kind == FindingKind::LengthMismatch);
    }
  }
  std::istringstream in(text);
  const auto forced = read_meter_csv(in, tariffs_of(gen.community), true);
  CHECK(forced.size() == gen.community.size());
}

TEST_CASE("malformed input and unknown references are format errors") {
  const auto gen = sample_community();
  const auto tariffs = tariffs_of(gen.community);
  auto lines = lines_of(csv_of(gen.community));
  SUBCASE("bad header") {
    lines[0] = "id,time,in,out";
    std::istringstream in(join(lines));
    CHECK_THROWS_AS(read_meter_csv(in, tariffs), FormatError);
  }
  SUBCASE("short row") {
    lines[2] = "m00,2025-01-01T00:15:00Z,0.1";
    std::istringstream in(join(lines));
    CHECK_THROWS_AS(read_meter_csv(in, tariffs), FormatError);
  }
  SUBCASE("unparsable number") {
    lines[2] = "m00,2025-01-01T00:15:00Z,abc,0";
    std::istringstream in(join(lines));
    CHECK_THROWS_AS(read_meter_csv(in, tariffs), FormatError);
  }
  SUBCASE("member absent from the tariff file") {
    lines.push_back("stranger,2025-01-01T00:00:00Z,1,0");
    std::istringstream in(join(lines));
    CHECK_THROWS_AS(read_meter_csv(in, tariffs), FormatError);
  }
}

TEST_CASE("tariff JSON round trip") {
  const auto gen = sample_community();
  auto c = gen.community;
  c.members[0].fiscal = {true, false};
  c.tariffs.begin()->second.csc_network_charge = 0.02;
  const auto file = tariff_file_from_json(tariff_file_to_json(c));
  CHECK(file.tariffs == c.tariffs);
  CHECK(file.members.at(c.members[0].id).fiscal.vat_liable);
  CHECK_FALSE(file.members.at(c.members[0].id).fiscal.excise_liable);
  CHECK(file.members.at(c.members[1].id).tariff_id == c.members[1].tariff_id);

  const auto j = nlohmann::json::parse(R"({
    "flat": {"energy_price": 0.2, "network_charge": 0.05, "excise_rate": 0.03,
             "vat_rate": 0.2, "export_tariff": 0.04},
    "members": {"a": {"tariff_id": "flat"}}
  })");
  const auto parsed = tariff_file_from_json(j);
  CHECK(parsed.tariffs.at("flat").energy_price.peak == 0.2);
  CHECK(parsed.members.at("a").tariff_id == "flat");
}

TEST_CASE("allocation CSV round trip") {
  const auto gen = sample_community();
  const auto& c = gen.community;
  for (auto mechanism : kAllMechanisms) {
    const auto outcomes = run_mechanism(c, mechanism);
    std::ostringstream out;
    write_allocations_csv(out, c, outcomes);
    std::istringstream in(out.str());
    const auto back = read_allocations_csv(in, c);
    REQUIRE(back.size() == outcomes.size());
    for (std::size_t t = 0; t < back.size(); ++t) {
      CHECK(back[t].consumer_alloc == outcomes[t].consumer_alloc);
      CHECK(back[t].producer_alloc == outcomes[t].producer_alloc);
      if (outcomes[t].traded()) {
        CHECK(back[t].price == outcomes[t].price);
        CHECK(back[t].flags == outcomes[t].flags);
      }
    }
  }
}

TEST_CASE("bill CSV round trip") {
  BillRow row{"m01", "c000-u0.4", "glass", {1.5, 0.25, 3.0, 0.75, 0.5}, 2.25};
  std::ostringstream out;
  out << kBillsHeader << '\n';
  write_bill_row(out, row);
  std::istringstream in(out.str());
  const auto rows = read_bills_csv(in);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].member_id == "m01");
  CHECK(rows[0].scenario == "c000-u0.4");
  CHECK(rows[0].bill == row.bill);
  CHECK(rows[0].utility == 2.25);
}

TEST_CASE("fairness rows leave degenerate cells empty") {
  FairnessRow row;
  row.community_id = "c000";
  row.mechanism = "auction";
  row.report.jain = 0.5;
  std::ostringstream out;
  write_fairness_row(out, row);
  const auto f = split_csv_line(out.str().substr(0, out.str().size() - 1));
  REQUIRE(f.size() == 8);
  CHECK(f[3] == "0.5");
  CHECK(f[4].empty());
  CHECK(f[5].empty());
  CHECK(f[7].empty());
}

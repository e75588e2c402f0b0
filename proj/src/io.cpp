#include "csc/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace csc {

namespace {

double parse_double(const std::string& text, const std::string& context) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty()) {
    throw FormatError(context + ": cannot parse number '" + text + "'");
  }
  return value;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::string row_context(std::size_t row) { return "row " + std::to_string(row); }

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t begin = 0;
  while (true) {
    const auto comma = line.find(',', begin);
    fields.push_back(line.substr(begin, comma - begin));
    if (comma == std::string::npos) break;
    begin = comma + 1;
  }
  return fields;
}

Timestamp parse_timestamp(const std::string& text) {
  using namespace std::chrono;
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
  int consumed = 0;
  if (std::sscanf(text.c_str(), "%4d-%2u-%2uT%2u:%2u:%2u%n", &y, &mo, &d, &h, &mi, &s, &consumed) != 6) {
    throw FormatError("invalid timestamp '" + text + "'");
  }
  const std::string suffix = text.substr(static_cast<std::size_t>(consumed));
  if (suffix != "Z" && suffix != "+00:00") {
    throw FormatError("timestamp '" + text + "' is not UTC (expected 'Z' suffix)");
  }
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) throw FormatError("invalid timestamp '" + text + "'");
  return sys_seconds{sys_days{ymd}} + hours{h} + minutes{mi} + seconds{s};
}

std::string format_timestamp(Timestamp time) {
  using namespace std::chrono;
  const auto day = floor<days>(time);
  const year_month_day ymd{day};
  const hh_mm_ss hms{time - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::string format_number(double value) {
  if (value == 0.0) value = 0.0;  // drop the sign of -0
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string format_money(double value) {
  char buf[64];
  double rounded = std::round(value * 100.0) / 100.0;
  if (rounded == 0.0) rounded = 0.0;
  std::snprintf(buf, sizeof buf, "%.2f", rounded);
  return buf;
}

// -- tariffs ----------------------------------------------------------------------

namespace {

PriceShape shape_from_json(const nlohmann::json& j, const std::string& context) {
  if (j.is_number()) return PriceShape::flat(j.get<double>());
  if (!j.is_object()) throw FormatError(context + ": expected a number or a band object");
  PriceShape s;
  s.peak = j.at("peak").get<double>();
  s.offpeak = j.at("offpeak").get<double>();
  s.peak_start_hour = j.value("peak_start_hour", 8);
  s.peak_end_hour = j.value("peak_end_hour", 20);
  return s;
}

nlohmann::json shape_to_json(const PriceShape& s) {
  if (s.is_flat()) return s.peak;
  return {{"peak", s.peak},
          {"offpeak", s.offpeak},
          {"peak_start_hour", s.peak_start_hour},
          {"peak_end_hour", s.peak_end_hour}};
}

}  // namespace

TariffFile tariff_file_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("tariff file must be a JSON object");
  TariffFile file;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "members") {
        for (const auto& [member_id, m] : value.items()) {
          MemberAssignment a;
          a.tariff_id = m.at("tariff_id").get<std::string>();
          a.fiscal.vat_liable = m.value("vat_liable", false);
          a.fiscal.excise_liable = m.value("excise_liable", false);
          file.members.emplace(member_id, a);
        }
        continue;
      }
      TariffSchedule s;
      s.energy_price = shape_from_json(value.at("energy_price"), key + ".energy_price");
      s.network_charge = shape_from_json(value.at("network_charge"), key + ".network_charge");
      if (value.contains("csc_network_charge") && !value.at("csc_network_charge").is_null()) {
        s.csc_network_charge = value.at("csc_network_charge").get<double>();
      }
      s.excise_rate = value.at("excise_rate").get<double>();
      s.vat_rate = value.at("vat_rate").get<double>();
      s.export_tariff = value.at("export_tariff").get<double>();
      file.tariffs.emplace(key, s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("tariff file: ") + e.what());
  }
  return file;
}

nlohmann::json tariff_file_to_json(const Community& community) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, s] : community.tariffs) {
    nlohmann::json t = {{"energy_price", shape_to_json(s.energy_price)},
                        {"network_charge", shape_to_json(s.network_charge)},
                        {"excise_rate", s.excise_rate},
                        {"vat_rate", s.vat_rate},
                        {"export_tariff", s.export_tariff}};
    if (s.csc_network_charge) t["csc_network_charge"] = *s.csc_network_charge;
    j[id] = std::move(t);
  }
  nlohmann::json members = nlohmann::json::object();
  for (const auto& m : community.members) {
    members[m.id] = {{"tariff_id", m.tariff_id},
                     {"vat_liable", m.fiscal.vat_liable},
                     {"excise_liable", m.fiscal.excise_liable}};
  }
  j["members"] = std::move(members);
  return j;
}

TariffFile read_tariff_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open tariff file '" + path + "'");
  try {
    return tariff_file_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("tariff file '" + path + "': " + e.what());
  }
}

void write_tariff_file(const std::string& path, const Community& community) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << tariff_file_to_json(community).dump(2) << '\n';
}

// -- meters -------------------------------------------------------------------------

void write_meter_csv(std::ostream& out, const Community& community) {
  out << "member_id,timestamp,import_kwh,export_kwh\n";
  std::vector<std::string> stamps(community.axis.count);
  for (std::size_t t = 0; t < community.axis.count; ++t) stamps[t] = format_timestamp(community.axis.at(t));
  for (const auto& m : community.members) {
    for (std::size_t t = 0; t < community.axis.count; ++t) {
      out << m.id << ',' << stamps[t] << ',' << format_number(m.imports.values[t]) << ','
          << format_number(m.exports.values[t]) << '\n';
    }
  }
}

void write_meter_csv(const std::string& path, const Community& community) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_meter_csv(out, community);
}

Community read_meter_csv(std::istream& in, const TariffFile& tariffs, bool force) {
  struct Row {
    Timestamp time;
    double imported;
    double exported;
  };
  std::string line;
  if (!std::getline(in, line)) throw FormatError("meter CSV is empty");
  strip_cr(line);
  if (line != "member_id,timestamp,import_kwh,export_kwh") {
    throw FormatError("meter CSV header must be 'member_id,timestamp,import_kwh,export_kwh'");
  }

  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Row>> rows;
  std::size_t row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    const auto ctx = row_context(row_number);
    if (f.size() != 4 || f[0].empty()) throw FormatError(ctx + ": expected 4 fields");
    Row r{parse_timestamp(f[1]), parse_double(f[2], ctx), parse_double(f[3], ctx)};
    auto [it, inserted] = rows.try_emplace(f[0]);
    if (inserted) order.push_back(f[0]);
    if (!it->second.empty() && !(it->second.back().time < r.time)) {
      throw FormatError(ctx + ": timestamps for member '" + f[0] + "' are not strictly increasing");
    }
    it->second.push_back(r);
  }
  if (order.empty()) throw FormatError("meter CSV has no data rows");

  Timestamp first = rows[order[0]].front().time;
  Timestamp last = first;
  std::chrono::seconds step{0};
  for (const auto& id : order) {
    const auto& rs = rows[id];
    first = std::min(first, rs.front().time);
    last = std::max(last, rs.back().time);
    for (std::size_t k = 1; k < rs.size(); ++k) {
      const auto diff = rs[k].time - rs[k - 1].time;
      if (step.count() == 0 || diff < step) step = diff;
    }
  }
  if (step.count() == 0) step = std::chrono::minutes{15};

  Community community;
  community.axis.start = first;
  community.axis.step = step;
  community.axis.count = static_cast<std::size_t>((last - first) / step) + 1;
  community.tariffs = tariffs.tariffs;

  ValidationReport findings;
  for (const auto& id : order) {
    const auto assignment = tariffs.members.find(id);
    if (assignment == tariffs.members.end()) {
      throw FormatError("member '" + id + "' is not listed in the tariff file");
    }
    if (!tariffs.tariffs.contains(assignment->second.tariff_id)) {
      throw FormatError("member '" + id + "' references unknown tariff '" +
                        assignment->second.tariff_id + "'");
    }
    Member m;
    m.id = id;
    m.tariff_id = assignment->second.tariff_id;
    m.fiscal = assignment->second.fiscal;
    m.imports = EnergySeries(community.axis);
    m.exports = EnergySeries(community.axis);
    const auto& rs = rows[id];
    for (const auto& r : rs) {
      if ((r.time - first) % step != std::chrono::seconds{0}) {
        throw FormatError("member '" + id + "': timestamp " + format_timestamp(r.time) +
                          " is off the " + std::to_string(step.count()) + " s grid");
      }
      const auto t = static_cast<std::size_t>((r.time - first) / step);
      m.imports.values[t] = r.imported;
      m.exports.values[t] = r.exported;
    }
    if (rs.size() != community.axis.count) {
      findings.push_back({FindingKind::LengthMismatch, id, std::nullopt,
                          std::to_string(rs.size()) + " rows for " +
                              std::to_string(community.axis.count) + " intervals"});
    }
    community.members.push_back(std::move(m));
  }

  auto report = validate_community(community);
  findings.insert(findings.end(), report.begin(), report.end());
  if (!findings.empty() && !force) {
    std::string what = "meter data rejected (" + std::to_string(findings.size()) + " finding(s)); first: " +
                       describe(findings.front());
    throw ValidationError(what, std::move(findings));
  }
  return community;
}

Community ingest_meter_csv(const std::string& path, const TariffFile& tariffs, bool force) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open meter file '" + path + "'");
  return read_meter_csv(in, tariffs, force);
}

// -- allocations ------------------------------------------------------------------------

void write_allocations_csv(std::ostream& out, const Community& community,
                           std::span<const AllocationOutcome> outcomes) {
  out << "timestamp,member_id,role,allocated_kwh,price_eur_per_kwh,flags\n";
  for (const auto& o : outcomes) {
    if (!o.price) continue;
    const auto stamp = format_timestamp(community.axis.at(o.t));
    const auto price = format_number(*o.price);
    const char* flags = o.has(kPriceInversion) ? "price-inversion" : "";
    auto emit = [&](const std::vector<double>& alloc, const char* role) {
      for (std::size_t i = 0; i < alloc.size(); ++i) {
        if (alloc[i] > 0.0) {
          out << stamp << ',' << community.members[i].id << ',' << role << ','
              << format_number(alloc[i]) << ',' << price << ',' << flags << '\n';
        }
      }
    };
    emit(o.consumer_alloc, "consumer");
    emit(o.producer_alloc, "producer");
  }
}

std::vector<AllocationOutcome> read_allocations_csv(std::istream& in, const Community& community) {
  const std::size_t n = community.size();
  std::vector<AllocationOutcome> outcomes(community.axis.count);
  for (std::size_t t = 0; t < outcomes.size(); ++t) {
    outcomes[t].t = t;
    outcomes[t].consumer_alloc.assign(n, 0.0);
    outcomes[t].producer_alloc.assign(n, 0.0);
  }
  std::string line;
  if (!std::getline(in, line)) throw FormatError("allocation CSV is empty");
  strip_cr(line);
  if (line != "timestamp,member_id,role,allocated_kwh,price_eur_per_kwh,flags") {
    throw FormatError("unexpected allocation CSV header");
  }
  std::size_t row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    strip_cr(line);
    if (line.empty()) continue;
    const auto ctx = row_context(row_number);
    const auto f = split_csv_line(line);
    if (f.size() != 6) throw FormatError(ctx + ": expected 6 fields");
    const auto time = parse_timestamp(f[0]);
    const auto offset = time - community.axis.start;
    if (offset.count() < 0 || offset % community.axis.step != std::chrono::seconds{0} ||
        static_cast<std::size_t>(offset / community.axis.step) >= community.axis.count) {
      throw FormatError(ctx + ": timestamp " + f[0] + " is not on the meter axis");
    }
    const auto t = static_cast<std::size_t>(offset / community.axis.step);
    const auto member = community.index_of(f[1]);
    if (!member) throw FormatError(ctx + ": unknown member '" + f[1] + "'");
    const double kwh = parse_double(f[3], ctx);
    const double price = parse_double(f[4], ctx);
    auto& o = outcomes[t];
    if (f[2] == "consumer") {
      o.consumer_alloc[*member] = kwh;
    } else if (f[2] == "producer") {
      o.producer_alloc[*member] = kwh;
    } else {
      throw FormatError(ctx + ": unknown role '" + f[2] + "'");
    }
    if (o.price && *o.price != price) throw FormatError(ctx + ": conflicting prices within one interval");
    o.price = price;
    if (f[5] == "price-inversion") {
      o.flags |= kPriceInversion;
    } else if (!f[5].empty()) {
      throw FormatError(ctx + ": unknown flag '" + f[5] + "'");
    }
  }
  return outcomes;
}

// -- bills ---------------------------------------------------------------------------------

void write_bill_row(std::ostream& out, const BillRow& row) {
  const auto& b = row.bill;
  out << row.member_id << ',' << row.scenario << ',' << row.mechanism << ',' << format_money(b.energy_cost)
      << ',' << format_money(b.excise_cost) << ',' << format_money(b.network_cost) << ','
      << format_money(b.csc_cost) << ',' << format_money(b.producer_revenue) << ','
      << format_money(b.total()) << ',' << format_money(row.utility) << '\n';
}

std::vector<BillRow> read_bills_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("bills CSV is empty");
  strip_cr(line);
  if (line != kBillsHeader) throw FormatError("unexpected bills CSV header");
  std::vector<BillRow> rows;
  std::size_t row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    strip_cr(line);
    if (line.empty()) continue;
    const auto ctx = row_context(row_number);
    const auto f = split_csv_line(line);
    if (f.size() != 10) throw FormatError(ctx + ": expected 10 fields");
    BillRow r;
    r.member_id = f[0];
    r.scenario = f[1];
    r.mechanism = f[2];
    r.bill.energy_cost = parse_double(f[3], ctx);
    r.bill.excise_cost = parse_double(f[4], ctx);
    r.bill.network_cost = parse_double(f[5], ctx);
    r.bill.csc_cost = parse_double(f[6], ctx);
    r.bill.producer_revenue = parse_double(f[7], ctx);
    r.utility = parse_double(f[9], ctx);
    rows.push_back(std::move(r));
  }
  return rows;
}

// -- fairness ---------------------------------------------------------------------------------

void write_fairness_row(std::ostream& out, const FairnessRow& row) {
  auto cell = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  const auto& r = row.report;
  out << row.community_id << ',' << format_number(row.uptake) << ',' << row.mechanism << ','
      << cell(r.jain) << ',' << cell(r.min_max) << ',' << cell(r.meritocratic_index) << ','
      << format_number(r.social_welfare) << ',' << cell(r.weighted_utility) << '\n';
}

}  // namespace csc

#include "csc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "csc/io.hpp"

namespace csc {

namespace fs = std::filesystem;

std::optional<double> MemberOutcome::saving_pct() const {
  const double b = baseline.total();
  if (!(b > 0.0)) return std::nullopt;
  return 100.0 * utility / b;
}

std::vector<double> CellResult::utilities() const {
  std::vector<double> u;
  u.reserve(members.size());
  for (const auto& m : members) u.push_back(m.utility);
  return u;
}

const CellResult* SweepResult::find(std::size_t community, double uptake, Mechanism mechanism) const {
  for (const auto& c : cells) {
    if (c.community == community && c.mechanism == mechanism && std::abs(c.uptake - uptake) < 1e-12) return &c;
  }
  return nullptr;
}

std::string community_label(std::size_t community) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "c%03zu", community);
  return buf;
}

std::string scenario_label(std::size_t community, double uptake) {
  return community_label(community) + "-u" + format_number(uptake);
}

std::string config_hash(const ScenarioConfig& config) {
  const std::string canonical = config_to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

CellResult evaluate_cell(const Community& community, std::span<const double> contribs,
                         Mechanism mechanism, const BillingOptions& billing) {
  const auto outcomes = run_mechanism(community, mechanism);
  const auto bills = bill_community(community, outcomes, billing);

  CellResult cell;
  cell.mechanism = mechanism;
  cell.members.resize(community.size());
  for (std::size_t i = 0; i < community.size(); ++i) {
    auto& m = cell.members[i];
    m.id = community.members[i].id;
    m.import_kwh = community.members[i].imports.total();
    m.consumption_kwh = m.import_kwh;
    m.export_kwh = community.members[i].exports.total();
    m.baseline = bills[i].baseline;
    m.with_csc = bills[i].with_csc;
    m.utility = bills[i].utility();
  }
  for (const auto& o : outcomes) {
    if (o.has(kPriceInversion)) ++cell.inverted_intervals;
    for (std::size_t i = 0; i < community.size(); ++i) {
      cell.members[i].local_in_kwh += o.consumer_alloc[i];
      cell.members[i].local_out_kwh += o.producer_alloc[i];
    }
  }
  const auto u = cell.utilities();
  cell.report = evaluate_fairness(u, contribs);
  return cell;
}

// -- partial results ---------------------------------------------------------------

namespace {

nlohmann::json indicator_json(const Indicator& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

Indicator indicator_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

nlohmann::json bill_json(const BillBreakdown& b) {
  return {b.energy_cost, b.excise_cost, b.network_cost, b.csc_cost, b.producer_revenue};
}

BillBreakdown bill_from(const nlohmann::json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>(),
          j.at(4).get<double>()};
}

nlohmann::json cell_json(const CellResult& c) {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : c.members) {
    members.push_back({{"id", m.id},
                       {"consumption_kwh", m.consumption_kwh},
                       {"import_kwh", m.import_kwh},
                       {"export_kwh", m.export_kwh},
                       {"local_in_kwh", m.local_in_kwh},
                       {"local_out_kwh", m.local_out_kwh},
                       {"baseline", bill_json(m.baseline)},
                       {"with_csc", bill_json(m.with_csc)},
                       {"utility", m.utility}});
  }
  return {{"community", c.community},
          {"uptake", c.uptake},
          {"mechanism", std::string(to_string(c.mechanism))},
          {"inverted_intervals", c.inverted_intervals},
          {"jain", indicator_json(c.report.jain)},
          {"min_max", indicator_json(c.report.min_max)},
          {"merit", indicator_json(c.report.meritocratic_index)},
          {"social_welfare", c.report.social_welfare},
          {"contribution", c.report.contribution},
          {"members", members}};
}

CellResult cell_from(const nlohmann::json& j) {
  CellResult c;
  c.community = j.at("community").get<std::size_t>();
  c.uptake = j.at("uptake").get<double>();
  c.mechanism = parse_mechanism(j.at("mechanism").get<std::string>());
  c.inverted_intervals = j.at("inverted_intervals").get<std::size_t>();
  c.report.jain = indicator_from(j.at("jain"));
  c.report.min_max = indicator_from(j.at("min_max"));
  c.report.meritocratic_index = indicator_from(j.at("merit"));
  c.report.social_welfare = j.at("social_welfare").get<double>();
  c.report.contribution = j.at("contribution").get<std::vector<double>>();
  for (const auto& mj : j.at("members")) {
    MemberOutcome m;
    m.id = mj.at("id").get<std::string>();
    m.consumption_kwh = mj.at("consumption_kwh").get<double>();
    m.import_kwh = mj.at("import_kwh").get<double>();
    m.export_kwh = mj.at("export_kwh").get<double>();
    m.local_in_kwh = mj.at("local_in_kwh").get<double>();
    m.local_out_kwh = mj.at("local_out_kwh").get<double>();
    m.baseline = bill_from(mj.at("baseline"));
    m.with_csc = bill_from(mj.at("with_csc"));
    m.utility = mj.at("utility").get<double>();
    c.members.push_back(std::move(m));
  }
  return c;
}

fs::path partial_path(const fs::path& out_dir, std::size_t community) {
  return out_dir / "partial" / (community_label(community) + ".json");
}

void write_file_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::vector<CellResult> compute_community(const ScenarioConfig& config, std::size_t index) {
  std::vector<CellResult> cells;
  const BillingOptions billing{config.pmo_fee};
  for (double uptake : config.uptake_levels) {
    const auto gen = generate_community(config, index, uptake);
    const auto contribs = contributions(gen.community);
    for (auto mechanism : config.mechanisms) {
      auto cell = evaluate_cell(gen.community, contribs, mechanism, billing);
      for (std::size_t i = 0; i < cell.members.size(); ++i) cell.members[i].consumption_kwh = gen.annual_load_kwh[i];
      cell.community = index;
      cell.uptake = uptake;
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

}  // namespace

SweepResult run_sweep(const ScenarioConfig& config, const SweepOptions& options) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  SweepResult result;
  result.config = config;
  result.config_hash = config_hash(config);
  result.out_dir = options.out_root / result.config_hash;
  if (options.write_outputs) fs::create_directories(result.out_dir / "partial");

  std::vector<std::vector<CellResult>> per_community(config.communities);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= config.communities) return;
      try {
        const auto path = partial_path(result.out_dir, k);
        bool resumed = false;
        if (options.resume && options.write_outputs && fs::exists(path)) {
          std::ifstream in(path);
          for (const auto& cj : nlohmann::json::parse(in)) per_community[k].push_back(cell_from(cj));
          resumed = true;
        } else {
          per_community[k] = compute_community(config, k);
          if (options.write_outputs) {
            nlohmann::json j = nlohmann::json::array();
            for (const auto& c : per_community[k]) j.push_back(cell_json(c));
            write_file_atomically(path, j.dump());
          }
        }
        if (options.log_progress) {
          std::lock_guard lock(log_mutex);
          std::cerr << "[sweep] community " << (k + 1) << "/" << config.communities
                    << (resumed ? " (resumed)" : "") << '\n';
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(config.communities);
        return;
      }
    }
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(config.communities)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (unsigned j = 0; j < jobs; ++j) threads.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  for (auto& cells : per_community) {
    for (auto& c : cells) result.cells.push_back(std::move(c));
  }
  result.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (options.write_outputs) write_sweep_outputs(result);
  if (options.log_progress) {
    std::cerr << "[sweep] " << result.cells.size() << " cells in " << result.runtime_seconds << " s -> "
              << result.out_dir.string() << '\n';
  }
  return result;
}

// -- aggregation -------------------------------------------------------------------------

std::vector<SavingsPoint> savings_profile(const SweepResult& sweep, Mechanism mechanism, double uptake) {
  std::vector<SavingsPoint> points;
  std::vector<double> sums;
  bool found = false;
  for (const auto& cell : sweep.cells) {
    if (cell.mechanism != mechanism || std::abs(cell.uptake - uptake) > 1e-12) continue;
    found = true;
    std::vector<std::size_t> order(cell.members.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return cell.members[a].consumption_kwh > cell.members[b].consumption_kwh;
    });
    if (points.size() < order.size()) {
      points.resize(order.size());
      sums.resize(order.size(), 0.0);
    }
    for (std::size_t r = 0; r < order.size(); ++r) {
      if (auto pct = cell.members[order[r]].saving_pct()) {
        sums[r] += *pct;
        ++points[r].samples;
      }
    }
  }
  if (!found) {
    throw std::out_of_range("no sweep results for mechanism " + std::string(to_string(mechanism)) +
                            " at uptake " + format_number(uptake));
  }
  for (std::size_t r = 0; r < points.size(); ++r) {
    points[r].rank = r + 1;
    if (points[r].samples > 0) points[r].mean_saving_pct = sums[r] / static_cast<double>(points[r].samples);
  }
  return points;
}

std::optional<double> mean_saving_pct(const SweepResult& sweep, Mechanism mechanism, double uptake) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& cell : sweep.cells) {
    if (cell.mechanism != mechanism || std::abs(cell.uptake - uptake) > 1e-12) continue;
    for (const auto& m : cell.members) {
      if (auto pct = m.saving_pct()) {
        sum += *pct;
        ++count;
      }
    }
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

std::vector<FairnessCell> fairness_matrix(const SweepResult& sweep) {
  const auto& mechanisms = sweep.config.mechanisms;
  struct Accumulator {
    double sum = 0.0;
    std::size_t count = 0;
    void add(const Indicator& v) {
      if (v) {
        sum += *v;
        ++count;
      }
    }
    Indicator mean() const { return count ? Indicator(sum / static_cast<double>(count)) : std::nullopt; }
  };
  std::vector<FairnessCell> matrix;
  for (double uptake : sweep.config.uptake_levels) {
    std::vector<std::array<Accumulator, 4>> acc(mechanisms.size());
    for (std::size_t k = 0; k < sweep.config.communities; ++k) {
      std::vector<FairnessReport> reports;
      for (auto m : mechanisms) {
        const auto* cell = sweep.find(k, uptake, m);
        if (!cell) break;
        reports.push_back(cell->report);
      }
      if (reports.size() != mechanisms.size()) continue;
      const auto normalized = normalize_reports(reports);
      for (std::size_t i = 0; i < normalized.size(); ++i) {
        acc[i][0].add(normalized[i].jain);
        acc[i][1].add(normalized[i].min_max);
        acc[i][2].add(normalized[i].meritocratic);
        acc[i][3].add(normalized[i].social_welfare);
      }
    }
    for (std::size_t i = 0; i < mechanisms.size(); ++i) {
      FairnessCell cell;
      cell.uptake = uptake;
      cell.mechanism = mechanisms[i];
      cell.mean = {acc[i][0].mean(), acc[i][1].mean(), acc[i][2].mean(), acc[i][3].mean()};
      matrix.push_back(cell);
    }
  }
  return matrix;
}

// -- outputs ---------------------------------------------------------------------------------

namespace {

std::string cell_text(const Indicator& v) { return v ? format_number(*v) : std::string(); }

}  // namespace

void write_sweep_outputs(const SweepResult& sweep) {
  fs::create_directories(sweep.out_dir);
  std::ostringstream allocations, bills, fairness, summary, profile;

  allocations << "community_id,uptake,mechanism,member_id,role,allocated_kwh\n";
  bills << kBillsHeader << '\n';
  fairness << kFairnessHeader << '\n';
  for (const auto& cell : sweep.cells) {
    const auto mech = std::string(to_string(cell.mechanism));
    const auto community = community_label(cell.community);
    const auto uptake = format_number(cell.uptake);
    for (const auto& m : cell.members) {
      if (m.local_in_kwh > 0.0) {
        allocations << community << ',' << uptake << ',' << mech << ',' << m.id << ",consumer,"
                    << format_number(m.local_in_kwh) << '\n';
      }
      if (m.local_out_kwh > 0.0) {
        allocations << community << ',' << uptake << ',' << mech << ',' << m.id << ",producer,"
                    << format_number(m.local_out_kwh) << '\n';
      }
      write_bill_row(bills, {m.id, scenario_label(cell.community, cell.uptake), mech, m.with_csc, m.utility});
    }
    write_fairness_row(fairness, {community, cell.uptake, mech, cell.report});
  }

  const auto matrix = fairness_matrix(sweep);
  summary << "uptake,mechanism,jain,min_max,merit,social_welfare,mean_saving_pct\n";
  nlohmann::json summary_json = nlohmann::json::array();
  for (const auto& fc : matrix) {
    const auto saving = mean_saving_pct(sweep, fc.mechanism, fc.uptake);
    summary << format_number(fc.uptake) << ',' << to_string(fc.mechanism) << ',' << cell_text(fc.mean.jain)
            << ',' << cell_text(fc.mean.min_max) << ',' << cell_text(fc.mean.meritocratic) << ','
            << cell_text(fc.mean.social_welfare) << ',' << cell_text(saving) << '\n';
    summary_json.push_back({{"uptake", fc.uptake},
                            {"mechanism", std::string(to_string(fc.mechanism))},
                            {"jain", indicator_json(fc.mean.jain)},
                            {"min_max", indicator_json(fc.mean.min_max)},
                            {"merit", indicator_json(fc.mean.meritocratic)},
                            {"social_welfare", indicator_json(fc.mean.social_welfare)},
                            {"mean_saving_pct", indicator_json(saving)}});
  }

  profile << "mechanism,uptake,rank,mean_saving_pct,samples\n";
  for (auto mechanism : sweep.config.mechanisms) {
    for (double uptake : sweep.config.uptake_levels) {
      for (const auto& p : savings_profile(sweep, mechanism, uptake)) {
        profile << to_string(mechanism) << ',' << format_number(uptake) << ',' << p.rank << ','
                << cell_text(p.mean_saving_pct) << ',' << p.samples << '\n';
      }
    }
  }

  const nlohmann::json manifest = {{"tool", "csc-sim"},
                                   {"version", kVersion},
                                   {"config_hash", sweep.config_hash},
                                   {"seed", sweep.config.seed},
                                   {"config", config_to_json(sweep.config)},
                                   {"files",
                                    {"allocations.csv", "bills.csv", "fairness.csv", "summary.csv",
                                     "savings_profile.csv", "summary.json"}}};

  write_file_atomically(sweep.out_dir / "allocations.csv", allocations.str());
  write_file_atomically(sweep.out_dir / "bills.csv", bills.str());
  write_file_atomically(sweep.out_dir / "fairness.csv", fairness.str());
  write_file_atomically(sweep.out_dir / "summary.csv", summary.str());
  write_file_atomically(sweep.out_dir / "savings_profile.csv", profile.str());
  write_file_atomically(sweep.out_dir / "summary.json", summary_json.dump(2) + "\n");
  write_file_atomically(sweep.out_dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace csc

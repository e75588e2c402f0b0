// csc-sim: command line front end for the community simulator.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "csc/harness.hpp"
#include "csc/io.hpp"

namespace fs = std::filesystem;
using namespace csc;

namespace {

ScenarioConfig config_with_seed(const std::string& path, std::optional<std::uint64_t> seed) {
  auto config = load_config(path);
  if (seed) config.seed = *seed;
  return config;
}

std::ofstream open_out(const std::string& path) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

// The fairness step needs only net injections, so members get a placeholder
// zero-rate tariff instead of requiring the tariff file.
Community meters_only(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open meter file '" + path + "'");
  TariffFile tariffs;
  tariffs.tariffs["none"] = TariffSchedule{};
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto f = split_csv_line(line);
    if (!f.empty() && !f[0].empty()) tariffs.members.try_emplace(f[0], MemberAssignment{"none", {}});
  }
  return ingest_meter_csv(path, tariffs);
}

void gen_community(const std::string& config_path, std::size_t index, double uptake, const std::string& out_dir,
                   std::optional<std::uint64_t> seed) {
  const auto config = config_with_seed(config_path, seed);
  const auto gen = generate_community(config, index, uptake);
  fs::create_directories(out_dir);
  write_meter_csv((fs::path(out_dir) / "meters.csv").string(), gen.community);
  write_tariff_file((fs::path(out_dir) / "tariffs.json").string(), gen.community);
  std::cerr << "[gen-community] " << gen.community.size() << " members, " << gen.pv_owners.size()
            << " with PV, " << gen.community.axis.count << " intervals -> " << out_dir << '\n';
}

void allocate(const std::string& meters, const std::string& tariffs, const std::string& mechanism,
              const std::string& out_path, bool force) {
  const auto community = ingest_meter_csv(meters, read_tariff_file(tariffs), force);
  const auto outcomes = run_mechanism(community, parse_mechanism(mechanism));
  auto out = open_out(out_path);
  write_allocations_csv(out, community, outcomes);
  std::size_t inverted = 0;
  for (const auto& o : outcomes) inverted += o.has(kPriceInversion) ? 1 : 0;
  std::cerr << "[allocate] " << mechanism << ": " << outcomes.size() << " intervals";
  if (inverted) std::cerr << ", " << inverted << " with price inversion";
  std::cerr << '\n';
}

void bill(const std::string& meters, const std::string& tariffs, const std::string& allocations,
          const std::string& out_path, const std::string& scenario, const std::string& mechanism, double pmo_fee) {
  const auto community = ingest_meter_csv(meters, read_tariff_file(tariffs));
  std::ifstream in(allocations);
  if (!in) throw FormatError("cannot open allocation file '" + allocations + "'");
  const auto outcomes = read_allocations_csv(in, community);
  const auto bills = bill_community(community, outcomes, {pmo_fee});
  auto out = open_out(out_path);
  out << kBillsHeader << '\n';
  for (std::size_t i = 0; i < community.size(); ++i) {
    write_bill_row(out, {community.members[i].id, scenario, mechanism, bills[i].with_csc, bills[i].utility()});
  }
}

void fairness(const std::string& bills_path, const std::string& meters, const std::string& out_path) {
  const auto community = meters_only(meters);
  const auto contribs = contributions(community);
  std::size_t owners = 0;
  for (const auto& m : community.members) owners += m.exports.all_zero() ? 0 : 1;
  const double uptake = static_cast<double>(owners) / static_cast<double>(community.size());

  std::ifstream in(bills_path);
  if (!in) throw FormatError("cannot open bills file '" + bills_path + "'");
  // group rows by (scenario, mechanism), keeping first-seen order
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::map<std::string, double>> groups;
  for (const auto& row : read_bills_csv(in)) {
    const auto key = std::make_pair(row.scenario, row.mechanism);
    if (!groups.contains(key)) order.push_back(key);
    if (!groups[key].emplace(row.member_id, row.utility).second) {
      throw FormatError("duplicate bill row for member '" + row.member_id + "'");
    }
  }
  auto out = open_out(out_path);
  out << kFairnessHeader << '\n';
  for (const auto& key : order) {
    const auto& by_member = groups[key];
    std::vector<double> u;
    for (const auto& m : community.members) {
      const auto it = by_member.find(m.id);
      if (it == by_member.end()) {
        throw FormatError("no bill for member '" + m.id + "' in scenario '" + key.first + "'");
      }
      u.push_back(it->second);
    }
    if (by_member.size() != community.size()) {
      throw FormatError("scenario '" + key.first + "' bills members absent from the meter file");
    }
    write_fairness_row(out, {key.first, uptake, key.second, evaluate_fairness(u, contribs)});
  }
}

void simulate(const std::string& config_path, const std::string& out_root, unsigned jobs, bool resume,
              std::optional<std::uint64_t> seed) {
  SweepOptions options;
  options.out_root = out_root;
  options.jobs = jobs;
  options.resume = resume;
  const auto result = run_sweep(config_with_seed(config_path, seed), options);
  std::cout << result.out_dir.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collective self-consumption community simulator"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config, out, meters, tariffs, mechanism, allocations, bills, scenario = "community";
  std::size_t index = 0;
  double uptake = 0.0;
  double pmo_fee = 0.0;
  unsigned jobs = 1;
  bool resume = false;
  bool force = false;
  std::optional<std::uint64_t> seed;

  auto* gen = app.add_subcommand("gen-community", "Generate one synthetic community (meters.csv, tariffs.json)");
  gen->add_option("--config", config, "Scenario config JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--index", index, "Community index")->required();
  gen->add_option("--uptake", uptake, "PV uptake in [0, 1]")->required()->check(CLI::Range(0.0, 1.0));
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--seed", seed, "Override the config seed");

  auto* alloc = app.add_subcommand("allocate", "Allocate community energy per interval");
  alloc->add_option("--meters", meters, "Meter CSV")->required()->check(CLI::ExistingFile);
  alloc->add_option("--tariffs", tariffs, "Tariff JSON")->required()->check(CLI::ExistingFile);
  alloc->add_option("--mechanism", mechanism, "Distribution mechanism")
      ->required()
      ->check(CLI::IsMember({"prorata", "glass", "priority-glass", "auction"}));
  alloc->add_option("--out", out, "Allocation CSV")->required();
  alloc->add_flag("--force", force, "Proceed despite validation findings");

  auto* bill_cmd = app.add_subcommand("bill", "Compute bills with local trading");
  bill_cmd->add_option("--meters", meters, "Meter CSV")->required()->check(CLI::ExistingFile);
  bill_cmd->add_option("--tariffs", tariffs, "Tariff JSON")->required()->check(CLI::ExistingFile);
  bill_cmd->add_option("--allocations", allocations, "Allocation CSV")->required()->check(CLI::ExistingFile);
  bill_cmd->add_option("--out", out, "Bills CSV")->required();
  bill_cmd->add_option("--scenario", scenario, "Scenario label written to each row")->capture_default_str();
  bill_cmd->add_option("--mechanism", mechanism, "Mechanism label written to each row");
  bill_cmd->add_option("--pmo-fee", pmo_fee, "Share of local sales kept by the PMO")->check(CLI::Range(0.0, 1.0));

  auto* fair = app.add_subcommand("fairness", "Score bills with the fairness indicators");
  fair->add_option("--bills", bills, "Bills CSV")->required()->check(CLI::ExistingFile);
  fair->add_option("--meters", meters, "Meter CSV")->required()->check(CLI::ExistingFile);
  fair->add_option("--out", out, "Fairness CSV")->required();

  auto* sim = app.add_subcommand("simulate", "Run the full sweep");
  sim->add_option("--config", config, "Scenario config JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out, "Output root; results land in <out>/<config-hash>/")->required();
  sim->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  sim->add_flag("--resume", resume, "Reuse per-community partial results");
  sim->add_option("--seed", seed, "Override the config seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) gen_community(config, index, uptake, out, seed);
    if (*alloc) allocate(meters, tariffs, mechanism, out, force);
    if (*bill_cmd) bill(meters, tariffs, allocations, out, scenario, mechanism, pmo_fee);
    if (*fair) fairness(bills, meters, out);
    if (*sim) simulate(config, out, jobs, resume, seed);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    for (const auto& f : e.report()) std::cerr << "  " << describe(f) << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

#include "csc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <stdexcept>

namespace csc {

namespace {

constexpr std::uint64_t kPoolScope = ~std::uint64_t{0};
constexpr std::uint64_t kCommunityScope = ~std::uint64_t{0};
constexpr double kSiteLatitudeDeg = 43.6;
constexpr double kSolarNoonUtcHour = 11.75;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

struct ReferenceYear {
  Timestamp start;
  std::size_t per_day = 0;
  std::size_t count = 0;
};

ReferenceYear reference_year(const TimeAxis& axis) {
  using namespace std::chrono;
  if (axis.step.count() <= 0 || days{1} % axis.step != seconds{0}) {
    throw std::invalid_argument("profile generation needs a step that divides one day");
  }
  const year_month_day ymd{floor<days>(axis.start)};
  ReferenceYear ref;
  ref.start = sys_seconds{sys_days{ymd.year() / January / 1}};
  ref.per_day = static_cast<std::size_t>(days{1} / axis.step);
  ref.count = 365 * ref.per_day;
  return ref;
}

EnergySeries sample_reference(const std::vector<double>& ref_values, const ReferenceYear& ref,
                              const TimeAxis& axis) {
  EnergySeries series(axis);
  const auto offset = (axis.start - ref.start) / axis.step;
  for (std::size_t t = 0; t < axis.count; ++t) {
    auto k = (offset + static_cast<long long>(t)) % static_cast<long long>(ref.count);
    if (k < 0) k += static_cast<long long>(ref.count);
    series.values[t] = ref_values[static_cast<std::size_t>(k)];
  }
  return series;
}

double gaussian_bump(double hour, double centre, double width) {
  const double z = (hour - centre) / width;
  return std::exp(-0.5 * z * z);
}

double uniform(std::mt19937_64& stream, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(stream);
}

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

std::vector<std::string> mechanism_names(const std::vector<Mechanism>& mechanisms) {
  std::vector<std::string> names;
  for (auto m : mechanisms) names.emplace_back(to_string(m));
  return names;
}

}  // namespace

// -- configuration ----------------------------------------------------------

void ScenarioConfig::validate() const {
  require(communities >= 1, "communities must be >= 1");
  require(members_per_community >= 1, "members_per_community must be >= 1");
  require(pool_size >= members_per_community, "pool_size must be >= members_per_community");
  require(!uptake_levels.empty(), "uptake_levels must not be empty");
  require(!mechanisms.empty(), "mechanisms must not be empty");
  for (double u : uptake_levels) require(u >= 0.0 && u <= 1.0, "uptake levels must lie in [0, 1]");
  require(new_pv_share >= 0.0 && new_pv_share <= 1.0, "new_pv_share must lie in [0, 1]");
  require(tariff_mix >= 0.0 && tariff_mix <= 1.0, "tariff_mix must lie in [0, 1]");
  require(pv_capacity_kw > 0.0, "pv_capacity_kw must be positive");
  require(days >= 1, "days must be >= 1");
  require(step_minutes > 0 && 1440 % step_minutes == 0, "step_minutes must divide one day");
  require(min_annual_kwh > 0.0 && max_annual_kwh >= min_annual_kwh, "invalid annual consumption range");
  require(load_noise >= 0.0, "load_noise must be >= 0");
  require(capacity_factor > 0.0 && capacity_factor < 1.0, "capacity_factor must lie in (0, 1)");
  require(pmo_fee >= 0.0 && pmo_fee < 1.0, "pmo_fee must lie in [0, 1)");
  require(new_feed_in >= 0.0 && old_feed_in >= 0.0, "feed-in tariffs must be >= 0");
  require(tariffs.vat_rate >= 0.0 && tariffs.vat_rate < 1.0, "vat_rate must lie in [0, 1)");
  require(tariffs.fixed_energy_price >= 0.0 && tariffs.tou_peak_price >= 0.0 &&
              tariffs.tou_offpeak_price >= 0.0 && tariffs.network_charge >= 0.0 &&
              tariffs.excise_rate >= 0.0,
          "tariff rates must be >= 0");
  require(tariffs.peak_start_hour >= 0 && tariffs.peak_start_hour <= 24 &&
              tariffs.peak_end_hour >= 0 && tariffs.peak_end_hour <= 24,
          "peak hours must lie in [0, 24]");
}

TimeAxis ScenarioConfig::axis() const {
  using namespace std::chrono;
  TimeAxis a;
  a.start = sys_seconds{sys_days{std::chrono::year{year} / January / 1}};
  a.step = minutes{step_minutes};
  a.count = static_cast<std::size_t>(days * 1440 / static_cast<std::size_t>(step_minutes));
  return a;
}

nlohmann::json config_to_json(const ScenarioConfig& c) {
  return {
      {"communities", c.communities},
      {"members_per_community", c.members_per_community},
      {"uptake_levels", c.uptake_levels},
      {"pv_capacity_kw", c.pv_capacity_kw},
      {"new_pv_share", c.new_pv_share},
      {"new_feed_in", c.new_feed_in},
      {"old_feed_in", c.old_feed_in},
      {"tariff_mix", c.tariff_mix},
      {"seed", c.seed},
      {"year", c.year},
      {"days", c.days},
      {"step_minutes", c.step_minutes},
      {"pool_size", c.pool_size},
      {"min_annual_kwh", c.min_annual_kwh},
      {"max_annual_kwh", c.max_annual_kwh},
      {"load_noise", c.load_noise},
      {"capacity_factor", c.capacity_factor},
      {"pmo_fee", c.pmo_fee},
      {"fixed_energy_price", c.tariffs.fixed_energy_price},
      {"tou_peak_price", c.tariffs.tou_peak_price},
      {"tou_offpeak_price", c.tariffs.tou_offpeak_price},
      {"peak_start_hour", c.tariffs.peak_start_hour},
      {"peak_end_hour", c.tariffs.peak_end_hour},
      {"network_charge", c.tariffs.network_charge},
      {"excise_rate", c.tariffs.excise_rate},
      {"vat_rate", c.tariffs.vat_rate},
      {"mechanisms", mechanism_names(c.mechanisms)},
  };
}

ScenarioConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("scenario config must be a JSON object");
  ScenarioConfig c;
  const auto known = config_to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("unknown scenario config key '" + key + "'");
  }
  auto read = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  read("communities", c.communities);
  read("members_per_community", c.members_per_community);
  read("uptake_levels", c.uptake_levels);
  read("pv_capacity_kw", c.pv_capacity_kw);
  read("new_pv_share", c.new_pv_share);
  read("new_feed_in", c.new_feed_in);
  read("old_feed_in", c.old_feed_in);
  read("tariff_mix", c.tariff_mix);
  read("seed", c.seed);
  read("year", c.year);
  read("days", c.days);
  read("step_minutes", c.step_minutes);
  read("pool_size", c.pool_size);
  read("min_annual_kwh", c.min_annual_kwh);
  read("max_annual_kwh", c.max_annual_kwh);
  read("load_noise", c.load_noise);
  read("capacity_factor", c.capacity_factor);
  read("pmo_fee", c.pmo_fee);
  read("fixed_energy_price", c.tariffs.fixed_energy_price);
  read("tou_peak_price", c.tariffs.tou_peak_price);
  read("tou_offpeak_price", c.tariffs.tou_offpeak_price);
  read("peak_start_hour", c.tariffs.peak_start_hour);
  read("peak_end_hour", c.tariffs.peak_end_hour);
  read("network_charge", c.tariffs.network_charge);
  read("excise_rate", c.tariffs.excise_rate);
  read("vat_rate", c.tariffs.vat_rate);
  if (j.contains("mechanisms")) {
    c.mechanisms.clear();
    for (const auto& name : j.at("mechanisms")) c.mechanisms.push_back(parse_mechanism(name.get<std::string>()));
  }
  c.validate();
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario config '" + path + "'");
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("scenario config '" + path + "': " + e.what());
  }
}

// -- random streams -----------------------------------------------------------

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t community, std::uint64_t member,
                          std::string_view purpose) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ community);
  h = splitmix64(h ^ member);
  return splitmix64(h ^ fnv1a(purpose));
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t community, std::uint64_t member,
                            std::string_view purpose) {
  return std::mt19937_64(derive_seed(seed, community, member, purpose));
}

// -- load profiles --------------------------------------------------------------

LoadProfileClass LoadProfileClass::draw(std::mt19937_64& s, double min_annual_kwh,
                                        double max_annual_kwh) {
  LoadProfileClass p;
  p.annual_kwh = uniform(s, min_annual_kwh, max_annual_kwh);
  p.base = uniform(s, 0.30, 0.60);
  p.morning_weight = uniform(s, 0.30, 0.80);
  p.morning_hour = uniform(s, 6.0, 8.5);
  p.evening_weight = uniform(s, 0.80, 1.60);
  p.evening_hour = uniform(s, 17.5, 20.5);
  p.daytime_weight = uniform(s, 0.0, 0.6);
  p.winter_amplitude = uniform(s, 0.15, 0.45);
  p.weekend_boost = uniform(s, 0.0, 0.3);
  return p;
}

EnergySeries synthetic_load_profile(std::mt19937_64& stream, const LoadProfileClass& p,
                                    const TimeAxis& axis, double noise) {
  using namespace std::chrono;
  const auto ref = reference_year(axis);
  const double step_hours = duration<double, std::ratio<3600>>(axis.step).count();
  std::vector<double> values(ref.count);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double day_sigma = 0.5 * noise;

  for (std::size_t d = 0; d < 365; ++d) {
    const auto day = floor<days>(ref.start) + days{d};
    const bool weekend = weekday{day}.c_encoding() == 0 || weekday{day}.c_encoding() == 6;
    const double season =
        1.0 + p.winter_amplitude * std::cos(2.0 * std::numbers::pi * (static_cast<double>(d) - 15.0) / 365.0);
    const double day_factor =
        noise > 0.0 ? std::exp(day_sigma * gauss(stream) - 0.5 * day_sigma * day_sigma) : 1.0;
    const double week_factor = weekend ? 1.0 + p.weekend_boost : 1.0;
    const double morning_hour = weekend ? p.morning_hour + 1.5 : p.morning_hour;
    const double daytime = weekend ? p.daytime_weight + p.weekend_boost : p.daytime_weight;

    for (std::size_t k = 0; k < ref.per_day; ++k) {
      const double hour = (static_cast<double>(k) + 0.5) * step_hours;
      double shape = p.base + p.morning_weight * gaussian_bump(hour, morning_hour, 1.0) +
                     p.evening_weight * gaussian_bump(hour, p.evening_hour, 1.6) +
                     daytime * gaussian_bump(hour, 13.5, 2.5);
      shape *= season * day_factor * week_factor;
      if (noise > 0.0) shape *= std::exp(noise * gauss(stream) - 0.5 * noise * noise);
      values[d * ref.per_day + k] = std::max(0.0, shape);
    }
  }
  const double total = std::accumulate(values.begin(), values.end(), 0.0);
  const double scale = total > 0.0 ? p.annual_kwh / total : 0.0;
  for (double& v : values) v *= scale;
  return sample_reference(values, ref, axis);
}

// -- PV ---------------------------------------------------------------------------

EnergySeries synthetic_pv_profile(std::mt19937_64& stream, double capacity_kw, const TimeAxis& axis,
                                  double capacity_factor) {
  using namespace std::chrono;
  if (!(capacity_kw > 0.0)) throw std::invalid_argument("PV capacity must be positive");
  const auto ref = reference_year(axis);
  const double step_hours = duration<double, std::ratio<3600>>(axis.step).count();
  const double deg = std::numbers::pi / 180.0;
  const double lat = kSiteLatitudeDeg * deg;
  std::vector<double> shape(ref.count, 0.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (std::size_t d = 0; d < 365; ++d) {
    const double season = std::sin(2.0 * std::numbers::pi * (static_cast<double>(d) - 80.0) / 365.0);
    const double decl = 23.44 * deg * season;
    const double clear_probability = 0.55 + 0.25 * season;
    const bool clear = uniform(stream, 0.0, 1.0) < clear_probability;
    const double clearness = clear ? uniform(stream, 0.85, 1.0) : uniform(stream, 0.15, 0.8);
    const double jitter = clear ? 0.03 : 0.15;
    for (std::size_t k = 0; k < ref.per_day; ++k) {
      const double hour = (static_cast<double>(k) + 0.5) * step_hours;
      const double hour_angle = (hour - kSolarNoonUtcHour) * 15.0 * deg;
      const double sin_elev =
          std::sin(lat) * std::sin(decl) + std::cos(lat) * std::cos(decl) * std::cos(hour_angle);
      // Draw unconditionally so the stream layout does not depend on daylight.
      const double cloud = std::clamp(clearness * (1.0 + jitter * gauss(stream)), 0.0, 1.0);
      if (sin_elev <= 0.0) continue;
      shape[d * ref.per_day + k] = std::pow(sin_elev, 1.15) * cloud;
    }
  }

  const double max_step = capacity_kw * step_hours;
  const double target = capacity_factor * capacity_kw * 365.0 * 24.0;
  const double raw = std::accumulate(shape.begin(), shape.end(), 0.0) * max_step;
  double gain = raw > 0.0 ? target / raw : 0.0;
  for (int iter = 0; iter < 60 && raw > 0.0; ++iter) {
    double produced = 0.0;
    for (double s : shape) produced += std::min(max_step, gain * s * max_step);
    if (std::abs(produced - target) <= 1e-9 * target) break;
    gain *= target / produced;
  }
  std::vector<double> values(ref.count);
  for (std::size_t k = 0; k < ref.count; ++k) values[k] = std::min(max_step, gain * shape[k] * max_step);
  return sample_reference(values, ref, axis);
}

// -- communities -------------------------------------------------------------------

std::size_t pv_owner_count(double uptake, std::size_t members) {
  return static_cast<std::size_t>(std::llround(uptake * static_cast<double>(members)));
}

GeneratedCommunity generate_community(const ScenarioConfig& config, std::size_t index, double uptake) {
  config.validate();
  if (!(uptake >= 0.0 && uptake <= 1.0)) throw std::invalid_argument("uptake must lie in [0, 1]");
  const std::size_t n = config.members_per_community;
  const TimeAxis axis = config.axis();
  GeneratedCommunity gen;
  Community& community = gen.community;
  community.axis = axis;

  // Partial Fisher-Yates: the first n picks do not depend on later ones.
  std::vector<std::size_t> pool(config.pool_size);
  std::iota(pool.begin(), pool.end(), 0);
  auto draw = make_stream(config.seed, index, kCommunityScope, "pool-draw");
  for (std::size_t k = 0; k < n; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
    std::swap(pool[k], pool[pick(draw)]);
  }
  gen.pool_indices.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto order_stream = make_stream(config.seed, index, kCommunityScope, "pv-order");
  std::shuffle(order.begin(), order.end(), order_stream);
  const std::size_t owners = pv_owner_count(uptake, n);
  const std::size_t new_owners = pv_owner_count(config.new_pv_share, owners);
  gen.pv_owners.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(owners));
  gen.new_pv.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(new_owners));
  const std::set<std::size_t> owner_set(gen.pv_owners.begin(), gen.pv_owners.end());
  const std::set<std::size_t> new_set(gen.new_pv.begin(), gen.new_pv.end());

  EnergySeries pv;
  if (owners > 0) {
    auto pv_stream = make_stream(config.seed, index, kCommunityScope, "pv");
    pv = synthetic_pv_profile(pv_stream, config.pv_capacity_kw, axis, config.capacity_factor);
  }

  const auto& td = config.tariffs;
  auto make_tariff = [&](bool tou, double feed_in) {
    TariffSchedule s;
    s.energy_price = tou ? PriceShape::time_of_use(td.tou_peak_price, td.tou_offpeak_price,
                                                   td.peak_start_hour, td.peak_end_hour)
                         : PriceShape::flat(td.fixed_energy_price);
    s.network_charge = PriceShape::flat(td.network_charge);
    s.excise_rate = td.excise_rate;
    s.vat_rate = td.vat_rate;
    s.export_tariff = feed_in;
    return s;
  };

  const int width = n > 100 ? 3 : 2;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t pool_index = gen.pool_indices[k];
    auto class_stream = make_stream(config.seed, kPoolScope, pool_index, "load-class");
    const auto profile = LoadProfileClass::draw(class_stream, config.min_annual_kwh, config.max_annual_kwh);
    auto noise_stream = make_stream(config.seed, kPoolScope, pool_index, "load-noise");
    const auto load = synthetic_load_profile(noise_stream, profile, axis, config.load_noise);
    gen.annual_load_kwh.push_back(load.total());

    auto tariff_stream = make_stream(config.seed, index, k, "tariff");
    const bool tou = std::bernoulli_distribution(config.tariff_mix)(tariff_stream);
    const bool owns_pv = owner_set.contains(k);
    std::string tariff_id = tou ? "tou" : "fixed";
    double feed_in = config.new_feed_in;
    if (owns_pv) {
      const bool is_new = new_set.contains(k);
      tariff_id += is_new ? "-fit-new" : "-fit-old";
      feed_in = is_new ? config.new_feed_in : config.old_feed_in;
    }
    community.tariffs.try_emplace(tariff_id, make_tariff(tou, feed_in));

    Member m;
    std::string id = std::to_string(k);
    m.id = "m" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(id.size()))), '0') + id;
    m.tariff_id = tariff_id;
    m.imports = EnergySeries(axis);
    m.exports = EnergySeries(axis);
    for (std::size_t t = 0; t < axis.count; ++t) {
      const double net = load.values[t] - (owns_pv ? pv.values[t] : 0.0);
      if (net > 0.0) {
        m.imports.values[t] = net;
      } else {
        m.exports.values[t] = -net;
      }
    }
    community.members.push_back(std::move(m));
  }
  return gen;
}

}  // namespace csc

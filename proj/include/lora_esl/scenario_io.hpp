#pragma once

// Scenario files: JSON in, JSON out. Every section is optional and falls back
// to the bundled defaults for the chosen policy; unknown keys are rejected
// with the dotted path of the offending field.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>

#include <json.hpp>

#include "lora_esl/errors.hpp"
#include "lora_esl/simulator.hpp"

namespace lora_esl {

using json = nlohmann::ordered_json;

/// Scenario file could not be read.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string join_path(const std::string& base, std::string_view key) {
  return base.empty() ? std::string(key) : base + "." + std::string(key);
}

class SectionReader {
 public:
  SectionReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<document>" : path_, "expected an object");
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      keys_.insert(key);
    }
  }

  std::string path(std::string_view key) const { return join_path(path_, key); }

  const json* find(std::string_view key) {
    keys_.erase(std::string(key));
    auto it = j_.find(std::string(key));
    return it == j_.end() ? nullptr : &*it;
  }

  void number(std::string_view key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(path(key), "expected a number");
      out = v->get<double>();
    }
  }

  void integer(std::string_view key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(path(key), "expected an integer");
      const auto x = v->get<long long>();
      if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
        throw ConfigError(path(key), "integer out of range");
      out = static_cast<int>(x);
    }
  }

  void boolean(std::string_view key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(path(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  template <typename E>
  void choice(std::string_view key, E& out, std::initializer_list<std::pair<std::string_view, E>> names) {
    if (const json* v = find(key)) {
      std::string allowed;
      if (v->is_string()) {
        const auto s = v->get<std::string>();
        for (const auto& [name, value] : names)
          if (name == s) {
            out = value;
            return;
          }
      }
      for (const auto& [name, value] : names) {
        (void)value;
        allowed += allowed.empty() ? "" : ", ";
        allowed += name;
      }
      throw ConfigError(path(key), "expected one of: " + allowed);
    }
  }

  /// Rejects whatever keys were never looked up.
  void finish() const {
    if (!keys_.empty()) throw ConfigError(path(*keys_.begin()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> keys_;
};

inline constexpr std::string_view layout_name(LayoutKind k) {
  return k == LayoutKind::KMeans ? "kmeans" : k == LayoutKind::Grid ? "grid" : "explicit";
}

inline void read_layout(const json& j, const std::string& at, GatewayLayout& layout) {
  SectionReader r(j, at);
  r.choice<LayoutKind>("kind", layout.kind,
                      {{"kmeans", LayoutKind::KMeans}, {"grid", LayoutKind::Grid}, {"explicit", LayoutKind::Explicit}});
  r.number("venue_radius_km", layout.venue_radius_km);
  r.integer("trial_points", layout.trial_points);
  if (const json* sites = r.find("sites")) {
    if (!sites->is_array()) throw ConfigError(r.path("sites"), "expected an array");
    layout.sites.clear();
    for (std::size_t i = 0; i < sites->size(); ++i) {
      SectionReader sr((*sites)[i], r.path("sites") + "[" + std::to_string(i) + "]");
      GatewaySite site;
      site.id = static_cast<int>(i);
      sr.integer("id", site.id);
      sr.number("x_km", site.position.x);
      sr.number("y_km", site.position.y);
      sr.finish();
      layout.sites.push_back(site);
    }
  }
  r.finish();
}

inline void read_deployment(const json& j, Scenario& s) {
  SectionReader r(j, "deployment");
  r.integer("gw_count", s.gw_count);
  if (const json* v = r.find("gw_layout")) read_layout(*v, r.path("gw_layout"), s.layout);
  if (const json* v = r.find("ring_radii_km")) {
    if (!v->is_array() || v->empty()) throw ConfigError(r.path("ring_radii_km"), "expected a non-empty array");
    s.ring_radii_km.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number())
        throw ConfigError(r.path("ring_radii_km") + "[" + std::to_string(i) + "]", "expected a number");
      s.ring_radii_km.push_back((*v)[i].get<double>());
    }
  }
  if (const json* v = r.find("allocation")) {
    SectionReader a(*v, r.path("allocation"));
    a.choice<AllocationKind>("kind", s.allocation.kind,
                             {{"arithmetic", AllocationKind::Arithmetic}, {"fibonacci", AllocationKind::Fibonacci}});
    a.integer("first_term", s.allocation.first_term);
    a.integer("common_diff", s.allocation.common_diff);
    a.boolean("fibonacci_ascending", s.allocation.fibonacci_ascending);
    a.finish();
  }
  r.finish();
}

inline void read_radio(const json& j, Scenario& s) {
  SectionReader r(j, "radio");
  r.number("bw_khz", s.radio.bw_khz);
  if (const json* v = r.find("sf_range")) {
    if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number_integer() || !(*v)[1].is_number_integer())
      throw ConfigError(r.path("sf_range"), "expected [min_sf, max_sf]");
    s.radio.sf_min = (*v)[0].get<int>();
    s.radio.sf_max = (*v)[1].get<int>();
  }
  r.number("tp_dbm", s.radio.tp_dbm);
  r.boolean("tp_schedule", s.radio.tp_schedule);
  r.number("cf_mhz", s.radio.cf_mhz);
  r.integer("payload_bytes", s.radio.payload_bytes);
  r.integer("preamble_symbols", s.radio.preamble_symbols);
  r.choice<int>("coding_rate", s.radio.cr_denominator_n, {{"4/5", 1}, {"4/6", 2}, {"4/7", 3}, {"4/8", 4}});
  r.finish();
}

inline void read_pathloss(const json& j, Scenario& s) {
  SectionReader r(j, "pathloss");
  r.number("ref_loss_db", s.pathloss.ref_loss_db);
  r.number("ref_distance_km", s.pathloss.ref_distance_km);
  r.number("exponent", s.pathloss.exponent);
  r.number("sigma_db", s.pathloss.shadow_sigma_db);
  if (const json* v = r.find("obstacles")) {
    if (!v->is_array()) throw ConfigError(r.path("obstacles"), "expected an array");
    s.pathloss.obstacle_losses_db.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& o = (*v)[i];
      const std::string at = r.path("obstacles") + "[" + std::to_string(i) + "]";
      Obstacle kind{};
      if (o.is_number()) {
        s.pathloss.obstacle_losses_db.push_back(o.get<double>());
      } else if (o.is_string() && parse_obstacle(o.get<std::string>(), kind)) {
        s.pathloss.obstacle_losses_db.push_back(attenuation_db(kind));
      } else {
        throw ConfigError(at, "expected a loss in dB or one of: concrete_wall, glass, wooden_door, soft_partition");
      }
    }
  }
  r.finish();
}

inline void read_link(const json& j, Scenario& s) {
  SectionReader r(j, "link");
  r.number("g_tx_dbi", s.link.gains.g_tx_dbi);
  r.number("g_rx_dbi", s.link.gains.g_rx_dbi);
  r.number("noise_figure_db", s.link.noise_figure_db);
  r.boolean("per_packet_fading", s.link.per_packet_fading);
  r.number("min_link_distance_km", s.link.min_link_distance_km);
  if (const json* v = r.find("snr_floors_db")) {
    SectionReader f(*v, r.path("snr_floors_db"));
    auto floors = s.link.floors.values();
    for (int sf = kMinSf; sf <= kMaxSf; ++sf) f.number(std::to_string(sf), floors[static_cast<std::size_t>(sf - kMinSf)]);
    f.finish();
    try {
      s.link.floors = SnrFloorTable(floors);
    } catch (const DomainError& e) {
      throw ConfigError(r.path("snr_floors_db"), e.what());
    }
  }
  r.finish();
}

inline void read_policy(const json& j, Scenario& s) {
  SectionReader r(j, "policy");
  r.find("kind");  // consumed up front by parse_scenario
  if (const json* v = r.find("threshold")) {
    if (v->is_null()) {
      s.policy.threshold.reset();
    } else if (v->is_number()) {
      s.policy.threshold = v->get<double>();
    } else {
      throw ConfigError(r.path("threshold"), "expected a number or null");
    }
  }
  r.choice<SfStepDirection>("sf_step_direction", s.policy.sf_step_direction,
                            {{"robust", SfStepDirection::Robust}, {"literal", SfStepDirection::Literal}});
  r.integer("epochs", s.policy.epochs);
  r.choice<AdrGranularity>("granularity", s.policy.granularity,
                           {{"cluster", AdrGranularity::Cluster}, {"device", AdrGranularity::Device}});
  r.choice<DeviceClass>("device_class", s.policy.device_class, {{"A", DeviceClass::ClassA}, {"B", DeviceClass::ClassB}});
  r.finish();
}

inline void read_channel(const json& j, Scenario& s) {
  SectionReader r(j, "channel");
  if (const json* v = r.find("capture_db")) {
    if (v->is_number()) {
      s.channel.capture_db = v->get<double>();
    } else if (v->is_string() && v->get<std::string>() == "off") {
      s.channel.capture_db = std::numeric_limits<double>::infinity();
    } else {
      throw ConfigError(r.path("capture_db"), "expected a number or \"off\"");
    }
  }
  r.number("sensitivity_dbm", s.channel.sensitivity_dbm);
  r.number("cosf_penalty_db", s.channel.cosf_penalty_db);
  r.choice<Delivery>("delivery", s.channel.delivery,
                     {{"any_gateway", Delivery::AnyGateway}, {"serving_gateway", Delivery::ServingGateway}});
  r.finish();
}

inline void read_traffic(const json& j, Scenario& s) {
  SectionReader r(j, "traffic");
  r.number("mean_interarrival_s", s.traffic.mean_interarrival_s);
  r.number("horizon_s", s.traffic.horizon_s);
  r.finish();
}

inline std::string coding_rate_name(int n) { return "4/" + std::to_string(4 + n); }

}  // namespace detail

inline Scenario scenario_from_json(const json& doc) {
  detail::SectionReader root(doc, "");

  PolicyKind kind = PolicyKind::Rssi;
  if (const json* p = root.find("policy")) {
    if (!p->is_object()) throw ConfigError("policy", "expected an object");
    detail::SectionReader pr(*p, "policy");
    pr.choice<PolicyKind>("kind", kind, {{"snr", PolicyKind::Snr}, {"rssi", PolicyKind::Rssi}});
  }
  Scenario s = default_scenario(kind);
  s.policy.kind = kind;

  if (const json* v = root.find("deployment")) detail::read_deployment(*v, s);
  if (const json* v = root.find("radio")) detail::read_radio(*v, s);
  if (const json* v = root.find("pathloss")) detail::read_pathloss(*v, s);
  if (const json* v = root.find("link")) detail::read_link(*v, s);
  if (const json* v = root.find("policy")) detail::read_policy(*v, s);
  if (const json* v = root.find("channel")) detail::read_channel(*v, s);
  if (const json* v = root.find("traffic")) detail::read_traffic(*v, s);
  if (const json* v = root.find("seed")) {
    if (!v->is_number_unsigned()) throw ConfigError("seed", "expected a non-negative integer");
    s.seed = v->get<std::uint64_t>();
  }
  root.finish();

  s.layout.count = s.gw_count;
  s.traffic.seed = s.seed;
  s.validate();
  return s;
}

/// Parses scenario text; syntax errors carry the line and column.
inline Scenario parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("<document>", "syntax error at line " + std::to_string(line) + ", column " +
                                        std::to_string(col));
  }
  return scenario_from_json(doc);
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

inline json scenario_to_json(const Scenario& s) {
  json doc;

  json layout;
  layout["kind"] = detail::layout_name(s.layout.kind);
  layout["venue_radius_km"] = s.layout.venue_radius_km;
  layout["trial_points"] = s.layout.trial_points;
  if (!s.layout.sites.empty()) {
    json sites = json::array();
    for (const auto& site : s.layout.sites)
      sites.push_back({{"id", site.id}, {"x_km", site.position.x}, {"y_km", site.position.y}});
    layout["sites"] = sites;
  }
  doc["deployment"] = {
      {"gw_count", s.gw_count},
      {"gw_layout", layout},
      {"ring_radii_km", s.ring_radii_km},
      {"allocation",
       {{"kind", to_string(s.allocation.kind)},
        {"first_term", s.allocation.first_term},
        {"common_diff", s.allocation.common_diff},
        {"fibonacci_ascending", s.allocation.fibonacci_ascending}}},
  };

  doc["radio"] = {
      {"bw_khz", s.radio.bw_khz},
      {"sf_range", {s.radio.sf_min, s.radio.sf_max}},
      {"tp_dbm", s.radio.tp_dbm},
      {"tp_schedule", s.radio.tp_schedule},
      {"cf_mhz", s.radio.cf_mhz},
      {"payload_bytes", s.radio.payload_bytes},
      {"preamble_symbols", s.radio.preamble_symbols},
      {"coding_rate", detail::coding_rate_name(s.radio.cr_denominator_n)},
  };

  json obstacles = json::array();
  for (double loss : s.pathloss.obstacle_losses_db) {
    json entry = loss;
    for (auto o : {Obstacle::ConcreteWall, Obstacle::Glass2cm, Obstacle::WoodenDoor, Obstacle::SoftPartition})
      if (attenuation_db(o) == loss) entry = std::string(obstacle_name(o));
    obstacles.push_back(entry);
  }
  doc["pathloss"] = {
      {"ref_loss_db", s.pathloss.ref_loss_db},
      {"ref_distance_km", s.pathloss.ref_distance_km},
      {"exponent", s.pathloss.exponent},
      {"sigma_db", s.pathloss.shadow_sigma_db},
      {"obstacles", obstacles},
  };

  json floors;
  for (int sf = kMinSf; sf <= kMaxSf; ++sf) floors[std::to_string(sf)] = s.link.floors.at(sf);
  doc["link"] = {
      {"g_tx_dbi", s.link.gains.g_tx_dbi},
      {"g_rx_dbi", s.link.gains.g_rx_dbi},
      {"noise_figure_db", s.link.noise_figure_db},
      {"snr_floors_db", floors},
      {"per_packet_fading", s.link.per_packet_fading},
      {"min_link_distance_km", s.link.min_link_distance_km},
  };

  json policy;
  policy["kind"] = to_string(s.policy.kind);
  policy["threshold"] = s.policy.threshold ? json(*s.policy.threshold) : json(nullptr);
  policy["sf_step_direction"] = s.policy.sf_step_direction == SfStepDirection::Robust ? "robust" : "literal";
  policy["epochs"] = s.policy.epochs;
  policy["granularity"] = s.policy.granularity == AdrGranularity::Cluster ? "cluster" : "device";
  policy["device_class"] = s.policy.device_class == DeviceClass::ClassA ? "A" : "B";
  doc["policy"] = policy;

  doc["channel"] = {
      {"capture_db", std::isinf(s.channel.capture_db) ? json("off") : json(s.channel.capture_db)},
      {"sensitivity_dbm", s.channel.sensitivity_dbm},
      {"cosf_penalty_db", s.channel.cosf_penalty_db},
      {"delivery", to_string(s.channel.delivery)},
  };

  doc["traffic"] = {
      {"mean_interarrival_s", s.traffic.mean_interarrival_s},
      {"horizon_s", s.traffic.horizon_s},
  };
  doc["seed"] = s.seed;
  return doc;
}

inline std::string serialize_scenario(const Scenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

}  // namespace lora_esl

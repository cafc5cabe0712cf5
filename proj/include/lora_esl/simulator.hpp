#pragma once

// Scenario engine: builds a deployment, freezes per-link losses, converges
// the ADR policy over a fixed number of measure/step epochs, then plays a
// day of pure-ALOHA traffic through the reception model and aggregates
// per-ring metrics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lora_esl/adr.hpp"
#include "lora_esl/channel.hpp"
#include "lora_esl/deployment.hpp"
#include "lora_esl/errors.hpp"
#include "lora_esl/link_budget.hpp"
#include "lora_esl/rng.hpp"

namespace lora_esl {

enum class AllocationKind { Arithmetic, Fibonacci };
enum class PolicyKind { Snr, Rssi };
enum class AdrGranularity { Cluster, Device };

inline constexpr std::string_view to_string(PolicyKind p) noexcept { return p == PolicyKind::Snr ? "snr" : "rssi"; }
inline constexpr std::string_view to_string(AllocationKind a) noexcept {
  return a == AllocationKind::Arithmetic ? "arithmetic" : "fibonacci";
}
inline constexpr std::string_view to_string(DownlinkKind k) noexcept {
  return k == DownlinkKind::ConfigurationFrame ? "configuration_frame" : "beacon";
}

struct AllocationConfig {
  AllocationKind kind = AllocationKind::Arithmetic;
  int first_term = kDefaultFirstTerm;
  int common_diff = kDefaultCommonDiff;
  bool fibonacci_ascending = true;

  bool operator==(const AllocationConfig&) const = default;
};

struct RadioSettings {
  double bw_khz = 125.0;
  int sf_min = kMinSf;
  int sf_max = kMaxSf;
  double tp_dbm = 14.0;
  bool tp_schedule = false;  // per-ring 14 + 3*ring dBm starting point
  double cf_mhz = kEu868CarrierMhz;
  int payload_bytes = 16;
  int preamble_symbols = 8;
  int cr_denominator_n = 1;

  bool operator==(const RadioSettings&) const = default;
};

inline constexpr double kDefaultMinLinkDistanceKm = 0.1;

struct LinkSettings {
  AntennaGains gains;
  double noise_figure_db = kDefaultNoiseFigureDb;
  SnrFloorTable floors;
  bool per_packet_fading = false;  // redraw shadowing per frame instead of freezing it per link
  double min_link_distance_km = kDefaultMinLinkDistanceKm;  // log-distance line is extended down to here

  bool operator==(const LinkSettings&) const = default;
};

struct PolicyConfig {
  PolicyKind kind = PolicyKind::Rssi;
  std::optional<double> threshold;  // margin dB (snr) or receiver dBm (rssi)
  SfStepDirection sf_step_direction = SfStepDirection::Robust;
  int epochs = 10;
  AdrGranularity granularity = AdrGranularity::Cluster;
  DeviceClass device_class = DeviceClass::ClassA;

  double effective_threshold() const {
    if (threshold) return *threshold;
    return kind == PolicyKind::Snr ? 0.0 : kDefaultSensitivityDbm;
  }

  bool operator==(const PolicyConfig&) const = default;
};

/// Which gateways may deliver a device's frame to the network server.
enum class Delivery {
  AnyGateway,      // any gateway that decodes it; the network server drops duplicates
  ServingGateway,  // only the device's best mean-link gateway
};

inline constexpr std::string_view to_string(Delivery d) noexcept {
  return d == Delivery::ServingGateway ? "serving_gateway" : "any_gateway";
}

struct ChannelConfig {
  double capture_db = kDefaultCaptureThresholdDb;
  double sensitivity_dbm = kDefaultSensitivityDbm;
  double cosf_penalty_db = 0.0;
  Delivery delivery = Delivery::AnyGateway;

  bool operator==(const ChannelConfig&) const = default;
};

struct Scenario {
  int gw_count = 1;
  GatewayLayout layout;  // layout.count is overwritten by gw_count
  std::vector<double> ring_radii_km = default_ring_radii_km();
  AllocationConfig allocation;
  RadioSettings radio;
  PathLossParams pathloss;
  LinkSettings link;
  PolicyConfig policy;
  ChannelConfig channel;
  TrafficModel traffic;  // traffic.seed is overwritten by seed
  std::uint64_t seed = 1;

  void validate() const;

  /// Per-ring device counts for each gateway.
  RingAllocation ring_allocation() const;

  bool operator==(const Scenario&) const = default;
};

// Defaults ---------------------------------------------------------------
//
// Mean loss is 127.84 dB at 0.6 km from a gateway (exponent 4.31) with 12 dB
// log-normal shadowing frozen per link, the cluttered end of indoor
// measurements. Links closer than 0.1 km are evaluated at 0.1 km. Gateways
// sit inside a 1.8 km venue.

inline constexpr double kDefaultRefDistanceKm = 0.6;
inline constexpr double kDefaultShadowSigmaDb = 12.0;
inline constexpr double kDefaultVenueRadiusKm = 1.8;
inline constexpr double kDefaultMeanInterarrivalS = 600.0;
inline constexpr double kDefaultHorizonS = 86400.0;

inline PathLossParams default_path_loss() {
  PathLossParams p;
  p.ref_loss_db = kReferencePathLossDb;
  p.ref_distance_km = kDefaultRefDistanceKm;
  p.exponent = kIndoorPathLossExponent;
  p.shadow_sigma_db = kDefaultShadowSigmaDb;
  return p;
}

inline Scenario default_scenario(PolicyKind policy, int gw_count = 1) {
  Scenario s;
  s.gw_count = gw_count;
  s.layout.count = gw_count;
  s.layout.venue_radius_km = kDefaultVenueRadiusKm;
  s.pathloss = default_path_loss();
  s.policy.kind = policy;
  s.radio.tp_schedule = policy == PolicyKind::Rssi;
  s.traffic.mean_interarrival_s = kDefaultMeanInterarrivalS;
  s.traffic.horizon_s = kDefaultHorizonS;
  return s;
}

inline void Scenario::validate() const {
  if (gw_count < 1) throw ConfigError("deployment.gw_count", "must be >= 1");
  if (layout.kind == LayoutKind::Explicit && layout.sites.size() != static_cast<std::size_t>(gw_count))
    throw ConfigError("deployment.gw_layout.sites", "site count must equal gw_count");
  if (!(layout.venue_radius_km > 0.0) || !std::isfinite(layout.venue_radius_km))
    throw ConfigError("deployment.gw_layout.venue_radius_km", "must be > 0");
  RingPlan{ring_radii_km, std::vector<int>(ring_radii_km.size(), 0)}.validate();
  if (allocation.first_term <= 0) throw ConfigError("deployment.allocation.first_term", "must be > 0");
  if (allocation.common_diff < 0) throw ConfigError("deployment.allocation.common_diff", "must be >= 0");

  if (!valid_bandwidth_khz(radio.bw_khz)) throw ConfigError("radio.bw_khz", "must be 125, 250 or 500");
  if (!valid_sf(radio.sf_min) || !valid_sf(radio.sf_max) || radio.sf_min > radio.sf_max)
    throw ConfigError("radio.sf_range", "must be an ordered pair within [7, 12]");
  if (radio.payload_bytes < 0 || radio.payload_bytes > 255) throw ConfigError("radio.payload_bytes", "must be 0..255");
  if (radio.cr_denominator_n < 1 || radio.cr_denominator_n > 4) throw ConfigError("radio.cr", "n must be 1..4");
  if (radio.preamble_symbols < 6) throw ConfigError("radio.preamble_symbols", "must be >= 6");
  if (!std::isfinite(radio.cf_mhz) || radio.cf_mhz <= 0.0) throw ConfigError("radio.cf_mhz", "must be > 0");
  if (policy.kind == PolicyKind::Snr) {
    if (radio.tp_schedule) throw ConfigError("radio.tp_schedule", "the SNR policy runs at a fixed 14 dBm");
    if (radio.tp_dbm != kSnrPolicyTpDbm) throw ConfigError("radio.tp_dbm", "the SNR policy runs at 14 dBm");
  } else {
    if (radio.tp_schedule && ring_radii_km.size() > 6)
      throw ConfigError("radio.tp_schedule", "schedule covers at most six rings below the 29 dBm ceiling");
    if (!radio.tp_schedule && (radio.tp_dbm < kMinTpDbm || radio.tp_dbm > kMaxTpDbm ||
                               std::fmod(radio.tp_dbm - kMinTpDbm, kTpStepDb) != 0.0))
      throw ConfigError("radio.tp_dbm", "RSSI policy power must be on the 14..29 dBm ladder");
  }

  try {
    pathloss.validate();
  } catch (const DomainError& e) {
    throw ConfigError("pathloss", e.what());
  }
  try {
    link.floors.validate();
  } catch (const DomainError& e) {
    throw ConfigError("link.snr_floors_db", e.what());
  }
  if (!std::isfinite(link.gains.g_tx_dbi) || !std::isfinite(link.gains.g_rx_dbi))
    throw ConfigError("link", "antenna gains must be finite");
  if (!std::isfinite(link.noise_figure_db)) throw ConfigError("link.noise_figure_db", "must be finite");
  if (!(link.min_link_distance_km > 0.0) || !std::isfinite(link.min_link_distance_km))
    throw ConfigError("link.min_link_distance_km", "must be > 0");
  if (policy.epochs < 0) throw ConfigError("policy.epochs", "must be >= 0");
  if (policy.threshold && !std::isfinite(*policy.threshold)) throw ConfigError("policy.threshold", "must be finite");
  if (std::isnan(channel.capture_db) || channel.capture_db < 0.0)
    throw ConfigError("channel.capture_db", "must be >= 0");
  if (!std::isfinite(channel.sensitivity_dbm)) throw ConfigError("channel.sensitivity_dbm", "must be finite");
  if (!(channel.cosf_penalty_db >= 0.0) || !std::isfinite(channel.cosf_penalty_db))
    throw ConfigError("channel.cosf_penalty_db", "must be >= 0");
  traffic.validate();
}

inline RingAllocation Scenario::ring_allocation() const {
  const int rings = static_cast<int>(ring_radii_km.size());
  if (allocation.kind == AllocationKind::Arithmetic)
    return arithmetic_allocation(allocation.first_term, allocation.common_diff, rings, gw_count);
  int total = 0;
  for (int c : arithmetic_ring_totals(allocation.first_term, allocation.common_diff, rings)) total += c;
  RingAllocation out;
  for (int g = 0; g < gw_count; ++g) {
    const int share = total / gw_count + (g < total % gw_count ? 1 : 0);
    out.per_gw.push_back(fibonacci_allocation(share, rings, allocation.fibonacci_ascending));
  }
  return out;
}

// Report -----------------------------------------------------------------

struct RingMetrics {
  int ring = 0;
  double radius_km = 0.0;
  int devices = 0;
  long scheduled = 0;
  long decoded = 0;
  std::array<long, kVerdictCount> by_verdict{};
  double mean_rssi_dbm = 0.0;
  double mean_snr_db = 0.0;
  double mean_rp_dbw = 0.0;
  double rp_above_fraction = 0.0;
  double mean_tp_dbm = 0.0;
  double mean_sf = 0.0;

  long lost() const noexcept { return scheduled - decoded; }
};

struct TraceEntry {
  int epoch = 0;
  int gw = 0;
  int ring = 0;
  int device = -1;  // -1 for a cluster-level step
  double measured = 0.0;
  AdrAction action = AdrAction::SendNewPacket;
  int sf = kMinSf;
  double tp_dbm = 14.0;
  std::optional<double> margin_db;
};

struct DeviceRecord {
  int id = 0;
  int gw = 0;
  int ring = 0;
  Point position;
  int sf = kMinSf;
  double tp_dbm = 14.0;
  int best_gw = 0;
  double rssi_dbm = 0.0;  // mean-link RSSI at the best gateway
  double rp_dbw = 0.0;
  long frames = 0;
  long decoded = 0;
};

struct MetricsReport {
  int gw_count = 0;
  PolicyKind policy = PolicyKind::Rssi;
  AllocationKind allocation = AllocationKind::Arithmetic;
  std::uint64_t seed = 0;
  DownlinkKind bootstrap = DownlinkKind::ConfigurationFrame;
  double rp_threshold_dbw = 0.0;

  long scheduled = 0;
  long decoded = 0;
  long events = 0;
  long rp_above = 0;
  std::array<long, kVerdictCount> by_verdict{};
  std::array<long, 6> sf_scheduled{};
  std::array<long, 6> sf_decoded{};
  std::vector<RingMetrics> rings;
  std::vector<std::pair<int, long>> rp_histogram;  // (RP in 0.01 dBW, frames)
  std::vector<TraceEntry> adr_trace;
  std::vector<GatewaySite> gateways;
  std::vector<DeviceRecord> devices;

  double total_plr() const noexcept {
    return scheduled == 0 ? 0.0 : static_cast<double>(scheduled - decoded) / static_cast<double>(scheduled);
  }
  double rp_above_fraction() const noexcept {
    return scheduled == 0 ? 0.0 : static_cast<double>(rp_above) / static_cast<double>(scheduled);
  }
};

/// Packet loss ratio of one ring; empty when nothing was scheduled there.
inline std::optional<double> compute_plr(const MetricsReport& report, std::size_t ring_index) {
  if (ring_index >= report.rings.size()) throw DomainError("compute_plr: no such ring");
  const auto& r = report.rings[ring_index];
  if (r.scheduled == 0) return std::nullopt;
  return static_cast<double>(r.lost()) / static_cast<double>(r.scheduled);
}

/// Share of frames whose received power exceeds `threshold_rp_dbw`. Uses the
/// 0.01 dB histogram, so thresholds resolve to that grid.
inline std::optional<double> rp_threshold_fraction(const MetricsReport& report, double threshold_rp_dbw) {
  long total = 0;
  long above = 0;
  for (const auto& [centi, n] : report.rp_histogram) {
    total += n;
    if (centi / 100.0 > threshold_rp_dbw) above += n;
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(above) / static_cast<double>(total);
}

// Engine -----------------------------------------------------------------

namespace detail {

inline LinkTable build_link_table(const Deployment& dep, const Scenario& s) {
  LinkTable links(dep.devices.size(), dep.gateways.size());
  Rng rng = make_rng(s.seed, SeedStream::Shadowing);
  const double sigma = s.link.per_packet_fading ? 0.0 : s.pathloss.shadow_sigma_db;
  std::normal_distribution<double> shadow(0.0, std::max(sigma, 1e-12));
  const double floor_km = s.link.min_link_distance_km;
  PathLossParams model = s.pathloss;
  if (floor_km < model.ref_distance_km) {
    model = PathLossParams::anchored(s.pathloss.ref_loss_db, s.pathloss.ref_distance_km, floor_km,
                                     s.pathloss.exponent, s.pathloss.shadow_sigma_db);
    model.obstacle_losses_db = s.pathloss.obstacle_losses_db;
  }
  for (std::size_t d = 0; d < dep.devices.size(); ++d) {
    for (std::size_t g = 0; g < dep.gateways.size(); ++g) {
      const double dist = std::max(distance_km(dep.devices[d].position, dep.gateways[g].position),
                                   std::max(floor_km, model.ref_distance_km));
      const double x = sigma > 0.0 ? shadow(rng) : 0.0;
      links.loss_db(d, g) = path_loss(dist, model, x);
    }
  }
  return links;
}

struct Cluster {
  int gw;
  int ring;
  std::vector<std::size_t> members;
};

inline double mean_of(const std::vector<std::size_t>& idx, const std::vector<double>& v) {
  double sum = 0.0;
  for (std::size_t i : idx) sum += v[i];
  return sum / static_cast<double>(idx.size());
}

}  // namespace detail

inline MetricsReport run_scenario(const Scenario& input) {
  Scenario s = input;
  s.layout.count = s.gw_count;
  s.traffic.seed = s.seed;
  s.validate();

  const auto alloc = s.ring_allocation();
  const Deployment dep = generate_deployment(s.ring_radii_km, alloc.per_gw, s.layout, s.seed);
  const LinkTable links = detail::build_link_table(dep, s);
  const std::size_t n_dev = dep.devices.size();
  const int rings = static_cast<int>(dep.ring_count());
  const double g_tx = s.link.gains.g_tx_dbi;
  const double noise = noise_floor(s.radio.bw_khz * 1e3, s.link.noise_figure_db);

  std::vector<std::size_t> best_gw(n_dev);
  for (std::size_t d = 0; d < n_dev; ++d) best_gw[d] = links.best_gateway(d);

  std::vector<RadioConfig> radio(n_dev);
  for (std::size_t d = 0; d < n_dev; ++d) {
    RadioConfig& c = radio[d];
    c.carrier_freq_mhz = s.radio.cf_mhz;
    c.bandwidth_khz = s.radio.bw_khz;
    c.sf = s.radio.sf_min;
    c.cr_denominator_n = s.radio.cr_denominator_n;
    c.payload_bytes = s.radio.payload_bytes;
    c.preamble_symbols = s.radio.preamble_symbols;
    c.tp_dbm = s.radio.tp_schedule ? tp_schedule(dep.devices[d].ring, rings) : s.radio.tp_dbm;
  }

  MetricsReport report;
  report.gw_count = s.gw_count;
  report.policy = s.policy.kind;
  report.allocation = s.allocation.kind;
  report.seed = s.seed;
  report.bootstrap = bootstrap_session(s.policy.device_class);
  report.rp_threshold_dbw = received_power_dbw(s.channel.sensitivity_dbm, s.link.gains.g_rx_dbi);
  report.gateways = dep.gateways;

  // ADR convergence: each epoch measures the mean-link RSSI/SNR at the best
  // gateway and takes one policy step per cluster (or per device).
  std::vector<detail::Cluster> clusters;
  if (s.policy.granularity == AdrGranularity::Cluster) {
    std::map<std::pair<int, int>, std::size_t> index;
    for (int g = 0; g < s.gw_count; ++g)
      for (int r = 0; r < rings; ++r) {
        index[{g, r}] = clusters.size();
        clusters.push_back({g, r, {}});
      }
    for (std::size_t d = 0; d < n_dev; ++d)
      clusters[index[{dep.devices[d].home_gw, dep.devices[d].ring}]].members.push_back(d);
    std::erase_if(clusters, [](const detail::Cluster& c) { return c.members.empty(); });
  } else {
    for (std::size_t d = 0; d < n_dev; ++d) clusters.push_back({dep.devices[d].home_gw, dep.devices[d].ring, {d}});
  }

  const double threshold = s.policy.effective_threshold();
  std::vector<SnrAdrState> snr_state(clusters.size());
  std::vector<RssiAdrState> rssi_state(clusters.size());
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const auto& first = radio[clusters[c].members.front()];
    snr_state[c] = SnrAdrState{first.sf, kSnrPolicyTpDbm, std::nullopt, 0, threshold};
    rssi_state[c] = RssiAdrState{first.tp_dbm, threshold};
  }

  std::vector<double> measure(n_dev);
  for (int epoch = 0; epoch < s.policy.epochs; ++epoch) {
    for (std::size_t d = 0; d < n_dev; ++d) {
      const double r = rssi(radio[d].tp_dbm, g_tx, links.loss_db(d, best_gw[d]));
      measure[d] = s.policy.kind == PolicyKind::Rssi ? r : snr_measured(r, noise);
    }
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      const auto& cl = clusters[c];
      TraceEntry t;
      t.epoch = epoch;
      t.gw = cl.gw;
      t.ring = cl.ring;
      t.device = s.policy.granularity == AdrGranularity::Device ? dep.devices[cl.members.front()].id : -1;
      t.measured = detail::mean_of(cl.members, measure);
      if (s.policy.kind == PolicyKind::Snr) {
        auto dec = snr_adr_step(snr_state[c], t.measured, s.link.floors, s.policy.sf_step_direction);
        dec.state.sf = std::clamp(dec.state.sf, s.radio.sf_min, s.radio.sf_max);
        snr_state[c] = dec.state;
        t.action = dec.action;
        t.margin_db = dec.margin_db;
        for (std::size_t d : cl.members) radio[d].sf = dec.state.sf;
        t.sf = dec.state.sf;
        t.tp_dbm = dec.state.tp_dbm;
      } else {
        const auto dec = rssi_adr_step(rssi_state[c], t.measured);
        rssi_state[c] = dec.state;
        t.action = dec.action;
        for (std::size_t d : cl.members) radio[d].tp_dbm = dec.state.tp_dbm;
        t.sf = radio[cl.members.front()].sf;
        t.tp_dbm = dec.state.tp_dbm;
      }
      report.adr_trace.push_back(t);
    }
  }

  // Traffic and reception.
  UplinkOptions opts;
  opts.g_tx_dbi = g_tx;
  opts.reception_floor_dbm = s.channel.sensitivity_dbm;
  opts.per_packet_fading_sigma_db = s.link.per_packet_fading ? s.pathloss.shadow_sigma_db : 0.0;
  auto events = schedule_uplinks(dep, s.traffic, radio, links, opts);
  events = co_sf_interference_filter(std::move(events), s.channel.cosf_penalty_db);
  report.events = static_cast<long>(events.size());

  std::vector<Verdict> verdict(events.size(), Verdict::LostBelowSensitivity);
  std::vector<TransmissionEvent> scratch;
  for (const auto& group : find_overlaps(events)) {
    scratch.clear();
    for (std::size_t i : group) scratch.push_back(events[i]);
    const auto outcomes = resolve_reception(scratch, s.channel.capture_db, s.channel.sensitivity_dbm);
    for (std::size_t k = 0; k < group.size(); ++k) {
      Verdict v = outcomes[k].verdict;
      const auto& e = events[group[k]];
      if (v == Verdict::Decoded) {
        const double snr = snr_measured(e.rx_power_dbm, noise) - e.cross_sf_penalty_db;
        if (margin(snr, e.sf, s.link.floors) < 0.0) v = Verdict::LostCorrupt;
      }
      verdict[group[k]] = v;
    }
  }

  std::vector<std::size_t> device_index(n_dev);
  for (std::size_t d = 0; d < n_dev; ++d) device_index[static_cast<std::size_t>(dep.devices[d].id)] = d;

  // Frame verdicts: delivered if a gateway allowed to deliver decoded it,
  // otherwise the serving (or, with any-gateway delivery, the strongest)
  // gateway's verdict names the cause.
  struct FrameAgg {
    int device = -1;
    int sf = kMinSf;
    double best_rx = -1e300;
    Verdict strongest = Verdict::LostBelowSensitivity;
    Verdict serving = Verdict::LostBelowSensitivity;
    bool decoded = false;
  };
  std::vector<FrameAgg> frames;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.frame_id >= frames.size()) frames.resize(e.frame_id + 1);
    auto& f = frames[e.frame_id];
    f.device = e.device_id;
    f.sf = e.sf;
    const bool serving = static_cast<std::size_t>(e.gw_id) == best_gw[device_index[static_cast<std::size_t>(e.device_id)]];
    if (serving) f.serving = verdict[i];
    if (verdict[i] == Verdict::Decoded && (serving || s.channel.delivery == Delivery::AnyGateway)) f.decoded = true;
    if (e.rx_power_dbm > f.best_rx) {
      f.best_rx = e.rx_power_dbm;
      f.strongest = verdict[i];
    }
  }

  report.rings.resize(static_cast<std::size_t>(rings));
  for (int r = 0; r < rings; ++r) {
    report.rings[static_cast<std::size_t>(r)].ring = r;
    report.rings[static_cast<std::size_t>(r)].radius_km = dep.ring_radii_km[static_cast<std::size_t>(r)];
  }
  report.devices.resize(n_dev);
  for (std::size_t d = 0; d < n_dev; ++d) {
    const auto& dev = dep.devices[d];
    auto& rec = report.devices[d];
    rec.id = dev.id;
    rec.gw = dev.home_gw;
    rec.ring = dev.ring;
    rec.position = dev.position;
    rec.sf = radio[d].sf;
    rec.tp_dbm = radio[d].tp_dbm;
    rec.best_gw = static_cast<int>(best_gw[d]);
    rec.rssi_dbm = rssi(radio[d].tp_dbm, g_tx, links.loss_db(d, best_gw[d]));
    rec.rp_dbw = received_power_dbw(rec.rssi_dbm, s.link.gains.g_rx_dbi);
    auto& ring = report.rings[static_cast<std::size_t>(dev.ring)];
    ring.devices += 1;
    ring.mean_tp_dbm += radio[d].tp_dbm;
    ring.mean_sf += radio[d].sf;
  }

  std::map<int, long> histogram;
  std::vector<double> ring_rssi(static_cast<std::size_t>(rings), 0.0);
  for (const auto& f : frames) {
    if (f.device < 0) continue;
    const std::size_t d = device_index[static_cast<std::size_t>(f.device)];
    auto& ring = report.rings[static_cast<std::size_t>(dep.devices[d].ring)];
    auto& rec = report.devices[d];
    const Verdict v = f.decoded ? Verdict::Decoded
                      : s.channel.delivery == Delivery::ServingGateway ? f.serving
                                                                        : f.strongest;
    const double rp = received_power_dbw(f.best_rx, s.link.gains.g_rx_dbi);
    const bool above = rp > report.rp_threshold_dbw;

    ring.scheduled += 1;
    ring.by_verdict[static_cast<std::size_t>(v)] += 1;
    ring.mean_rssi_dbm += f.best_rx;
    ring.mean_rp_dbw += rp;
    ring.rp_above_fraction += above ? 1.0 : 0.0;
    rec.frames += 1;
    report.scheduled += 1;
    report.by_verdict[static_cast<std::size_t>(v)] += 1;
    report.sf_scheduled[static_cast<std::size_t>(f.sf - kMinSf)] += 1;
    if (f.decoded) {
      ring.decoded += 1;
      rec.decoded += 1;
      report.decoded += 1;
      report.sf_decoded[static_cast<std::size_t>(f.sf - kMinSf)] += 1;
    }
    if (above) report.rp_above += 1;
    histogram[static_cast<int>(std::lround(rp * 100.0))] += 1;
  }
  for (auto& ring : report.rings) {
    if (ring.devices > 0) {
      ring.mean_tp_dbm /= ring.devices;
      ring.mean_sf /= ring.devices;
    }
    if (ring.scheduled > 0) {
      const double n = static_cast<double>(ring.scheduled);
      ring.mean_rssi_dbm /= n;
      ring.mean_rp_dbw /= n;
      ring.mean_snr_db = snr_measured(ring.mean_rssi_dbm, noise);
      ring.rp_above_fraction /= n;
    }
  }
  report.rp_histogram.assign(histogram.begin(), histogram.end());
  return report;
}

// Comparisons ------------------------------------------------------------

struct PolicyRingRow {
  int ring = 0;
  std::optional<double> plr_a;
  std::optional<double> plr_b;
  double rp_above_a = 0.0;
  double rp_above_b = 0.0;
  double mean_rssi_a = 0.0;
  double mean_rssi_b = 0.0;
  double mean_snr_a = 0.0;
  double mean_snr_b = 0.0;
  double mean_rp_a = 0.0;
  double mean_rp_b = 0.0;

  std::optional<double> plr_delta() const {
    if (!plr_a || !plr_b) return std::nullopt;
    return *plr_b - *plr_a;
  }
};

struct PolicyComparison {
  MetricsReport a;
  MetricsReport b;
  std::vector<PolicyRingRow> rows;
  double total_plr_a = 0.0;
  double total_plr_b = 0.0;

  /// Policy with the lower total PLR; empty on a tie.
  std::optional<PolicyKind> dominant() const {
    if (total_plr_a < total_plr_b) return a.policy;
    if (total_plr_b < total_plr_a) return b.policy;
    return std::nullopt;
  }
};

inline PolicyComparison compare_reports(MetricsReport a, MetricsReport b) {
  if (a.rings.size() != b.rings.size()) throw DomainError("compare_reports: ring layouts differ");
  PolicyComparison cmp;
  for (std::size_t r = 0; r < a.rings.size(); ++r) {
    PolicyRingRow row;
    row.ring = static_cast<int>(r);
    row.plr_a = compute_plr(a, r);
    row.plr_b = compute_plr(b, r);
    row.rp_above_a = a.rings[r].rp_above_fraction;
    row.rp_above_b = b.rings[r].rp_above_fraction;
    row.mean_rssi_a = a.rings[r].mean_rssi_dbm;
    row.mean_rssi_b = b.rings[r].mean_rssi_dbm;
    row.mean_snr_a = a.rings[r].mean_snr_db;
    row.mean_snr_b = b.rings[r].mean_snr_db;
    row.mean_rp_a = a.rings[r].mean_rp_dbw;
    row.mean_rp_b = b.rings[r].mean_rp_dbw;
    cmp.rows.push_back(row);
  }
  cmp.total_plr_a = a.total_plr();
  cmp.total_plr_b = b.total_plr();
  cmp.a = std::move(a);
  cmp.b = std::move(b);
  return cmp;
}

/// Scenario configured for `policy`: power settings follow the policy's
/// defaults (fixed 14 dBm for SNR, per-ring ladder start for RSSI).
inline Scenario with_policy(Scenario s, PolicyKind policy) {
  if (s.policy.kind != policy) s.policy.threshold.reset();
  s.policy.kind = policy;
  if (policy == PolicyKind::Snr) {
    s.radio.tp_schedule = false;
    s.radio.tp_dbm = kSnrPolicyTpDbm;
  } else {
    s.radio.tp_schedule = true;
  }
  return s;
}

/// Runs both policies on identical geometry, seed and traffic.
inline PolicyComparison compare_policies(const Scenario& base, PolicyKind a = PolicyKind::Snr,
                                         PolicyKind b = PolicyKind::Rssi) {
  auto ra = run_scenario(with_policy(base, a));
  auto rb = a == b ? ra : run_scenario(with_policy(base, b));
  return compare_reports(std::move(ra), std::move(rb));
}

inline std::vector<MetricsReport> sweep_gateways(const Scenario& tmpl, const std::vector<int>& gw_counts) {
  if (gw_counts.empty()) throw DomainError("sweep_gateways: no gateway counts");
  std::vector<MetricsReport> out;
  out.reserve(gw_counts.size());
  for (int g : gw_counts) {
    Scenario s = tmpl;
    s.gw_count = g;
    s.layout.count = g;
    out.push_back(run_scenario(s));
  }
  return out;
}

}  // namespace lora_esl

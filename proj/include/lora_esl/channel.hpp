#pragma once

// Pure-ALOHA uplink traffic and frame-level reception at the gateways.
//
// Frames that share a gateway, channel and spreading factor and overlap in
// time contend for one demodulator. Who survives depends on the power gap
// and on how far the earlier frame had progressed (preamble lock, PHY header,
// payload) when the later one arrived. Frames on different spreading factors
// are quasi-orthogonal and only add a configurable SNR penalty.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <string_view>
#include <tuple>
#include <vector>

#include "lora_esl/deployment.hpp"
#include "lora_esl/errors.hpp"
#include "lora_esl/link_budget.hpp"
#include "lora_esl/rng.hpp"

namespace lora_esl {

inline constexpr double kDefaultCaptureThresholdDb = 6.0;

struct TransmissionEvent {
  std::uint32_t id = 0;
  std::uint32_t frame_id = 0;
  int device_id = 0;
  int gw_id = 0;              // receiving gateway (index)
  double start = 0.0;         // s
  double airtime = 0.0;       // s
  int sf = kMinSf;
  double channel_freq_mhz = kEu868CarrierMhz;
  double rx_power_dbm = 0.0;  // RSSI at the receiving gateway
  double lock_time = 0.0;     // receiver locked on the preamble
  double preamble_end = 0.0;
  double header_end = 0.0;    // start + preamble + PHY header
  double symbol_time = 0.0;
  double cross_sf_penalty_db = 0.0;
  bool cross_sf_overlap = false;

  double end() const noexcept { return start + airtime; }
};

inline bool overlaps(const TransmissionEvent& a, const TransmissionEvent& b) noexcept {
  return a.start < b.end() && b.start < a.end();
}

/// Per-configuration frame timing, computed once per radio setting.
struct FrameTiming {
  double airtime = 0.0;
  double symbol_time = 0.0;
  double lock_offset = 0.0;
  double preamble = 0.0;
  double header_end_offset = 0.0;
};

inline FrameTiming frame_timing(const RadioConfig& cfg) {
  return {airtime(cfg), symbol_time_s(cfg.sf, cfg.bandwidth_khz), lock_offset_s(cfg), preamble_time_s(cfg),
          header_end_offset_s(cfg)};
}

inline TransmissionEvent make_event(std::uint32_t id, std::uint32_t frame_id, int device_id, int gw_id, double start,
                                    const RadioConfig& cfg, const FrameTiming& timing, double rx_power_dbm) {
  TransmissionEvent e;
  e.id = id;
  e.frame_id = frame_id;
  e.device_id = device_id;
  e.gw_id = gw_id;
  e.start = start;
  e.airtime = timing.airtime;
  e.sf = cfg.sf;
  e.channel_freq_mhz = cfg.carrier_freq_mhz;
  e.rx_power_dbm = rx_power_dbm;
  e.symbol_time = timing.symbol_time;
  e.lock_time = start + timing.lock_offset;
  e.preamble_end = start + timing.preamble;
  e.header_end = start + timing.header_end_offset;
  return e;
}

inline TransmissionEvent make_event(std::uint32_t id, std::uint32_t frame_id, int device_id, int gw_id, double start,
                                    const RadioConfig& cfg, double rx_power_dbm) {
  return make_event(id, frame_id, device_id, gw_id, start, cfg, frame_timing(cfg), rx_power_dbm);
}

enum class Verdict { Decoded, LostCollision, LostCapture, LostBelowSensitivity, LostCorrupt };

inline constexpr std::size_t kVerdictCount = 5;

inline constexpr std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Decoded: return "decoded";
    case Verdict::LostCollision: return "lost_collision";
    case Verdict::LostCapture: return "lost_capture";
    case Verdict::LostBelowSensitivity: return "lost_below_sensitivity";
    case Verdict::LostCorrupt: return "lost_corrupt";
  }
  return "";
}

/// How a later frame's arrival lines up with the earlier frame of a pair.
enum class CollisionCase {
  None,
  StrongerFirst,    // earlier frame is the stronger one
  PreambleCapture,  // stronger later frame arrives before the receiver locked
  AfterLock,        // stronger arrives after lock, before the PHY header starts
  HeaderOverlap,    // stronger overlaps the weaker frame's header
  HeaderEnd,        // stronger arrives as the receiver finishes the header
  PayloadOverlap,   // stronger arrives during the weaker frame's payload
};

inline constexpr std::string_view to_string(CollisionCase c) noexcept {
  switch (c) {
    case CollisionCase::None: return "none";
    case CollisionCase::StrongerFirst: return "stronger_first";
    case CollisionCase::PreambleCapture: return "preamble_capture";
    case CollisionCase::AfterLock: return "after_lock";
    case CollisionCase::HeaderOverlap: return "header_overlap";
    case CollisionCase::HeaderEnd: return "header_end";
    case CollisionCase::PayloadOverlap: return "payload_overlap";
  }
  return "";
}

struct ReceptionOutcome {
  std::uint32_t event_id = 0;
  Verdict verdict = Verdict::Decoded;
  CollisionCase collision_case = CollisionCase::None;
  std::vector<std::uint32_t> interferers;
};

struct TrafficModel {
  double mean_interarrival_s = 600.0;
  double horizon_s = 86400.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(mean_interarrival_s > 0.0) || !std::isfinite(mean_interarrival_s))
      throw ConfigError("traffic.mean_interarrival_s", "must be > 0");
    if (!(horizon_s >= 0.0) || !std::isfinite(horizon_s)) throw ConfigError("traffic.horizon_s", "must be >= 0");
  }

  bool operator==(const TrafficModel&) const = default;
};

/// Per (device, gateway) path loss in dB, shadowing included when frozen.
class LinkTable {
 public:
  LinkTable() = default;
  LinkTable(std::size_t devices, std::size_t gateways) : gateways_(gateways), loss_(devices * gateways, 0.0) {}

  double& loss_db(std::size_t device, std::size_t gw) { return loss_[device * gateways_ + gw]; }
  double loss_db(std::size_t device, std::size_t gw) const { return loss_[device * gateways_ + gw]; }
  std::size_t gateway_count() const noexcept { return gateways_; }
  std::size_t device_count() const noexcept { return gateways_ == 0 ? 0 : loss_.size() / gateways_; }

  /// Gateway with the smallest loss; ties keep the lowest index.
  std::size_t best_gateway(std::size_t device) const {
    std::size_t best = 0;
    for (std::size_t g = 1; g < gateways_; ++g)
      if (loss_db(device, g) < loss_db(device, best)) best = g;
    return best;
  }

 private:
  std::size_t gateways_ = 0;
  std::vector<double> loss_;
};

struct UplinkOptions {
  double g_tx_dbi = kDefaultAntennaGainDbi;
  /// Gateways hearing a frame below this level get no event; the frame still
  /// gets one at its strongest gateway so every frame is accounted for.
  double reception_floor_dbm = kDefaultSensitivityDbm;
  /// Extra per-frame Gaussian fading (dB); 0 keeps links quasi-static.
  double per_packet_fading_sigma_db = 0.0;
};

/// Poisson arrival times for one device over [0, horizon).
inline std::vector<double> poisson_arrivals(double mean_interarrival_s, double horizon_s, Rng& rng) {
  std::vector<double> times;
  std::exponential_distribution<double> gap(1.0 / mean_interarrival_s);
  for (double t = gap(rng); t < horizon_s; t += gap(rng)) times.push_back(t);
  return times;
}

/// Pure-ALOHA uplink schedule: every device transmits as soon as a packet is
/// generated. Returns one event per (frame, hearing gateway), sorted by start.
inline std::vector<TransmissionEvent> schedule_uplinks(const Deployment& deployment, const TrafficModel& traffic,
                                                       std::span<const RadioConfig> radio, const LinkTable& links,
                                                       const UplinkOptions& options = {}) {
  traffic.validate();
  if (radio.size() != deployment.devices.size()) throw DomainError("schedule_uplinks: one radio config per device");
  if (links.device_count() != deployment.devices.size() || links.gateway_count() != deployment.gateways.size())
    throw DomainError("schedule_uplinks: link table does not match deployment");

  std::vector<TransmissionEvent> events;
  const std::size_t gws = deployment.gateways.size();
  std::uint32_t frame_id = 0;
  std::vector<double> rx(gws);
  Rng fading = make_rng(traffic.seed, SeedStream::Fading);
  std::normal_distribution<double> fade(0.0, std::max(options.per_packet_fading_sigma_db, 1e-12));

  struct Pending {
    double start;
    std::size_t device;
  };
  std::vector<Pending> frames;
  for (std::size_t d = 0; d < deployment.devices.size(); ++d) {
    radio[d].validate();
    Rng rng = make_rng(traffic.seed, SeedStream::Traffic, static_cast<std::uint64_t>(deployment.devices[d].id));
    for (double t : poisson_arrivals(traffic.mean_interarrival_s, traffic.horizon_s, rng)) frames.push_back({t, d});
  }
  std::sort(frames.begin(), frames.end(),
            [](const Pending& a, const Pending& b) { return std::tie(a.start, a.device) < std::tie(b.start, b.device); });

  std::vector<FrameTiming> timings(radio.size());
  for (std::size_t d = 0; d < radio.size(); ++d) timings[d] = frame_timing(radio[d]);

  for (const auto& f : frames) {
    const RadioConfig& cfg = radio[f.device];
    std::size_t strongest = 0;
    for (std::size_t g = 0; g < gws; ++g) {
      double loss = links.loss_db(f.device, g);
      if (options.per_packet_fading_sigma_db > 0.0) loss += fade(fading);
      rx[g] = rssi(cfg.tp_dbm, options.g_tx_dbi, loss);
      if (rx[g] > rx[strongest]) strongest = g;
    }
    for (std::size_t g = 0; g < gws; ++g) {
      const bool heard = rx[g] >= options.reception_floor_dbm;
      const bool fallback = !heard && g == strongest && rx[strongest] < options.reception_floor_dbm;
      if (!heard && !fallback) continue;
      auto e = make_event(static_cast<std::uint32_t>(events.size()), frame_id, deployment.devices[f.device].id,
                          static_cast<int>(g), f.start, cfg, timings[f.device], rx[g]);
      events.push_back(e);
    }
    ++frame_id;
  }
  return events;
}

namespace detail {

struct ContentionKey {
  int gw;
  double freq;
  int sf;
  auto operator<=>(const ContentionKey&) const = default;
};

inline void require_sorted(std::span<const TransmissionEvent> events) {
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i].start < events[i - 1].start) throw DomainError("events must be sorted by start time");
}

}  // namespace detail

/// Partitions events into maximal chains of time-overlapping frames that share
/// gateway, channel and spreading factor. Returns indices into `events`;
/// groups appear in order of their first frame.
inline std::vector<std::vector<std::size_t>> find_overlaps(std::span<const TransmissionEvent> events) {
  detail::require_sorted(events);
  struct Open {
    std::size_t group;
    double end;
  };
  std::map<detail::ContentionKey, Open> open;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    const detail::ContentionKey key{e.gw_id, e.channel_freq_mhz, e.sf};
    auto it = open.find(key);
    if (it != open.end() && e.start < it->second.end) {
      groups[it->second.group].push_back(i);
      it->second.end = std::max(it->second.end, e.end());
    } else {
      groups.push_back({i});
      open[key] = Open{groups.size() - 1, e.end()};
    }
  }
  return groups;
}

/// Marks frames overlapped by a different-SF frame on the same gateway and
/// channel. Those frames are still resolvable; they only lose `penalty_db`
/// of SNR.
inline std::vector<TransmissionEvent> co_sf_interference_filter(std::vector<TransmissionEvent> events,
                                                                double penalty_db = 0.0) {
  detail::require_sorted(events);
  if (!(penalty_db >= 0.0) || !std::isfinite(penalty_db)) throw DomainError("co-SF penalty must be >= 0");
  std::map<std::pair<int, double>, std::vector<std::size_t>> active;
  for (std::size_t i = 0; i < events.size(); ++i) {
    auto& live = active[{events[i].gw_id, events[i].channel_freq_mhz}];
    std::erase_if(live, [&](std::size_t j) { return events[j].end() <= events[i].start; });
    for (std::size_t j : live) {
      if (events[j].sf == events[i].sf) continue;
      events[i].cross_sf_overlap = true;
      events[j].cross_sf_overlap = true;
    }
    live.push_back(i);
  }
  for (auto& e : events) e.cross_sf_penalty_db = e.cross_sf_overlap ? penalty_db : 0.0;
  return events;
}

namespace detail {

struct PairResult {
  bool first_survives;
  bool second_survives;
  Verdict first_loss;
  Verdict second_loss;
  CollisionCase c;
};

// `a` is the earlier frame (ties: stronger, then lower id), `b` the later one.
inline PairResult resolve_pair(const TransmissionEvent& a, const TransmissionEvent& b, double capture_db) {
  const double gap = b.rx_power_dbm - a.rx_power_dbm;
  if (gap <= 0.0) {
    const bool a_wins = -gap >= capture_db;
    return {a_wins, false, Verdict::LostCollision, a_wins ? Verdict::LostCapture : Verdict::LostCollision,
            CollisionCase::StrongerFirst};
  }
  const double t = b.start;
  const bool b_captures = gap >= capture_db;
  if (t < a.lock_time) {
    return {false, b_captures, b_captures ? Verdict::LostCapture : Verdict::LostCollision, Verdict::LostCollision,
            CollisionCase::PreambleCapture};
  }
  if (t < a.preamble_end) {
    return {false, false, Verdict::LostCollision, Verdict::LostCollision, CollisionCase::AfterLock};
  }
  if (t < a.header_end - a.symbol_time) {
    return {false, b_captures, Verdict::LostCollision, Verdict::LostCollision, CollisionCase::HeaderOverlap};
  }
  if (t < a.header_end) {
    const bool lockable = b.lock_time >= a.header_end;
    return {false, b_captures && lockable, Verdict::LostCollision, Verdict::LostCollision, CollisionCase::HeaderEnd};
  }
  return {false, false, Verdict::LostCapture, Verdict::LostCollision, CollisionCase::PayloadOverlap};
}

inline bool arrives_first(const TransmissionEvent& a, const TransmissionEvent& b) {
  if (a.start != b.start) return a.start < b.start;
  if (a.rx_power_dbm != b.rx_power_dbm) return a.rx_power_dbm > b.rx_power_dbm;
  return a.id < b.id;
}

}  // namespace detail

/// Resolves one contention group (same gateway, channel and SF). Frames under
/// `sensitivity_dbm` are lost and take no part in contention. Every remaining
/// pair of overlapping frames is judged by arrival phase and power gap; a
/// frame is decodable if it survives all of its pairs. The demodulator
/// delivers at most one frame per group: the strongest decodable one.
/// Outcomes are returned in group order.
inline std::vector<ReceptionOutcome> resolve_reception(std::span<const TransmissionEvent> group,
                                                       double capture_threshold_db = kDefaultCaptureThresholdDb,
                                                       double sensitivity_dbm = kDefaultSensitivityDbm) {
  if (std::isnan(capture_threshold_db) || capture_threshold_db < 0.0)
    throw DomainError("capture threshold must be >= 0");
  std::vector<ReceptionOutcome> out(group.size());
  if (group.empty()) return out;
  for (const auto& e : group) {
    if (e.sf != group.front().sf) throw DomainError("resolve_reception: mixed spreading factors in one group");
    if (e.gw_id != group.front().gw_id || e.channel_freq_mhz != group.front().channel_freq_mhz)
      throw DomainError("resolve_reception: group spans gateways or channels");
  }

  std::vector<bool> contends(group.size());
  std::vector<bool> survives(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    out[i].event_id = group[i].id;
    contends[i] = group[i].rx_power_dbm >= sensitivity_dbm;
    survives[i] = contends[i];
    if (!contends[i]) out[i].verdict = Verdict::LostBelowSensitivity;
  }

  // Canonical arrival order keeps the first recorded loss (and so the verdict)
  // independent of how the group was permuted.
  std::vector<std::size_t> order(group.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return detail::arrives_first(group[x], group[y]); });

  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t a = order[oi];
    if (!contends[a]) continue;
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const std::size_t b = order[oj];
      if (!contends[b] || !overlaps(group[a], group[b])) continue;
      const auto r = detail::resolve_pair(group[a], group[b], capture_threshold_db);
      auto record_loss = [&](std::size_t victim, std::size_t other, Verdict v) {
        if (survives[victim]) {
          out[victim].verdict = v;
          out[victim].collision_case = r.c;
        }
        survives[victim] = false;
        out[victim].interferers.push_back(group[other].id);
      };
      if (!r.first_survives) record_loss(a, b, r.first_loss);
      if (!r.second_survives) record_loss(b, a, r.second_loss);
    }
  }

  std::size_t winner = group.size();
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (!survives[i]) continue;
    if (winner == group.size() || group[i].rx_power_dbm > group[winner].rx_power_dbm ||
        (group[i].rx_power_dbm == group[winner].rx_power_dbm && detail::arrives_first(group[i], group[winner])))
      winner = i;
  }
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (!survives[i]) continue;
    if (i == winner) {
      out[i].verdict = Verdict::Decoded;
      out[i].interferers.clear();
    } else {
      out[i].verdict = Verdict::LostCapture;
      out[i].collision_case = CollisionCase::None;
      out[i].interferers = {group[winner].id};
    }
  }
  for (auto& o : out) std::sort(o.interferers.begin(), o.interferers.end());
  return out;
}

}  // namespace lora_esl

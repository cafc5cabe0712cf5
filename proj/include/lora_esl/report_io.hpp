#pragma once

// Report output. JSON carries the whole MetricsReport, CSV carries one row
// per ring per metric. Both round dB quantities to 2 decimals and ratios to
// 4 so the two formats agree number for number.
//
// CSV header: gw_count,policy,seed,ring,radius_km,metric,value
// An undefined value (PLR of an empty ring) is written as an empty field in
// CSV and null in JSON.

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lora_esl/scenario_io.hpp"
#include "lora_esl/simulator.hpp"

namespace lora_esl {

inline constexpr int kDbDecimals = 2;
inline constexpr int kRatioDecimals = 4;
inline constexpr int kDistanceDecimals = 4;

inline constexpr const char* kReportCsvHeader = "gw_count,policy,seed,ring,radius_km,metric,value";
inline constexpr const char* kComparisonCsvHeader = "gw_count,ring,plr,mean_rp_dbw,above_threshold_fraction";
inline constexpr const char* kPolicyCsvHeader =
    "ring,plr_a,plr_b,plr_delta,rp_above_a,rp_above_b,mean_rssi_a,mean_rssi_b,mean_snr_a,mean_snr_b,mean_rp_a,mean_rp_b";

inline double round_to(double x, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double r = std::round(x * scale) / scale;
  return r == 0.0 ? 0.0 : r;  // no "-0.00"
}

inline std::string fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, round_to(x, decimals));
  return buf;
}

inline std::string fixed(const std::optional<double>& x, int decimals) { return x ? fixed(*x, decimals) : ""; }

namespace detail {

inline json rounded(const std::optional<double>& x, int decimals) {
  return x ? json(round_to(*x, decimals)) : json(nullptr);
}

inline json verdict_counts(const std::array<long, kVerdictCount>& counts) {
  json out;
  for (std::size_t v = 0; v < kVerdictCount; ++v) out[std::string(to_string(static_cast<Verdict>(v)))] = counts[v];
  return out;
}

struct RingRow {
  const char* metric;
  std::optional<double> value;
  int decimals;  // -1: integer count
};

inline std::vector<RingRow> ring_rows(const MetricsReport& r, std::size_t i) {
  const auto& ring = r.rings[i];
  const auto count = [](long n) { return std::optional<double>(static_cast<double>(n)); };
  const auto& v = ring.by_verdict;
  return {
      {"devices", count(ring.devices), -1},
      {"scheduled", count(ring.scheduled), -1},
      {"decoded", count(ring.decoded), -1},
      {"lost", count(ring.lost()), -1},
      {"lost_collision", count(v[static_cast<std::size_t>(Verdict::LostCollision)]), -1},
      {"lost_capture", count(v[static_cast<std::size_t>(Verdict::LostCapture)]), -1},
      {"lost_below_sensitivity", count(v[static_cast<std::size_t>(Verdict::LostBelowSensitivity)]), -1},
      {"lost_corrupt", count(v[static_cast<std::size_t>(Verdict::LostCorrupt)]), -1},
      {"plr", compute_plr(r, i), kRatioDecimals},
      {"rp_above_fraction", ring.rp_above_fraction, kRatioDecimals},
      {"mean_rssi_dbm", ring.mean_rssi_dbm, kDbDecimals},
      {"mean_snr_db", ring.mean_snr_db, kDbDecimals},
      {"mean_rp_dbw", ring.mean_rp_dbw, kDbDecimals},
      {"mean_tp_dbm", ring.mean_tp_dbm, kDbDecimals},
      {"mean_sf", ring.mean_sf, kDbDecimals},
  };
}

inline json row_value(const RingRow& row) {
  if (!row.value) return nullptr;
  if (row.decimals < 0) return static_cast<long>(*row.value);
  return round_to(*row.value, row.decimals);
}

}  // namespace detail

inline json report_to_json(const MetricsReport& r) {
  json doc;
  doc["gw_count"] = r.gw_count;
  doc["policy"] = to_string(r.policy);
  doc["allocation"] = to_string(r.allocation);
  doc["seed"] = r.seed;
  doc["bootstrap_downlink"] = to_string(r.bootstrap);
  doc["rp_threshold_dbw"] = round_to(r.rp_threshold_dbw, kDbDecimals);

  doc["totals"] = {
      {"scheduled", r.scheduled},
      {"decoded", r.decoded},
      {"lost", r.scheduled - r.decoded},
      {"events", r.events},
      {"plr", round_to(r.total_plr(), kRatioDecimals)},
      {"rp_above_fraction", round_to(r.rp_above_fraction(), kRatioDecimals)},
      {"by_verdict", detail::verdict_counts(r.by_verdict)},
  };

  json sf = json::array();
  for (int i = 0; i < 6; ++i)
    sf.push_back({{"sf", kMinSf + i},
                  {"scheduled", r.sf_scheduled[static_cast<std::size_t>(i)]},
                  {"decoded", r.sf_decoded[static_cast<std::size_t>(i)]}});
  doc["by_sf"] = sf;

  json rings = json::array();
  for (std::size_t i = 0; i < r.rings.size(); ++i) {
    json ring;
    ring["ring"] = r.rings[i].ring;
    ring["radius_km"] = round_to(r.rings[i].radius_km, kDistanceDecimals);
    for (const auto& row : detail::ring_rows(r, i)) ring[row.metric] = detail::row_value(row);
    rings.push_back(ring);
  }
  doc["rings"] = rings;

  json hist = json::array();
  for (const auto& [centi, n] : r.rp_histogram) hist.push_back({{"rp_dbw", round_to(centi / 100.0, kDbDecimals)}, {"frames", n}});
  doc["rp_histogram"] = hist;

  json trace = json::array();
  for (const auto& t : r.adr_trace) {
    json e;
    e["epoch"] = t.epoch;
    e["gw"] = t.gw;
    e["ring"] = t.ring;
    e["device"] = t.device < 0 ? json(nullptr) : json(t.device);
    e["measured"] = round_to(t.measured, kDbDecimals);
    e["action"] = to_string(t.action);
    e["sf"] = t.sf;
    e["tp_dbm"] = round_to(t.tp_dbm, kDbDecimals);
    e["margin_db"] = detail::rounded(t.margin_db, kDbDecimals);
    trace.push_back(e);
  }
  doc["adr_trace"] = trace;

  json gws = json::array();
  for (const auto& g : r.gateways)
    gws.push_back({{"id", g.id},
                   {"x_km", round_to(g.position.x, kDistanceDecimals)},
                   {"y_km", round_to(g.position.y, kDistanceDecimals)}});
  doc["gateways"] = gws;

  json devices = json::array();
  for (const auto& d : r.devices)
    devices.push_back({{"id", d.id},
                       {"gw", d.gw},
                       {"ring", d.ring},
                       {"x_km", round_to(d.position.x, kDistanceDecimals)},
                       {"y_km", round_to(d.position.y, kDistanceDecimals)},
                       {"sf", d.sf},
                       {"tp_dbm", round_to(d.tp_dbm, kDbDecimals)},
                       {"best_gw", d.best_gw},
                       {"rssi_dbm", round_to(d.rssi_dbm, kDbDecimals)},
                       {"rp_dbw", round_to(d.rp_dbw, kDbDecimals)},
                       {"frames", d.frames},
                       {"decoded", d.decoded}});
  doc["devices"] = devices;
  return doc;
}

inline std::string serialize_report(const MetricsReport& r) { return report_to_json(r).dump(2) + "\n"; }

inline void write_report_csv(std::ostream& out, const MetricsReport& r) {
  out << kReportCsvHeader << '\n';
  for (std::size_t i = 0; i < r.rings.size(); ++i) {
    for (const auto& row : detail::ring_rows(r, i)) {
      out << r.gw_count << ',' << to_string(r.policy) << ',' << r.seed << ',' << r.rings[i].ring << ','
          << fixed(r.rings[i].radius_km, kDistanceDecimals) << ',' << row.metric << ',';
      if (row.value) {
        if (row.decimals < 0)
          out << static_cast<long>(*row.value);
        else
          out << fixed(*row.value, row.decimals);
      }
      out << '\n';
    }
  }
}

/// Per gateway count and ring: PLR, mean RP and above-threshold share.
inline void write_comparison_csv(std::ostream& out, const std::vector<MetricsReport>& reports) {
  out << kComparisonCsvHeader << '\n';
  for (const auto& r : reports)
    for (std::size_t i = 0; i < r.rings.size(); ++i)
      out << r.gw_count << ',' << r.rings[i].ring << ',' << fixed(compute_plr(r, i), kRatioDecimals) << ','
          << fixed(r.rings[i].mean_rp_dbw, kDbDecimals) << ',' << fixed(r.rings[i].rp_above_fraction, kRatioDecimals)
          << '\n';
}

inline void write_policy_comparison_csv(std::ostream& out, const PolicyComparison& c) {
  out << kPolicyCsvHeader << '\n';
  for (const auto& row : c.rows)
    out << row.ring << ',' << fixed(row.plr_a, kRatioDecimals) << ',' << fixed(row.plr_b, kRatioDecimals) << ','
        << fixed(row.plr_delta(), kRatioDecimals) << ',' << fixed(row.rp_above_a, kRatioDecimals) << ','
        << fixed(row.rp_above_b, kRatioDecimals) << ',' << fixed(row.mean_rssi_a, kDbDecimals) << ','
        << fixed(row.mean_rssi_b, kDbDecimals) << ',' << fixed(row.mean_snr_a, kDbDecimals) << ','
        << fixed(row.mean_snr_b, kDbDecimals) << ',' << fixed(row.mean_rp_a, kDbDecimals) << ','
        << fixed(row.mean_rp_b, kDbDecimals) << '\n';
}

}  // namespace lora_esl

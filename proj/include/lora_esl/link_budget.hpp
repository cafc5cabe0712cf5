#pragma once

// Propagation and link-budget arithmetic for LoRa uplinks: log-distance path
// loss with obstacle attenuation, RSSI, received power, SNR margin and frame
// airtime. Everything here is a pure function of its arguments.

#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "lora_esl/errors.hpp"

namespace lora_esl {

inline constexpr int kMinSf = 7;
inline constexpr int kMaxSf = 12;
inline constexpr double kEu868CarrierMhz = 868.0;
inline constexpr double kThermalNoiseDbmPerHz = -174.0;
inline constexpr double kDefaultSensitivityDbm = -123.0;
inline constexpr double kAlternateSensitivityDbm = -120.0;
inline constexpr double kDefaultNoiseFigureDb = 6.0;
inline constexpr double kDefaultAntennaGainDbi = 2.15;
inline constexpr double kReferencePathLossDb = 127.84;
inline constexpr double kIndoorPathLossExponent = 4.31;

namespace detail {

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string(what) + " must be finite");
}

}  // namespace detail

inline bool valid_sf(int sf) noexcept { return sf >= kMinSf && sf <= kMaxSf; }

inline bool valid_bandwidth_khz(double bw) noexcept {
  return bw == 125.0 || bw == 250.0 || bw == 500.0;
}

/// Chips in one chirp symbol.
inline long chips_per_symbol(int sf) {
  if (!valid_sf(sf)) throw DomainError("spreading factor out of [7, 12]");
  return 1L << sf;
}

struct RadioConfig {
  double carrier_freq_mhz = kEu868CarrierMhz;
  double bandwidth_khz = 125.0;
  int sf = 7;
  int cr_denominator_n = 1;  // code rate 4/(4+n)
  double tp_dbm = 14.0;
  int payload_bytes = 16;
  int preamble_symbols = 8;
  bool explicit_header = true;
  bool crc_on = true;

  void validate() const {
    if (!valid_sf(sf)) throw DomainError("sf must lie in [7, 12]");
    if (!valid_bandwidth_khz(bandwidth_khz)) throw DomainError("bandwidth must be 125, 250 or 500 kHz");
    if (cr_denominator_n < 1 || cr_denominator_n > 4) throw DomainError("cr_denominator_n must lie in [1, 4]");
    if (payload_bytes < 0 || payload_bytes > 255) throw DomainError("payload must lie in [0, 255] bytes");
    if (preamble_symbols < 6) throw DomainError("preamble must be at least 6 symbols");
    detail::require_finite(tp_dbm, "tp_dbm");
    detail::require_finite(carrier_freq_mhz, "carrier_freq_mhz");
  }

  bool operator==(const RadioConfig&) const = default;
};

inline double symbol_time_s(int sf, double bandwidth_khz) {
  return static_cast<double>(chips_per_symbol(sf)) / (bandwidth_khz * 1e3);
}

/// Low-data-rate optimisation is mandatory once the symbol exceeds 16 ms.
inline bool low_data_rate_optimize(const RadioConfig& cfg) {
  return cfg.sf >= 11 && cfg.bandwidth_khz == 125.0;
}

inline double preamble_time_s(const RadioConfig& cfg) {
  cfg.validate();
  return (cfg.preamble_symbols + 4.25) * symbol_time_s(cfg.sf, cfg.bandwidth_khz);
}

inline int payload_symbols(const RadioConfig& cfg) {
  cfg.validate();
  const int de = low_data_rate_optimize(cfg) ? 1 : 0;
  const int implicit_header = cfg.explicit_header ? 0 : 1;
  const int crc = cfg.crc_on ? 1 : 0;
  const double num = 8.0 * cfg.payload_bytes - 4.0 * cfg.sf + 28.0 + 16.0 * crc - 20.0 * implicit_header;
  const double den = 4.0 * (cfg.sf - 2 * de);
  const int blocks = static_cast<int>(std::ceil(num / den));
  return 8 + std::max(blocks * (cfg.cr_denominator_n + 4), 0);
}

/// Time on air of one frame, seconds.
inline double airtime(const RadioConfig& cfg) {
  return preamble_time_s(cfg) + payload_symbols(cfg) * symbol_time_s(cfg.sf, cfg.bandwidth_khz);
}

/// Offset from frame start to the end of the PHY header. The explicit header
/// rides in the first eight payload symbols.
inline double header_end_offset_s(const RadioConfig& cfg) {
  const double header_symbols = cfg.explicit_header ? 8.0 : 0.0;
  return preamble_time_s(cfg) + header_symbols * symbol_time_s(cfg.sf, cfg.bandwidth_khz);
}

/// Offset at which the receiver has locked onto the preamble: it needs the
/// final five preamble symbols clean.
inline double lock_offset_s(const RadioConfig& cfg) {
  return preamble_time_s(cfg) - 5.0 * symbol_time_s(cfg.sf, cfg.bandwidth_khz);
}

// ---------------------------------------------------------------------------
// Path loss

enum class Obstacle { ConcreteWall, Glass2cm, WoodenDoor, SoftPartition };

/// Attenuation of one indoor obstacle (2 m GW-ED separation measurements).
inline constexpr double attenuation_db(Obstacle o) noexcept {
  switch (o) {
    case Obstacle::ConcreteWall: return 2.2;
    case Obstacle::Glass2cm: return 2.04;
    case Obstacle::WoodenDoor: return 2.11;
    case Obstacle::SoftPartition: return 2.5;
  }
  return 0.0;
}

inline constexpr std::string_view obstacle_name(Obstacle o) noexcept {
  switch (o) {
    case Obstacle::ConcreteWall: return "concrete_wall";
    case Obstacle::Glass2cm: return "glass";
    case Obstacle::WoodenDoor: return "wooden_door";
    case Obstacle::SoftPartition: return "soft_partition";
  }
  return "";
}

inline bool parse_obstacle(std::string_view name, Obstacle& out) {
  for (auto o : {Obstacle::ConcreteWall, Obstacle::Glass2cm, Obstacle::WoodenDoor, Obstacle::SoftPartition}) {
    if (obstacle_name(o) == name) {
      out = o;
      return true;
    }
  }
  return false;
}

struct PathLossParams {
  double ref_loss_db = 0.0;
  double ref_distance_km = 0.1;
  double exponent = kIndoorPathLossExponent;
  double shadow_sigma_db = 0.0;
  std::vector<double> obstacle_losses_db;

  void validate() const {
    detail::require_finite(ref_loss_db, "ref_loss_db");
    if (!(ref_distance_km > 0.0) || !std::isfinite(ref_distance_km)) throw DomainError("ref_distance_km must be > 0");
    if (!(exponent > 0.0) || !std::isfinite(exponent)) throw DomainError("path-loss exponent must be > 0");
    if (!(shadow_sigma_db >= 0.0) || !std::isfinite(shadow_sigma_db)) throw DomainError("shadow sigma must be >= 0");
    for (double l : obstacle_losses_db) detail::require_finite(l, "obstacle loss");
  }

  double obstacle_total_db() const {
    return std::accumulate(obstacle_losses_db.begin(), obstacle_losses_db.end(), 0.0);
  }

  /// Parameters whose mean loss (no shadowing, no obstacles) equals
  /// `loss_db` at `at_distance_km`.
  static PathLossParams anchored(double loss_db, double at_distance_km, double ref_distance_km, double exponent,
                                 double sigma_db = 0.0) {
    PathLossParams p;
    p.ref_distance_km = ref_distance_km;
    p.exponent = exponent;
    p.shadow_sigma_db = sigma_db;
    p.ref_loss_db = loss_db - 10.0 * exponent * std::log10(at_distance_km / ref_distance_km);
    p.validate();
    return p;
  }

  bool operator==(const PathLossParams&) const = default;
};

/// Log-distance path loss in dB. `shadow_sample_db` is the caller's draw of
/// the zero-mean Gaussian shadowing term.
inline double path_loss(double distance_km, const PathLossParams& params, double shadow_sample_db = 0.0) {
  params.validate();
  detail::require_finite(shadow_sample_db, "shadow sample");
  if (!(distance_km > 0.0) || !std::isfinite(distance_km))
    throw DomainError("path_loss: distance must be positive");
  if (distance_km < params.ref_distance_km)
    throw DomainError("path_loss: distance below reference distance");
  return params.ref_loss_db + 10.0 * params.exponent * std::log10(distance_km / params.ref_distance_km) +
         shadow_sample_db + params.obstacle_total_db();
}

// ---------------------------------------------------------------------------
// Link equations

struct AntennaGains {
  double g_tx_dbi = kDefaultAntennaGainDbi;
  double g_rx_dbi = kDefaultAntennaGainDbi;

  bool operator==(const AntennaGains&) const = default;
};

/// RSSI = TP + G_tx - L_pl.
inline double rssi(double tp_dbm, double g_tx_dbi, double l_pl_db) {
  detail::require_finite(tp_dbm, "tp_dbm");
  detail::require_finite(g_tx_dbi, "g_tx_dbi");
  detail::require_finite(l_pl_db, "l_pl_db");
  return tp_dbm + g_tx_dbi - l_pl_db;
}

/// Received power in dBm, transmit chain through receive antenna.
inline double received_power_dbm(double tp_dbm, double g_tx_dbi, double l_pl_db, double g_rx_dbi) {
  detail::require_finite(g_rx_dbi, "g_rx_dbi");
  return rssi(tp_dbm, g_tx_dbi, l_pl_db) + g_rx_dbi;
}

/// Canonical received power in dBW from an RSSI reading.
inline double received_power_dbw(double rssi_db, double g_rx_dbi) {
  detail::require_finite(rssi_db, "rssi_db");
  detail::require_finite(g_rx_dbi, "g_rx_dbi");
  return rssi_db + g_rx_dbi - 30.0;
}

/// Diagnostic received-power form that folds SNR in:
/// RSSI + SNR - (1 + 10^(SNR/10)) - 30, evaluated exactly as written.
/// Not used by the metric pipeline.
inline double received_power_diag_dbw(double rssi_db, double snr_db) {
  detail::require_finite(rssi_db, "rssi_db");
  detail::require_finite(snr_db, "snr_db");
  return rssi_db + snr_db - (1.0 + std::pow(10.0, 0.1 * snr_db)) - 30.0;
}

inline double noise_floor(double bandwidth_hz, double noise_figure_db = kDefaultNoiseFigureDb) {
  if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz)) throw DomainError("noise_floor: bandwidth must be > 0");
  detail::require_finite(noise_figure_db, "noise_figure_db");
  return kThermalNoiseDbmPerHz + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
}

inline double snr_measured(double rssi_dbm, double noise_floor_dbm) {
  detail::require_finite(rssi_dbm, "rssi_dbm");
  detail::require_finite(noise_floor_dbm, "noise_floor_dbm");
  return rssi_dbm - noise_floor_dbm;
}

/// Required demodulation SNR per spreading factor.
class SnrFloorTable {
 public:
  SnrFloorTable() = default;

  explicit SnrFloorTable(const std::array<double, 6>& floors) : floors_(floors) { validate(); }

  void validate() const {
    for (std::size_t i = 0; i < floors_.size(); ++i) {
      detail::require_finite(floors_[i], "snr floor");
      if (i > 0 && !(floors_[i] < floors_[i - 1]))
        throw DomainError("snr floor table must strictly decrease with sf");
    }
  }

  double at(int sf) const {
    if (!valid_sf(sf)) throw DomainError("snr floor: sf out of [7, 12]");
    return floors_[static_cast<std::size_t>(sf - kMinSf)];
  }

  const std::array<double, 6>& values() const noexcept { return floors_; }

  bool operator==(const SnrFloorTable&) const = default;

 private:
  std::array<double, 6> floors_{-7.5, -10.0, -12.5, -15.0, -17.5, -20.0};
};

/// Demodulation margin: measured SNR over the floor for `sf`. Positive is decodable.
inline double margin(double snr_measured_db, int sf, const SnrFloorTable& floors = {}) {
  if (!valid_sf(sf)) throw DomainError("margin: sf out of [7, 12]");
  detail::require_finite(snr_measured_db, "snr_measured_db");
  return snr_measured_db - floors.at(sf);
}

}  // namespace lora_esl

#pragma once

// Adaptive data rate state machines. Two policies are provided:
//
//  * SNR-driven: transmit power pinned at 14 dBm, the spreading factor moves
//    when the demodulation margin drops under the configured threshold.
//  * RSSI-driven: spreading factor untouched, transmit power climbs a +3 dBm
//    ladder from 14 to 29 dBm while RSSI stays under the receiver threshold.
//
// Steps are pure: (state, measurement) -> decision carrying the next state.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string_view>

#include "lora_esl/errors.hpp"
#include "lora_esl/link_budget.hpp"

namespace lora_esl {

enum class DeviceClass { ClassA, ClassB };
enum class DownlinkKind { ConfigurationFrame, Beacon };

/// First downlink a device waits for when a session opens.
inline constexpr DownlinkKind bootstrap_session(DeviceClass c) noexcept {
  return c == DeviceClass::ClassA ? DownlinkKind::ConfigurationFrame : DownlinkKind::Beacon;
}

enum class AdrAction { SendNewPacket, AdjustSf, AdjustTp, UnsuccessfulTransmission };

inline constexpr std::string_view to_string(AdrAction a) noexcept {
  switch (a) {
    case AdrAction::SendNewPacket: return "send_new_packet";
    case AdrAction::AdjustSf: return "adjust_sf";
    case AdrAction::AdjustTp: return "adjust_tp";
    case AdrAction::UnsuccessfulTransmission: return "unsuccessful_transmission";
  }
  return "";
}

/// Which way "adjust SF" moves. Robust raises SF (slower, longer reach);
/// Literal lowers it, pairing with the data-rate index increment.
enum class SfStepDirection { Robust, Literal };

inline constexpr double kSnrPolicyTpDbm = 14.0;
inline constexpr double kMinTpDbm = 14.0;
inline constexpr double kMaxTpDbm = 29.0;
inline constexpr double kTpStepDb = 3.0;

struct SnrAdrState {
  int sf = kMinSf;
  double tp_dbm = kSnrPolicyTpDbm;
  std::optional<int> n_step;  // set on the first step from the observed margin
  int dr_idx = 0;
  double threshold_db = 0.0;

  bool operator==(const SnrAdrState&) const = default;
};

struct RssiAdrState {
  double tp_dbm = kMinTpDbm;
  double receiver_threshold_dbm = kDefaultSensitivityDbm;

  bool operator==(const RssiAdrState&) const = default;
};

template <typename State>
struct AdrDecision {
  AdrAction action = AdrAction::SendNewPacket;
  State state;
  double margin_db = 0.0;  // SNR policy only
  bool clamped = false;    // requested SF fell outside [7, 12]
};

using SnrAdrDecision = AdrDecision<SnrAdrState>;
using RssiAdrDecision = AdrDecision<RssiAdrState>;

inline SnrAdrDecision snr_adr_step(const SnrAdrState& state, double measured_snr_db, const SnrFloorTable& floors = {},
                                   SfStepDirection direction = SfStepDirection::Robust) {
  if (!valid_sf(state.sf)) throw DomainError("snr_adr_step: state sf out of [7, 12]");
  if (state.tp_dbm != kSnrPolicyTpDbm) throw DomainError("snr_adr_step: SNR policy runs at 14 dBm");
  if (state.n_step && *state.n_step < 0) throw DomainError("snr_adr_step: negative nStep");

  SnrAdrDecision d;
  d.state = state;
  d.margin_db = margin(measured_snr_db, state.sf, floors);
  if (!d.state.n_step) d.state.n_step = std::max(0, static_cast<int>(std::floor(d.margin_db / 3.0)));

  int& n_step = *d.state.n_step;
  if (n_step > 0 && d.margin_db >= state.threshold_db) {
    d.action = AdrAction::SendNewPacket;
  } else if (n_step > 0) {
    const int wanted = state.sf + (direction == SfStepDirection::Robust ? 1 : -1);
    d.state.sf = std::clamp(wanted, kMinSf, kMaxSf);
    d.clamped = d.state.sf != wanted;
    d.state.dr_idx += 1;
    n_step -= 1;
    d.action = AdrAction::AdjustSf;
  } else {
    d.action = AdrAction::UnsuccessfulTransmission;
  }
  return d;
}

inline RssiAdrDecision rssi_adr_step(const RssiAdrState& state, double received_rssi_dbm) {
  detail::require_finite(received_rssi_dbm, "received_rssi_dbm");
  if (state.tp_dbm < kMinTpDbm || state.tp_dbm > kMaxTpDbm)
    throw DomainError("rssi_adr_step: tp outside [14, 29] dBm");

  RssiAdrDecision d;
  d.state = state;
  if (received_rssi_dbm >= state.receiver_threshold_dbm) {
    d.action = AdrAction::SendNewPacket;
  } else if (state.tp_dbm + kTpStepDb <= kMaxTpDbm) {
    d.state.tp_dbm = state.tp_dbm + kTpStepDb;
    d.action = AdrAction::AdjustTp;
  } else {
    d.action = AdrAction::UnsuccessfulTransmission;
  }
  return d;
}

}  // namespace lora_esl

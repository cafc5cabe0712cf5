// Walks one indoor link from transmit power to received power and prints the
// margin the receiver has at every spreading factor.

#include <cstdio>

#include "lora_esl/link_budget.hpp"

int main() {
  using namespace lora_esl;

  PathLossParams indoor;
  indoor.ref_loss_db = kReferencePathLossDb;
  indoor.ref_distance_km = 0.6;
  indoor.exponent = kIndoorPathLossExponent;
  indoor.obstacle_losses_db = {attenuation_db(Obstacle::ConcreteWall), attenuation_db(Obstacle::Glass2cm)};

  const AntennaGains gains;
  const double floor_dbm = noise_floor(125e3);
  std::printf("distance_km  loss_db  rssi_dbm  rp_dbw  snr_db  margin_sf7  margin_sf12\n");
  for (double d : {0.6, 0.9, 1.2, 1.5, 2.1}) {
    const double loss = path_loss(d, indoor);
    const double r = rssi(14.0, gains.g_tx_dbi, loss);
    const double snr = snr_measured(r, floor_dbm);
    std::printf("%11.2f %8.2f %9.2f %7.2f %7.2f %11.2f %12.2f\n", d, loss, r, received_power_dbw(r, gains.g_rx_dbi), snr,
                margin(snr, 7), margin(snr, 12));
  }

  RadioConfig radio;
  radio.payload_bytes = 16;
  for (int sf = kMinSf; sf <= kMaxSf; ++sf) {
    radio.sf = sf;
    std::printf("SF%-2d airtime %.3f ms\n", sf, airtime(radio) * 1e3);
  }
}

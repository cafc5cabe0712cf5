#pragma once

#include <cstdint>
#include <random>

namespace lora_esl {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser; used to derive independent per-purpose seeds from
/// one scenario seed so that e.g. changing the traffic horizon never perturbs
/// the deployment geometry.
inline constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

enum class SeedStream : std::uint64_t {
  GatewayLayout = 1,
  Devices = 2,
  Shadowing = 3,
  Traffic = 4,
  Fading = 5,
  Clustering = 6,
};

inline Rng make_rng(std::uint64_t seed, SeedStream stream, std::uint64_t sub = 0) {
  return Rng(derive_seed(derive_seed(seed, static_cast<std::uint64_t>(stream)), sub));
}

}  // namespace lora_esl

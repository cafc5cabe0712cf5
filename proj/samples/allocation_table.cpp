// Prints the arithmetic per-gateway allocation for the usual gateway counts
// next to the Fibonacci baseline.

#include <cstdio>

#include "lora_esl/deployment.hpp"

int main() {
  using namespace lora_esl;
  const auto radii = default_ring_radii_km();
  const int rings = static_cast<int>(radii.size());

  std::printf("ring  radius_km");
  for (int g : {1, 2, 4, 10, 20}) std::printf("  %2d GWs", g);
  std::printf("  fibonacci(2200)\n");

  const auto fib = fibonacci_allocation(2200, rings);
  for (int r = 0; r < rings; ++r) {
    std::printf("%4d  %9.1f", r, radii[static_cast<std::size_t>(r)]);
    for (int g : {1, 2, 4, 10, 20})
      std::printf("  %6d", arithmetic_allocation(kDefaultFirstTerm, kDefaultCommonDiff, rings, g).per_gw[0][static_cast<std::size_t>(r)]);
    std::printf("  %15d\n", fib[static_cast<std::size_t>(r)]);
  }
}

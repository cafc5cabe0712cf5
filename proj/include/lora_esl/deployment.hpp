#pragma once

// Geometry of an ESL installation: gateway sites, end devices scattered in
// distance rings around their home gateway, ring population rules and
// Lloyd k-means clustering of devices onto gateway centroids.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <set>
#include <span>
#include <vector>

#include "lora_esl/errors.hpp"
#include "lora_esl/rng.hpp"

namespace lora_esl {

struct Point {
  double x = 0.0;  // km
  double y = 0.0;  // km

  bool operator==(const Point&) const = default;
};

inline double distance_km(const Point& a, const Point& b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

inline double squared_distance(const Point& a, const Point& b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

// ---------------------------------------------------------------------------
// Ring allocation

inline const std::vector<double>& default_ring_radii_km() {
  static const std::vector<double> radii{0.7, 0.9, 1.1, 1.5, 1.6, 2.1};
  return radii;
}

inline constexpr int kDefaultFirstTerm = 200;
inline constexpr int kDefaultCommonDiff = 100;

/// Device counts per ring for every gateway, indexed [gateway][ring].
struct RingAllocation {
  std::vector<std::vector<int>> per_gw;

  std::size_t gw_count() const noexcept { return per_gw.size(); }
  std::size_t ring_count() const noexcept { return per_gw.empty() ? 0 : per_gw.front().size(); }

  std::vector<int> ring_totals() const {
    std::vector<int> totals(ring_count(), 0);
    for (const auto& row : per_gw)
      for (std::size_t r = 0; r < row.size(); ++r) totals[r] += row[r];
    return totals;
  }

  int total() const {
    int t = 0;
    for (int c : ring_totals()) t += c;
    return t;
  }
};

namespace detail {

// Nominal per-gateway share, rounded half-up.
inline int divide_half_up(int count, int gw_count) {
  return static_cast<int>(std::floor(static_cast<double>(count) / gw_count + 0.5));
}

inline RingAllocation split_across_gateways(const std::vector<int>& ring_totals, int gw_count) {
  RingAllocation out;
  out.per_gw.assign(static_cast<std::size_t>(gw_count), std::vector<int>(ring_totals.size(), 0));
  for (std::size_t r = 0; r < ring_totals.size(); ++r) {
    const int base = ring_totals[r] / gw_count;
    const int remainder = ring_totals[r] % gw_count;
    for (int g = 0; g < gw_count; ++g) out.per_gw[static_cast<std::size_t>(g)][r] = base + (g < remainder ? 1 : 0);
  }
  return out;
}

}  // namespace detail

/// Single-gateway arithmetic progression over rings: ring n (inner to outer)
/// holds first + (n-1)*diff, except the outermost ring, which falls back to
/// the first term so both the nearest and farthest rings are lightly loaded.
inline std::vector<int> arithmetic_ring_totals(int first_term, int common_diff, int ring_count) {
  if (first_term <= 0) throw DomainError("arithmetic allocation: first term must be > 0");
  if (common_diff < 0) throw DomainError("arithmetic allocation: common difference must be >= 0");
  if (ring_count < 1) throw DomainError("arithmetic allocation: need at least one ring");
  std::vector<int> totals(static_cast<std::size_t>(ring_count));
  for (int n = 0; n < ring_count; ++n) totals[static_cast<std::size_t>(n)] = first_term + n * common_diff;
  if (ring_count > 1) totals.back() = first_term;
  return totals;
}

/// Arithmetic distribution shared across `gw_count` gateways. Each ring total
/// is split so that the nominal share is the half-up rounded quotient and
/// leftover devices go to the lowest gateway indices; totals are preserved.
inline RingAllocation arithmetic_allocation(int first_term, int common_diff, int ring_count, int gw_count) {
  if (gw_count <= 0) throw DomainError("arithmetic allocation: gateway count must be > 0");
  return detail::split_across_gateways(arithmetic_ring_totals(first_term, common_diff, ring_count), gw_count);
}

/// Per-gateway counts as the plain quotient of the progression by the gateway
/// count, rounded half-up.
inline std::vector<int> arithmetic_allocation_nominal(int first_term, int common_diff, int ring_count, int gw_count) {
  if (gw_count <= 0) throw DomainError("arithmetic allocation: gateway count must be > 0");
  auto totals = arithmetic_ring_totals(first_term, common_diff, ring_count);
  for (int& c : totals) c = detail::divide_half_up(c, gw_count);
  return totals;
}

/// Fibonacci-weighted baseline: weights 1, 1, 2, 3, 5, ... scaled to `total`
/// (floor), with the rounding remainder added to the heaviest end.
inline std::vector<int> fibonacci_allocation(int total, int ring_count, bool ascending_outward = true) {
  if (total <= 0) throw DomainError("fibonacci allocation: total must be > 0");
  if (ring_count < 1) throw DomainError("fibonacci allocation: need at least one ring");
  std::vector<long long> weights(static_cast<std::size_t>(ring_count));
  long long a = 1, b = 1;
  for (auto& w : weights) {
    w = a;
    const long long next = a + b;
    a = b;
    b = next;
  }
  long long weight_sum = 0;
  for (long long w : weights) weight_sum += w;
  std::vector<int> counts(weights.size());
  int assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    counts[i] = static_cast<int>(static_cast<long long>(total) * weights[i] / weight_sum);
    assigned += counts[i];
  }
  counts.back() += total - assigned;
  if (!ascending_outward) std::reverse(counts.begin(), counts.end());
  return counts;
}

/// Transmit power of ring `ring_index`: 14 dBm at the innermost ring, +3 dBm
/// per ring outward, capped by the 29 dBm ceiling.
inline double tp_schedule(int ring_index, int ring_count = 6) {
  if (ring_index < 0 || ring_index >= ring_count) throw DomainError("tp_schedule: ring index out of range");
  const double tp = 14.0 + 3.0 * ring_index;
  if (tp > 29.0) throw DomainError("tp_schedule: ring index beyond the 29 dBm ceiling");
  return tp;
}

// ---------------------------------------------------------------------------
// Deployment

struct RingPlan {
  std::vector<double> radii_km = default_ring_radii_km();
  std::vector<int> counts_per_gw{200, 300, 400, 500, 600, 200};

  void validate() const {
    if (radii_km.empty()) throw ConfigError("deployment.ring_radii_km", "at least one ring is required");
    if (radii_km.size() != counts_per_gw.size())
      throw ConfigError("deployment.ring_radii_km", "ring radii and counts differ in length");
    for (std::size_t i = 0; i < radii_km.size(); ++i) {
      if (!(radii_km[i] > 0.0) || !std::isfinite(radii_km[i]))
        throw ConfigError("deployment.ring_radii_km", "radii must be positive");
      if (i > 0 && !(radii_km[i] > radii_km[i - 1]))
        throw ConfigError("deployment.ring_radii_km", "radii must be strictly increasing");
      if (counts_per_gw[i] < 0) throw ConfigError("deployment.allocation", "ring counts must be >= 0");
    }
  }

  double inner_radius(std::size_t ring) const { return ring == 0 ? 0.0 : radii_km[ring - 1]; }
  double outer_radius(std::size_t ring) const { return radii_km[ring]; }
};

enum class LayoutKind { KMeans, Grid, Explicit };

struct GatewaySite {
  int id = 0;
  Point position;

  bool operator==(const GatewaySite&) const = default;
};

struct GatewayLayout {
  LayoutKind kind = LayoutKind::KMeans;
  int count = 1;
  double venue_radius_km = 2.1;   // extent of the trial scatter / grid
  int trial_points = 2000;        // scatter size for the k-means layout
  std::vector<GatewaySite> sites; // Explicit layout only

  bool operator==(const GatewayLayout&) const = default;
};

struct Device {
  int id = 0;
  Point position;
  int ring = 0;
  int home_gw = 0;  // index into Deployment::gateways
};

struct Deployment {
  std::vector<GatewaySite> gateways;
  std::vector<Device> devices;
  std::vector<double> ring_radii_km;

  std::size_t ring_count() const noexcept { return ring_radii_km.size(); }
};

namespace detail {

inline Point uniform_in_annulus(Rng& rng, const Point& center, double r_in, double r_out) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = std::sqrt(u(rng) * (r_out * r_out - r_in * r_in) + r_in * r_in);
  const double theta = 2.0 * std::numbers::pi * u(rng);
  return {center.x + r * std::cos(theta), center.y + r * std::sin(theta)};
}

}  // namespace detail

/// Gateway positions for a layout. Deterministic in `seed`.
inline std::vector<GatewaySite> place_gateways(const GatewayLayout& layout, std::uint64_t seed);

/// Scatters each gateway's per-ring device counts uniformly over the ring's
/// annulus around that gateway. `counts[g][r]` is the count for gateway g, ring r.
inline Deployment generate_deployment(const std::vector<double>& radii_km, const std::vector<std::vector<int>>& counts,
                                      const GatewayLayout& layout, std::uint64_t seed) {
  RingPlan check{radii_km, counts.empty() ? std::vector<int>{} : counts.front()};
  check.validate();
  Deployment dep;
  dep.ring_radii_km = radii_km;
  dep.gateways = place_gateways(layout, seed);
  if (counts.size() != dep.gateways.size())
    throw ConfigError("deployment.gw_count", "allocation rows do not match gateway count");

  int next_id = 0;
  for (std::size_t g = 0; g < dep.gateways.size(); ++g) {
    if (counts[g].size() != radii_km.size())
      throw ConfigError("deployment.allocation", "allocation row length differs from ring count");
    Rng rng = make_rng(seed, SeedStream::Devices, g);
    for (std::size_t r = 0; r < radii_km.size(); ++r) {
      if (counts[g][r] < 0) throw ConfigError("deployment.allocation", "ring counts must be >= 0");
      const double r_in = r == 0 ? 0.0 : radii_km[r - 1];
      for (int i = 0; i < counts[g][r]; ++i) {
        Device d;
        d.id = next_id++;
        d.position = detail::uniform_in_annulus(rng, dep.gateways[g].position, r_in, radii_km[r]);
        d.ring = static_cast<int>(r);
        d.home_gw = static_cast<int>(g);
        dep.devices.push_back(d);
      }
    }
  }
  return dep;
}

inline Deployment generate_deployment(const RingPlan& plan, const GatewayLayout& layout, std::uint64_t seed) {
  plan.validate();
  const std::size_t n = layout.kind == LayoutKind::Explicit ? layout.sites.size()
                                                            : static_cast<std::size_t>(std::max(layout.count, 0));
  return generate_deployment(plan.radii_km, std::vector<std::vector<int>>(n, plan.counts_per_gw), layout, seed);
}

// ---------------------------------------------------------------------------
// Clustering

struct Clustering {
  std::vector<Point> centroids;
  std::vector<int> assignment;  // point index -> centroid index
  std::vector<double> radii_km;
  double objective = 0.0;       // mean squared distance to assigned centroid
  std::vector<double> objective_history;
  std::vector<Point> points;
  int iterations = 0;

  std::size_t size(std::size_t cluster) const {
    return static_cast<std::size_t>(std::count(assignment.begin(), assignment.end(), static_cast<int>(cluster)));
  }
};

/// Mean over points of the squared distance to the assigned centroid.
inline double clustering_objective(std::span<const Point> points, std::span<const Point> centroids,
                                   std::span<const int> assignment) {
  if (points.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    sum += squared_distance(points[i], centroids[static_cast<std::size_t>(assignment[i])]);
  return sum / static_cast<double>(points.size());
}

/// Largest per-axis offset of a member from its centroid.
inline double cluster_radius(const Clustering& c, std::size_t cluster_index) {
  if (cluster_index >= c.centroids.size()) throw DomainError("cluster_radius: no such cluster");
  const Point& center = c.centroids[cluster_index];
  double radius = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    if (c.assignment[i] != static_cast<int>(cluster_index)) continue;
    any = true;
    radius = std::max({radius, std::abs(c.points[i].x - center.x), std::abs(c.points[i].y - center.y)});
  }
  if (!any) throw DomainError("cluster_radius: empty cluster");
  return radius;
}

namespace detail {

inline int nearest_centroid(const Point& p, std::span<const Point> centroids) {
  int best = 0;
  double best_d = squared_distance(p, centroids[0]);
  for (std::size_t j = 1; j < centroids.size(); ++j) {
    const double d = squared_distance(p, centroids[j]);
    if (d < best_d) {  // strict: ties keep the lowest index
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

inline void assign_all(std::span<const Point> points, std::span<const Point> centroids, std::vector<int>& assignment) {
  for (std::size_t i = 0; i < points.size(); ++i) assignment[i] = nearest_centroid(points[i], centroids);
}

// k-means++ seeding.
inline std::vector<Point> seed_centroids(std::span<const Point> points, int k, Rng& rng) {
  std::vector<Point> centroids;
  centroids.reserve(static_cast<std::size_t>(k));
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
  centroids.push_back(points[pick(rng)]);
  std::vector<double> d2(points.size());
  while (centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) best = std::min(best, squared_distance(points[i], c));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {  // fewer distinct points than k
      centroids.push_back(points[pick(rng)]);
      continue;
    }
    std::uniform_real_distribution<double> u(0.0, total);
    double target = u(rng);
    std::size_t chosen = points.size() - 1;
    for (std::size_t i = 0; i < points.size(); ++i) {
      target -= d2[i];
      if (target < 0.0) {
        chosen = i;
        break;
      }
    }
    centroids.push_back(points[chosen]);
  }
  return centroids;
}

}  // namespace detail

namespace detail {

// One Lloyd run from a fresh k-means++ seeding.
inline Clustering lloyd_run(std::span<const Point> points, int k, int max_iters, double tol, Rng& rng) {
  Clustering out;
  out.centroids = seed_centroids(points, k, rng);
  out.assignment.assign(points.size(), 0);
  assign_all(points, out.centroids, out.assignment);
  out.objective = clustering_objective(points, out.centroids, out.assignment);
  out.objective_history.push_back(out.objective);

  std::vector<double> sx(static_cast<std::size_t>(k)), sy(static_cast<std::size_t>(k));
  std::vector<int> n(static_cast<std::size_t>(k));
  for (int it = 0; it < max_iters; ++it) {
    std::fill(sx.begin(), sx.end(), 0.0);
    std::fill(sy.begin(), sy.end(), 0.0);
    std::fill(n.begin(), n.end(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto c = static_cast<std::size_t>(out.assignment[i]);
      sx[c] += points[i].x;
      sy[c] += points[i].y;
      ++n[c];
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (n[c] > 0) out.centroids[c] = {sx[c] / n[c], sy[c] / n[c]};
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (n[c] > 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        const double d = squared_distance(points[i], out.centroids[static_cast<std::size_t>(out.assignment[i])]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      out.centroids[c] = points[far];
      out.assignment[far] = static_cast<int>(c);
    }
    assign_all(points, out.centroids, out.assignment);
    const double obj = clustering_objective(points, out.centroids, out.assignment);
    out.objective_history.push_back(obj);
    const double improvement = out.objective - obj;
    out.objective = obj;
    out.iterations = it + 1;
    if (improvement < tol) break;
  }
  return out;
}

}  // namespace detail

/// Lloyd k-means with k-means++ seeding. Iterates assign/update until the
/// objective improves by less than `tol` or `max_iters` updates have run.
/// An emptied cluster is re-seeded at the point farthest from its centroid.
/// Lloyd stalls in local minima even on a handful of points, so `restarts`
/// independent seedings are run and the lowest final objective wins (first
/// run on ties). The returned history is the winning run's.
inline Clustering kmeans_cluster(std::span<const Point> points, int k, int max_iters, double tol, std::uint64_t seed,
                                 int restarts = 20) {
  if (points.empty()) throw DomainError("kmeans: empty point set");
  if (k < 1 || static_cast<std::size_t>(k) > points.size()) throw DomainError("kmeans: k must lie in [1, n]");
  if (max_iters < 0) throw DomainError("kmeans: max_iters must be >= 0");
  if (restarts < 1) throw DomainError("kmeans: restarts must be >= 1");

  Rng rng = make_rng(seed, SeedStream::Clustering);
  Clustering out = detail::lloyd_run(points, k, max_iters, tol, rng);
  for (int r = 1; r < restarts; ++r) {
    Clustering c = detail::lloyd_run(points, k, max_iters, tol, rng);
    if (c.objective < out.objective) out = std::move(c);
  }
  out.points.assign(points.begin(), points.end());
  out.radii_km.resize(static_cast<std::size_t>(k), 0.0);
  for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
    if (out.size(c) > 0) out.radii_km[c] = cluster_radius(out, c);
  }
  return out;
}

inline std::vector<GatewaySite> place_gateways(const GatewayLayout& layout, std::uint64_t seed) {
  std::vector<GatewaySite> sites;
  switch (layout.kind) {
    case LayoutKind::Explicit: {
      std::set<int> ids;
      for (const auto& s : layout.sites) {
        if (!ids.insert(s.id).second) throw ConfigError("deployment.gw_layout.sites", "duplicate gateway id");
      }
      if (layout.sites.empty()) throw ConfigError("deployment.gw_layout.sites", "explicit layout needs sites");
      return layout.sites;
    }
    case LayoutKind::Grid: {
      if (layout.count < 1) throw ConfigError("deployment.gw_count", "gateway count must be >= 1");
      const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(layout.count))));
      const int rows = (layout.count + cols - 1) / cols;
      const double side = 2.0 * layout.venue_radius_km / std::numbers::sqrt2;
      for (int i = 0; i < layout.count; ++i) {
        const int r = i / cols;
        const int c = i % cols;
        const double x = -side / 2 + side * (c + 0.5) / cols;
        const double y = -side / 2 + side * (r + 0.5) / rows;
        sites.push_back({i, {x, y}});
      }
      return sites;
    }
    case LayoutKind::KMeans: {
      if (layout.count < 1) throw ConfigError("deployment.gw_count", "gateway count must be >= 1");
      if (layout.trial_points < layout.count)
        throw ConfigError("deployment.gw_layout.trial_points", "trial scatter smaller than gateway count");
      Rng rng = make_rng(seed, SeedStream::GatewayLayout);
      std::vector<Point> scatter;
      scatter.reserve(static_cast<std::size_t>(layout.trial_points));
      for (int i = 0; i < layout.trial_points; ++i)
        scatter.push_back(detail::uniform_in_annulus(rng, {0.0, 0.0}, 0.0, layout.venue_radius_km));
      if (layout.count == 1) return {{0, {0.0, 0.0}}};
      const auto c = kmeans_cluster(scatter, layout.count, 100, 1e-9, derive_seed(seed, 0x6c61796f7574ULL));
      for (std::size_t i = 0; i < c.centroids.size(); ++i) sites.push_back({static_cast<int>(i), c.centroids[i]});
      return sites;
    }
  }
  return sites;
}

}  // namespace lora_esl

// lora_esl: command-line driver for the ESL LoRa planning library.
//
// Exit codes: 0 success, 1 usage, 2 scenario/config error, 3 runtime or IO.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lora_esl/lora_esl.hpp"

namespace fs = std::filesystem;
using namespace lora_esl;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Seed override from the environment; applied after the file is parsed.
void apply_seed_override(Scenario& s) {
  const char* env = std::getenv("LORA_ESL_SEED");
  if (env == nullptr || *env == '\0') return;
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(env, &used, 10);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != std::string(env).size() || std::string(env).front() == '-')
    throw ConfigError("LORA_ESL_SEED", "expected a non-negative integer");
  s.seed = v;
  s.traffic.seed = v;
}

Scenario load(const std::string& path) {
  Scenario s = load_scenario(path);
  apply_seed_override(s);
  return s;
}

// Writes through a temporary so an interrupted run never leaves a torn file.
void write_file(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw IoError("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string render_report(const MetricsReport& r, const std::string& format) {
  if (format == "json") return serialize_report(r);
  std::ostringstream out;
  write_report_csv(out, r);
  return out.str();
}

void print_summary(std::ostream& out, const MetricsReport& r) {
  out << "gw_count " << r.gw_count << "\n"
      << "policy " << to_string(r.policy) << "\n"
      << "scheduled " << r.scheduled << "\n"
      << "decoded " << r.decoded << "\n"
      << "total_plr " << fixed(r.total_plr(), kRatioDecimals) << "\n"
      << "above_threshold_fraction " << fixed(r.rp_above_fraction(), kRatioDecimals) << "\n";
}

// Subcommands -----------------------------------------------------------

struct AllocateArgs {
  int gws = 1;
  int first = kDefaultFirstTerm;
  int diff = kDefaultCommonDiff;
  std::string kind = "arithmetic";
};

int cmd_allocate(const AllocateArgs& a) {
  const auto radii = default_ring_radii_km();
  const int rings = static_cast<int>(radii.size());
  std::vector<int> per_gw;
  std::vector<int> totals;
  try {
    if (a.kind == "arithmetic") {
      const auto alloc = arithmetic_allocation(a.first, a.diff, rings, a.gws);
      per_gw = alloc.per_gw.front();
      totals = alloc.ring_totals();
    } else {
      int total = 0;
      for (int c : arithmetic_ring_totals(a.first, a.diff, rings)) total += c;
      if (a.gws <= 0) throw DomainError("fibonacci allocation: gateway count must be > 0");
      if (total % a.gws != 0) throw DomainError("fibonacci allocation: total not divisible by gateway count");
      per_gw = fibonacci_allocation(total / a.gws, rings);
      for (int c : per_gw) totals.push_back(c * a.gws);
    }
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  std::cout << "ring,outer_radius_km,eds_per_gw,eds_all_gws\n";
  int sum_gw = 0;
  int sum_all = 0;
  for (int r = 0; r < rings; ++r) {
    const auto i = static_cast<std::size_t>(r);
    std::cout << r << ',' << fixed(radii[i], 2) << ',' << per_gw[i] << ',' << totals[i] << '\n';
    sum_gw += per_gw[i];
    sum_all += totals[i];
  }
  std::cout << "total,," << sum_gw << ',' << sum_all << '\n';
  return 0;
}

struct LinkArgs {
  double tp = 14.0;
  double gtx = kDefaultAntennaGainDbi;
  std::optional<double> lpl;
  std::optional<double> distance_km;
  std::optional<double> grx;
  double ref_loss = kReferencePathLossDb;
  double ref_distance = kDefaultRefDistanceKm;
  double exponent = kIndoorPathLossExponent;
  double bw_khz = 125.0;
  double nf = kDefaultNoiseFigureDb;
  std::optional<int> sf;
};

// Runs one step of the chain, naming it in any domain error.
template <typename F>
double step(const char* name, F&& f) {
  try {
    return f();
  } catch (const DomainError& e) {
    throw UsageError(std::string(name) + " failed: " + e.what());
  }
}

int cmd_linkbudget(const LinkArgs& a) {
  double lpl = kReferencePathLossDb;
  if (a.distance_km) {
    PathLossParams p;
    p.ref_loss_db = a.ref_loss;
    p.ref_distance_km = a.ref_distance;
    p.exponent = a.exponent;
    lpl = step("path loss (log-distance)", [&] { return path_loss(*a.distance_km, p); });
    std::cout << "path_loss_db " << fixed(lpl, 2) << "\n";
  }
  if (a.lpl) lpl = *a.lpl;

  const double rssi_db = step("RSSI = TP + G_tx - L_pl", [&] { return rssi(a.tp, a.gtx, lpl); });
  std::cout << "rssi_dbm " << fixed(rssi_db, 2) << "\n";

  const double floor_dbm = step("noise floor = -174 + 10 log10(BW) + NF", [&] {
    if (!valid_bandwidth_khz(a.bw_khz)) throw DomainError("bandwidth must be 125, 250 or 500 kHz");
    return noise_floor(a.bw_khz * 1e3, a.nf);
  });
  std::cout << "noise_floor_dbm " << fixed(floor_dbm, 2) << "\n";

  const double snr = step("SNR = RSSI - noise floor", [&] { return snr_measured(rssi_db, floor_dbm); });
  std::cout << "snr_db " << fixed(snr, 2) << "\n";

  const SnrFloorTable floors;
  for (int sf = kMinSf; sf <= kMaxSf; ++sf) {
    if (a.sf && *a.sf != sf) continue;
    const double m = step("margin = SNR - SNR floor", [&] { return margin(snr, sf, floors); });
    std::cout << "margin_sf" << sf << "_db " << fixed(m, 2) << "\n";
  }
  if (a.sf && !valid_sf(*a.sf)) throw UsageError("margin = SNR - SNR floor failed: sf must lie in [7, 12]");

  if (a.grx) {
    const double rp = step("RP = RSSI + G_rx - 30", [&] { return received_power_dbw(rssi_db, *a.grx); });
    std::cout << "rp_dbw " << fixed(rp, 2) << "\n";
    std::cout << "rp_threshold_dbw " << fixed(received_power_dbw(kDefaultSensitivityDbm, *a.grx), 2) << "\n";
  }
  return 0;
}

struct ClusterArgs {
  std::string scenario;
  std::optional<int> gws;
  std::optional<int> k;
  int max_iters = 100;
};

int cmd_cluster(const ClusterArgs& a) {
  Scenario s = a.scenario.empty() ? default_scenario(PolicyKind::Rssi) : load(a.scenario);
  if (a.scenario.empty()) apply_seed_override(s);
  if (a.gws) {
    s.gw_count = *a.gws;
    s.layout.count = *a.gws;
  }
  s.validate();
  const auto alloc = s.ring_allocation();
  const Deployment dep = generate_deployment(s.ring_radii_km, alloc.per_gw, s.layout, s.seed);
  std::vector<Point> points;
  points.reserve(dep.devices.size());
  for (const auto& d : dep.devices) points.push_back(d.position);
  const int k = a.k.value_or(s.gw_count);
  Clustering c;
  try {
    c = kmeans_cluster(points, k, a.max_iters, 1e-12, s.seed);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  std::cout << "cluster,x_km,y_km,members,radius_km\n";
  for (std::size_t i = 0; i < c.centroids.size(); ++i)
    std::cout << i << ',' << fixed(c.centroids[i].x, 4) << ',' << fixed(c.centroids[i].y, 4) << ',' << c.size(i) << ','
              << (c.size(i) ? fixed(cluster_radius(c, i), 4) : std::string()) << '\n';
  std::cout << "objective_km2 " << fixed(c.objective, 6) << "\n"
            << "iterations " << c.iterations << "\n";
  return 0;
}

struct SimulateArgs {
  std::string scenario;
  std::string out_dir;
  std::string format = "json";
};

int cmd_simulate(const SimulateArgs& a) {
  const Scenario s = load(a.scenario);
  const MetricsReport r = run_scenario(s);
  const std::string body = render_report(r, a.format);
  fs::create_directories(a.out_dir);
  write_file(fs::path(a.out_dir) / ("report." + a.format), body);
  write_file(fs::path(a.out_dir) / "scenario.json", serialize_scenario(s));
  print_summary(std::cout, r);
  return 0;
}

struct SweepArgs {
  std::string scenario;
  std::string out_dir;
  std::vector<int> gws{1, 2, 4, 10, 20};
  std::string format = "json";
};

int cmd_sweep(const SweepArgs& a) {
  const Scenario tmpl = load(a.scenario);
  for (int g : a.gws)
    if (g < 1) throw UsageError("--gws entries must be >= 1");
  const auto reports = sweep_gateways(tmpl, a.gws);
  std::ostringstream cmp;
  write_comparison_csv(cmp, reports);

  fs::create_directories(a.out_dir);
  for (const auto& r : reports)
    write_file(fs::path(a.out_dir) / ("report_gw" + std::to_string(r.gw_count) + "." + a.format),
               render_report(r, a.format));
  write_file(fs::path(a.out_dir) / "comparison.csv", cmp.str());
  for (const auto& r : reports)
    std::cout << "gw_count " << r.gw_count << " total_plr " << fixed(r.total_plr(), kRatioDecimals)
              << " above_threshold_fraction " << fixed(r.rp_above_fraction(), kRatioDecimals) << "\n";
  return 0;
}

struct CompareArgs {
  std::string scenario;
  std::string out_dir;
};

int cmd_compare(const CompareArgs& a) {
  const Scenario s = load(a.scenario);
  const auto cmp = compare_policies(s, PolicyKind::Snr, PolicyKind::Rssi);
  std::ostringstream csv;
  write_policy_comparison_csv(csv, cmp);
  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    write_file(fs::path(a.out_dir) / "policy_comparison.csv", csv.str());
  }
  std::cout << csv.str();
  std::cout << "total_plr_snr " << fixed(cmp.total_plr_a, kRatioDecimals) << "\n"
            << "total_plr_rssi " << fixed(cmp.total_plr_b, kRatioDecimals) << "\n";
  return 0;
}

struct DefaultsArgs {
  std::string policy = "rssi";
  int gws = 1;
};

int cmd_defaults(const DefaultsArgs& a) {
  Scenario s = default_scenario(a.policy == "snr" ? PolicyKind::Snr : PolicyKind::Rssi, a.gws);
  apply_seed_override(s);
  std::cout << serialize_scenario(s);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LoRa ESL network planning: allocation, link budget, clustering and simulation"};
  app.require_subcommand(1);

  AllocateArgs alloc;
  auto* allocate = app.add_subcommand("allocate", "Per-ring device counts for each gateway");
  allocate->add_option("--gws", alloc.gws, "Gateway count")->check(CLI::PositiveNumber);
  allocate->add_option("--first", alloc.first, "First term of the series");
  allocate->add_option("--diff", alloc.diff, "Common difference of the series");
  allocate->add_option("--kind", alloc.kind, "arithmetic or fibonacci")
      ->check(CLI::IsMember({"arithmetic", "fibonacci"}));

  LinkArgs link;
  auto* linkbudget = app.add_subcommand("linkbudget", "RSSI, noise floor, SNR, margin and RP for one link");
  linkbudget->add_option("--tp", link.tp, "Transmit power (dBm)");
  linkbudget->add_option("--gtx", link.gtx, "Transmit antenna gain (dBi)");
  auto* lpl_opt = linkbudget->add_option("--lpl", link.lpl, "Path loss (dB)");
  linkbudget->add_option("--distance", link.distance_km, "Distance (km); path loss from the log-distance model")
      ->excludes(lpl_opt);
  linkbudget->add_option("--ref-loss", link.ref_loss, "Loss at the reference distance (dB)");
  linkbudget->add_option("--ref-distance", link.ref_distance, "Reference distance (km)");
  linkbudget->add_option("--exponent", link.exponent, "Path-loss exponent");
  linkbudget->add_option("--grx", link.grx, "Receive antenna gain (dBi); enables RP output");
  linkbudget->add_option("--bw", link.bw_khz, "Bandwidth (kHz)");
  linkbudget->add_option("--nf", link.nf, "Receiver noise figure (dB)");
  linkbudget->add_option("--sf", link.sf, "Only print the margin for this spreading factor");

  ClusterArgs cl;
  auto* cluster = app.add_subcommand("cluster", "k-means over a generated deployment");
  cluster->add_option("scenario", cl.scenario, "Scenario file (bundled defaults when omitted)");
  cluster->add_option("--gws", cl.gws, "Gateway count for the deployment")->check(CLI::PositiveNumber);
  cluster->add_option("--k", cl.k, "Cluster count (defaults to the gateway count)")->check(CLI::PositiveNumber);
  cluster->add_option("--max-iters", cl.max_iters, "Iteration cap")->check(CLI::NonNegativeNumber);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run one scenario and write its report");
  simulate->add_option("scenario", sim.scenario, "Scenario file")->required();
  simulate->add_option("--out", sim.out_dir, "Output directory")->required();
  simulate->add_option("--format", sim.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Run a scenario template across gateway counts");
  sweep->add_option("scenario", sw.scenario, "Scenario template file")->required();
  sweep->add_option("--gws", sw.gws, "Comma-separated gateway counts")->delimiter(',');
  sweep->add_option("--out", sw.out_dir, "Output directory")->required();
  sweep->add_option("--format", sw.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  CompareArgs cmpa;
  auto* compare = app.add_subcommand("compare", "SNR vs RSSI policy on the same scenario");
  compare->add_option("scenario", cmpa.scenario, "Scenario file")->required();
  compare->add_option("--out", cmpa.out_dir, "Optional output directory for policy_comparison.csv");

  DefaultsArgs defs;
  auto* defaults = app.add_subcommand("defaults", "Print the bundled default scenario as JSON");
  defaults->add_option("--policy", defs.policy, "snr or rssi")->check(CLI::IsMember({"snr", "rssi"}));
  defaults->add_option("--gws", defs.gws, "Gateway count")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*allocate) return cmd_allocate(alloc);
    if (*linkbudget) return cmd_linkbudget(link);
    if (*cluster) return cmd_cluster(cl);
    if (*simulate) return cmd_simulate(sim);
    if (*sweep) return cmd_sweep(sw);
    if (*compare) return cmd_compare(cmpa);
    if (*defaults) return cmd_defaults(defs);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

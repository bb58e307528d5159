#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqd/active_space.hpp"
#include "sqd/counts.hpp"
#include "sqd/fcidump.hpp"
#include "sqd/hci.hpp"
#include "sqd/lucj.hpp"
#include "sqd/solver.hpp"
#include "sqd/sqd.hpp"

namespace sqd {

using Json = nlohmann::json;

inline constexpr double kHartreeToEv = 27.211386245988;
inline constexpr const char* kRecordFormat = "sqd-result/1";

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m{"fci", "hci", "ext-hci", "sqd", "ext-sqd"};
  return m;
}

inline const std::vector<std::string>& known_samplers() {
  static const std::vector<std::string> s{"lucj", "ci-vector", "counts-file"};
  return s;
}

/// Everything a run needs. JSON keys equal the command-line flag names.
struct RunConfig {
  std::string hamiltonian;
  std::string method = "sqd";
  std::string sampler = "ci-vector";
  std::uint64_t shots = 6'000'000;
  std::string counts;  ///< input counts file for the counts-file sampler
  int iterations = 10;
  int batches = 16;
  std::uint64_t samples_per_batch = 1000;
  bool closure = true;
  double discard_below = 1e-2;
  double doubles_above = 1e-1;
  double flip_prob = 0.0;
  std::uint64_t seed = 0;
  double epsilon1 = 1e-4;
  double hci_energy_tol = 1e-8;
  int lucj_layers = 2;
  double eta = kDefaultContributionThreshold;
  std::uint64_t max_dimension = 50'000'000;
  std::string out;

  RecoveryConfig recovery() const {
    RecoveryConfig r;
    r.iterations = iterations;
    r.batches = batches;
    r.samples_per_batch = samples_per_batch;
    r.seed = seed;
    r.closure = closure;
    r.max_dimension = max_dimension;
    return r;
  }
  ExtensionThresholds thresholds() const { return {discard_below, doubles_above}; }
  NoiseModel noise() const { return {flip_prob, seed}; }
  HCIOptions hci() const {
    HCIOptions h;
    h.epsilon1 = epsilon1;
    h.energy_tol = hci_energy_tol;
    h.max_dimension = max_dimension;
    return h;
  }

  bool uses_samples() const { return method == "sqd" || method == "ext-sqd"; }

  void validate(bool check_files = true) const {
    const auto one_of = [](const std::string& v, const std::vector<std::string>& set) {
      return std::find(set.begin(), set.end(), v) != set.end();
    };
    if (!one_of(method, known_methods())) throw ConfigError("unknown method '" + method + "'");
    if (!one_of(sampler, known_samplers())) throw ConfigError("unknown sampler '" + sampler + "'");
    if (hamiltonian.empty()) throw ConfigError("hamiltonian path is required");
    if (check_files && !std::filesystem::exists(hamiltonian))
      throw ConfigError("hamiltonian file '" + hamiltonian + "' does not exist");
    if (uses_samples()) {
      if (shots < 1 && sampler != "counts-file") throw ConfigError("shots must be >= 1");
      if (sampler == "counts-file") {
        if (counts.empty()) throw ConfigError("the counts-file sampler needs --counts");
        if (check_files && !std::filesystem::exists(counts))
          throw ConfigError("counts file '" + counts + "' does not exist");
      }
      if (sampler == "lucj" && lucj_layers < 0) throw ConfigError("lucj-layers must be >= 0");
      recovery().validate();
      noise().validate();
    }
    thresholds().validate();
    hci().validate();
    if (!(eta >= 0.0)) throw ConfigError("eta must be >= 0");
  }
};

inline Json to_json(const RunConfig& c) {
  return Json{{"hamiltonian", c.hamiltonian},
              {"method", c.method},
              {"sampler", c.sampler},
              {"shots", c.shots},
              {"counts", c.counts},
              {"iterations", c.iterations},
              {"batches", c.batches},
              {"samples-per-batch", c.samples_per_batch},
              {"closure", c.closure},
              {"discard-below", c.discard_below},
              {"doubles-above", c.doubles_above},
              {"flip-prob", c.flip_prob},
              {"seed", c.seed},
              {"epsilon1", c.epsilon1},
              {"hci-energy-tol", c.hci_energy_tol},
              {"lucj-layers", c.lucj_layers},
              {"eta", c.eta},
              {"max-dimension", c.max_dimension},
              {"out", c.out}};
}

inline RunConfig run_config_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("config: expected a JSON object");
  RunConfig c;
  const auto get = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const Json::exception& e) {
      throw ParseError(std::string("config field '") + key + "': " + e.what());
    }
  };
  get("hamiltonian", c.hamiltonian);
  get("method", c.method);
  get("sampler", c.sampler);
  get("shots", c.shots);
  get("counts", c.counts);
  get("iterations", c.iterations);
  get("batches", c.batches);
  get("samples-per-batch", c.samples_per_batch);
  get("closure", c.closure);
  get("discard-below", c.discard_below);
  get("doubles-above", c.doubles_above);
  get("flip-prob", c.flip_prob);
  get("seed", c.seed);
  get("epsilon1", c.epsilon1);
  get("hci-energy-tol", c.hci_energy_tol);
  get("lucj-layers", c.lucj_layers);
  get("eta", c.eta);
  get("max-dimension", c.max_dimension);
  get("out", c.out);
  return c;
}

/// Outcome of one run, serialized as a single JSON document.
struct ResultRecord {
  std::string method;
  double energy = 0.0;
  std::uint64_t dimension = 0;                         ///< D: diagonalized dimension of the base method
  std::optional<std::uint64_t> extended_dimension;     ///< D_E (ext-sqd) or D_EH (ext-hci)
  int iterations = 0;
  bool converged = true;
  std::vector<double> energy_history;
  double wall_time = 0.0;
  Json config = Json::object();
  Json diagnostics = Json::object();
};

inline Json to_json(const ResultRecord& r) {
  Json j{{"format", kRecordFormat},
         {"method", r.method},
         {"energy", r.energy},
         {"energy_unit", "hartree"},
         {"dimension", r.dimension},
         {"extended_dimension", nullptr},
         {"iterations", r.iterations},
         {"converged", r.converged},
         {"energy_history", r.energy_history},
         {"wall_time", r.wall_time},
         {"config", r.config},
         {"diagnostics", r.diagnostics}};
  if (r.extended_dimension) j["extended_dimension"] = *r.extended_dimension;
  return j;
}

inline std::string dump_record(const ResultRecord& r) { return to_json(r).dump(2) + "\n"; }

/// Loads a record. Only method, energy, and energy_unit are required, which
/// lets hand-written records for external methods take part in `reaction`.
inline ResultRecord record_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("record: expected a JSON object");
  for (const char* key : {"method", "energy", "energy_unit"})
    if (!j.contains(key)) throw ParseError(std::string("record: missing field '") + key + "'");
  ResultRecord r;
  try {
    if (j.at("energy_unit").get<std::string>() != "hartree")
      throw ParseError("record: energy_unit must be 'hartree'");
    r.method = j.at("method").get<std::string>();
    r.energy = j.at("energy").get<double>();
    if (j.contains("dimension")) r.dimension = j.at("dimension").get<std::uint64_t>();
    if (j.contains("extended_dimension") && !j.at("extended_dimension").is_null())
      r.extended_dimension = j.at("extended_dimension").get<std::uint64_t>();
    if (j.contains("iterations")) r.iterations = j.at("iterations").get<int>();
    if (j.contains("converged")) r.converged = j.at("converged").get<bool>();
    if (j.contains("energy_history")) r.energy_history = j.at("energy_history").get<std::vector<double>>();
    if (j.contains("wall_time")) r.wall_time = j.at("wall_time").get<double>();
    if (j.contains("config")) r.config = j.at("config");
    if (j.contains("diagnostics")) r.diagnostics = j.at("diagnostics");
  } catch (const Json::exception& e) {
    throw ParseError(std::string("record: ") + e.what());
  }
  return r;
}

inline ResultRecord load_record(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("record: cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError("record '" + path + "': " + e.what());
  }
  return record_from_json(j);
}

/// Shots for the sample-based methods, before readout noise.
inline BitstringCounts make_samples(const RunConfig& cfg, const ActiveSpaceHamiltonian& H) {
  if (cfg.sampler == "counts-file") {
    auto c = read_counts(cfg.counts);
    if (c.n_orb() != H.n_orb()) throw ConfigError("counts file qubit count does not match the Hamiltonian");
    return c;
  }
  if (cfg.sampler == "ci-vector") {
    const auto fci = fci_ground_state(H);
    return sample_counts(H.n_orb(), fci.basis, fci.coefficients, cfg.shots, cfg.seed);
  }
  // Small active spaces cannot support the requested number of layers.
  const int layers = std::min(cfg.lucj_layers, H.n_alpha() * (H.n_orb() - H.n_alpha()));
  const auto params = lucj_params_from_ccsd(mp2_amplitudes(H), layers);
  return sample_counts(lucj_state(params, H.n_orb(), H.n_alpha(), H.n_beta()), cfg.shots, cfg.seed);
}

/// Counts after optional readout noise; this is what the SQD loop consumes.
inline BitstringCounts prepare_counts(const RunConfig& cfg, const ActiveSpaceHamiltonian& H) {
  auto counts = make_samples(cfg, H);
  if (cfg.flip_prob > 0.0) counts = apply_readout_noise(counts, cfg.noise());
  return counts;
}

/// Runs the configured method on an already loaded Hamiltonian.
inline ResultRecord run(const RunConfig& cfg, const ActiveSpaceHamiltonian& H) {
  cfg.validate(false);
  const auto start = std::chrono::steady_clock::now();
  ResultRecord r;
  r.method = cfg.method;
  r.config = to_json(cfg);
  r.diagnostics["hf_energy"] = diagonal_element(H, H.hartree_fock());

  if (cfg.method == "fci") {
    const auto s = fci_ground_state(H);
    r.energy = s.energy;
    r.dimension = s.dimension;
    r.iterations = s.iterations;
    r.converged = s.converged;
    r.energy_history = {s.energy};
  } else if (cfg.method == "hci" || cfg.method == "ext-hci") {
    const auto s = hci_variational(H, cfg.hci());
    r.energy = s.energy;
    r.dimension = s.dimension;
    r.iterations = s.iterations;
    r.converged = s.converged;
    r.energy_history = {s.energy};
    if (cfg.method == "ext-hci") {
      const auto e = ext_hci(H, s, cfg.thresholds(), cfg.max_dimension);
      r.energy = e.energy;
      r.extended_dimension = e.dimension;
      r.converged = r.converged && e.converged;
      r.energy_history.push_back(e.energy);
      r.diagnostics["hci_energy"] = s.energy;
    }
  } else {
    const auto counts = prepare_counts(cfg, H);
    const auto [valid, invalid] = partition_by_hamming(counts, H.n_alpha(), H.n_beta());
    r.diagnostics["shots"] = counts.total_shots();
    r.diagnostics["distinct_configurations"] = counts.size();
    r.diagnostics["valid_fraction"] =
        static_cast<double>(valid.total_shots()) / static_cast<double>(counts.total_shots());
    const auto s = sqd_ground_state(H, counts, cfg.recovery());
    r.energy = s.energy;
    r.dimension = s.dimension;
    r.iterations = s.iterations;
    r.converged = s.converged;
    r.energy_history = s.energy_history;
    r.diagnostics["sampled_dimension"] = s.sampled_dimension;
    if (cfg.method == "ext-sqd") {
      const auto e = ext_sqd(H, s, cfg.thresholds(), cfg.batches, cfg.max_dimension);
      r.energy = e.energy;
      r.extended_dimension = e.dimension;
      r.converged = r.converged && e.converged;
      r.energy_history.push_back(e.energy);
      r.diagnostics["sqd_energy"] = s.energy;
    }
  }
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline ResultRecord run(const RunConfig& cfg) {
  cfg.validate(true);
  return run(cfg, parse_fcidump(cfg.hamiltonian, true));
}

struct ReactionReport {
  double delta_hartree = 0.0;
  double delta_ev = 0.0;
  std::string product_method;
  std::string reactant_method;
  bool method_mismatch = false;
};

/// E_prod - E_reac; negative means exothermic.
inline ReactionReport reaction(const ResultRecord& product, const ResultRecord& reactant,
                               bool allow_method_mismatch = false) {
  ReactionReport rep;
  rep.product_method = product.method;
  rep.reactant_method = reactant.method;
  rep.method_mismatch = product.method != reactant.method;
  if (rep.method_mismatch && !allow_method_mismatch)
    throw ConfigError("reaction: records use different methods ('" + product.method + "' vs '" + reactant.method +
                      "'); pass --allow-method-mismatch to override");
  rep.delta_hartree = product.energy - reactant.energy;
  rep.delta_ev = rep.delta_hartree * kHartreeToEv;
  return rep;
}

inline Json to_json(const ReactionReport& r) {
  return Json{{"delta_e_hartree", r.delta_hartree},
              {"delta_e_ev", r.delta_ev},
              {"product_method", r.product_method},
              {"reactant_method", r.reactant_method},
              {"method_mismatch", r.method_mismatch}};
}

struct ScanRow {
  int size = 0;
  std::string method;
  double energy = 0.0;
  std::uint64_t dimension = 0;
  std::optional<std::uint64_t> extended_dimension;
};

inline std::string scan_member_path(const std::string& path_template, int size) {
  const std::string key = "{size}";
  const auto at = path_template.find(key);
  if (at == std::string::npos) throw ConfigError("scan: path template must contain {size}");
  std::string p = path_template;
  p.replace(at, key.size(), std::to_string(size));
  return p;
}

/// One row per (size, method), sorted by size then by the given method order.
inline std::vector<ScanRow> scan(const RunConfig& base, const std::string& path_template, std::vector<int> sizes,
                                 const std::vector<std::string>& methods) {
  if (sizes.empty() || methods.empty()) throw ConfigError("scan: need at least one size and one method");
  std::stable_sort(sizes.begin(), sizes.end());
  for (int size : sizes)
    if (!std::filesystem::exists(scan_member_path(path_template, size)))
      throw ConfigError("scan: missing member file '" + scan_member_path(path_template, size) + "'");
  std::vector<ScanRow> rows;
  for (int size : sizes) {
    RunConfig cfg = base;
    cfg.hamiltonian = scan_member_path(path_template, size);
    const auto H = parse_fcidump(cfg.hamiltonian, true);
    for (const auto& m : methods) {
      cfg.method = m;
      const auto rec = run(cfg, H);
      rows.push_back({size, m, rec.energy, rec.dimension, rec.extended_dimension});
    }
  }
  return rows;
}

inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string scan_csv(const std::vector<ScanRow>& rows) {
  std::ostringstream out;
  out << "size,method,energy,D,D_E\n";
  for (const auto& r : rows) {
    out << r.size << ',' << r.method << ',' << format_double(r.energy) << ',' << r.dimension << ',';
    if (r.extended_dimension) out << *r.extended_dimension;
    out << '\n';
  }
  return out.str();
}

}  // namespace sqd

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sqd/pipeline.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kNumerical = 3, kCapacity = 4, kEmptySample = 5 };

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw sqd::ConfigError("cannot write '" + path + "'");
  out << text;
}

void add_run_options(CLI::App* cmd, sqd::RunConfig& c) {
  cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  cmd->add_option("--hamiltonian", c.hamiltonian, "FCIDUMP file");
  cmd->add_option("--method", c.method, "fci, hci, ext-hci, sqd or ext-sqd")->capture_default_str();
  cmd->add_option("--sampler", c.sampler, "lucj, ci-vector or counts-file")->capture_default_str();
  cmd->add_option("--shots", c.shots)->capture_default_str();
  cmd->add_option("--counts", c.counts, "counts file for --sampler counts-file");
  cmd->add_option("--iterations", c.iterations, "configuration recovery iterations")->capture_default_str();
  cmd->add_option("--batches", c.batches)->capture_default_str();
  cmd->add_option("--samples-per-batch", c.samples_per_batch)->capture_default_str();
  cmd->add_option("--closure", c.closure, "diagonalize in the alpha x beta product space")->capture_default_str();
  cmd->add_option("--discard-below", c.discard_below)->capture_default_str();
  cmd->add_option("--doubles-above", c.doubles_above)->capture_default_str();
  cmd->add_option("--flip-prob", c.flip_prob, "readout bit-flip probability")->capture_default_str();
  cmd->add_option("--seed", c.seed)->capture_default_str();
  cmd->add_option("--epsilon1", c.epsilon1, "heat-bath selection threshold")->capture_default_str();
  cmd->add_option("--hci-energy-tol", c.hci_energy_tol)->capture_default_str();
  cmd->add_option("--lucj-layers", c.lucj_layers)->capture_default_str();
  cmd->add_option("--eta", c.eta)->capture_default_str();
  cmd->add_option("--max-dimension", c.max_dimension)->capture_default_str();
  cmd->add_option("--out", c.out, "output file, stdout if omitted");
}

// `run --config file.ini` takes flat `key = value` lines (or a [run] section).
// They are turned into leading flags so explicit flags still win.
std::vector<std::string> config_file_flags(const std::string& path) {
  std::vector<std::string> flags;
  for (const auto& item : CLI::ConfigINI().from_file(path)) {
    if (item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == "run"))
      throw sqd::ConfigError("config file: unexpected section '" + item.fullname() + "'");
    if (item.inputs.size() != 1) throw sqd::ConfigError("config file: '" + item.name + "' needs one value");
    flags.push_back("--" + item.name + "=" + item.inputs[0]);
  }
  return flags;
}

int run_record(const sqd::RunConfig& cfg) {
  const auto record = sqd::run(cfg);
  write_text(cfg.out, sqd::dump_record(record));
  if (!record.converged) {
    std::cerr << "sqd: eigensolver did not converge\n";
    return kNumerical;
  }
  return kOk;
}

void apply_thread_count() {
  const char* env = std::getenv("SQD_NUM_THREADS");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw sqd::ConfigError("SQD_NUM_THREADS must be a positive integer");
#ifdef _OPENMP
  omp_set_num_threads(static_cast<int>(n));
#endif
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Sample-based quantum diagonalization and selected-CI toolkit"};
  app.require_subcommand(1);

  sqd::RunConfig cfg;
  std::string config_path, replay_path;
  auto* run = app.add_subcommand("run", "Run one method on one Hamiltonian and write a JSON record");
  add_run_options(run, cfg);
  run->add_option("--config", config_path, "key = value file with the same names as the flags");
  run->add_option("--replay", replay_path, "rerun the configuration echoed in a result record");

  sqd::RunConfig sample_cfg;
  sample_cfg.method = "sqd";
  auto* sample = app.add_subcommand("sample", "Draw a counts file from a sampler");
  sample->add_option("--hamiltonian", sample_cfg.hamiltonian)->required();
  sample->add_option("--sampler", sample_cfg.sampler, "lucj or ci-vector")->capture_default_str();
  sample->add_option("--shots", sample_cfg.shots)->capture_default_str();
  sample->add_option("--seed", sample_cfg.seed)->capture_default_str();
  sample->add_option("--flip-prob", sample_cfg.flip_prob)->capture_default_str();
  sample->add_option("--lucj-layers", sample_cfg.lucj_layers)->capture_default_str();
  sample->add_option("--out", sample_cfg.out);

  std::string product_path, reactant_path, reaction_out;
  bool allow_mismatch = false;
  auto* reaction = app.add_subcommand("reaction", "Reaction energy E(product) - E(reactant) from two records");
  reaction->add_option("product", product_path)->required();
  reaction->add_option("reactant", reactant_path)->required();
  reaction->add_flag("--allow-method-mismatch", allow_mismatch);
  reaction->add_option("--out", reaction_out);

  sqd::RunConfig scan_cfg;
  std::string scan_template, scan_out;
  std::vector<int> sizes;
  std::vector<std::string> methods{"fci"};
  auto* scan = app.add_subcommand("scan", "Energies over a family of Hamiltonians indexed by active-space size");
  add_run_options(scan, scan_cfg);
  scan->add_option("--template", scan_template, "path containing {size}")->required();
  scan->add_option("--sizes", sizes)->required()->delimiter(',');
  scan->add_option("--methods", methods)->delimiter(',')->capture_default_str();
  scan->get_option("--out")->description("CSV output, stdout if omitted");

  std::string orbital_path, active_out;
  double eta = sqd::kDefaultContributionThreshold;
  int active_size = 0;
  auto* active = app.add_subcommand("active-space", "Rank orbitals and pick an inside-out active space");
  active->add_option("--orbitals", orbital_path, "lines of 'index contribution occupation'")->required();
  active->add_option("--eta", eta)->capture_default_str();
  active->add_option("--size", active_size, "active-space size for inside-out selection");
  active->add_option("--out", active_out);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Parse and check an FCIDUMP file");
  validate->add_option("hamiltonian", validate_path)->required();

  auto* defaults = app.add_subcommand("defaults", "Print the default run configuration");

  try {
    app.parse(argc, argv);
    if (run->parsed() && !config_path.empty()) {
      std::vector<std::string> args{argv[0], "run"};
      for (auto& f : config_file_flags(config_path)) args.push_back(std::move(f));
      for (int i = 1; i < argc; ++i)
        if (std::string(argv[i]) != "run") args.emplace_back(argv[i]);
      std::vector<const char*> raw;
      for (const auto& a : args) raw.push_back(a.c_str());
      cfg = sqd::RunConfig{};
      app.clear();
      app.parse(static_cast<int>(raw.size()), raw.data());
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  apply_thread_count();

  if (run->parsed()) {
    if (!replay_path.empty()) {
      const auto previous = sqd::load_record(replay_path);
      auto replay = sqd::run_config_from_json(previous.config);
      replay.out = cfg.out;
      return run_record(replay);
    }
    return run_record(cfg);
  }
  if (sample->parsed()) {
    if (sample_cfg.sampler == "counts-file") throw sqd::ConfigError("sample: choose lucj or ci-vector");
    sample_cfg.validate(true);
    const auto H = sqd::parse_fcidump(sample_cfg.hamiltonian, true);
    std::ostringstream text;
    sqd::write_counts(sqd::prepare_counts(sample_cfg, H), text);
    write_text(sample_cfg.out, text.str());
    return kOk;
  }
  if (reaction->parsed()) {
    const auto product = sqd::load_record(product_path);
    const auto reactant = sqd::load_record(reactant_path);
    const auto report = sqd::reaction(product, reactant, allow_mismatch);
    if (report.method_mismatch)
      std::cerr << "sqd: warning: comparing '" << report.product_method << "' with '" << report.reactant_method
                << "'\n";
    write_text(reaction_out, sqd::to_json(report).dump(2) + "\n");
    return kOk;
  }
  if (scan->parsed()) {
    const auto rows = sqd::scan(scan_cfg, scan_template, sizes, methods);
    write_text(scan_cfg.out, sqd::scan_csv(rows));
    return kOk;
  }
  if (active->parsed()) {
    const auto ranking = sqd::read_orbital_data(orbital_path);
    sqd::Json out;
    std::vector<int> kept;
    for (int pos : sqd::filter_contributions(ranking.contributions, eta))
      kept.push_back(ranking.indices[static_cast<std::size_t>(pos)]);
    out["eta"] = eta;
    out["ranked"] = kept;
    if (active_size > 0) {
      const auto sel = sqd::select_inside_out(ranking.occupations, active_size);
      const auto to_index = [&](const std::vector<int>& positions) {
        std::vector<int> ids;
        for (int p : positions) ids.push_back(ranking.indices[static_cast<std::size_t>(p)]);
        return ids;
      };
      out["size"] = active_size;
      out["orbitals"] = to_index(sel.orbitals);
      out["forced"] = to_index(sel.forced);
      out["hono"] = ranking.indices[static_cast<std::size_t>(sel.hono)];
      out["luno"] = ranking.indices[static_cast<std::size_t>(sel.luno)];
      out["electrons"] = sel.electrons();
      out["fallback"] = sel.fallback;
    }
    write_text(active_out, out.dump(2) + "\n");
    return kOk;
  }
  if (validate->parsed()) {
    const auto H = sqd::parse_fcidump(validate_path, true);
    const auto dim = sqd::binomial(H.n_orb(), H.n_alpha()) * sqd::binomial(H.n_orb(), H.n_beta());
    sqd::Json out{{"n_orb", H.n_orb()},
                  {"n_alpha", H.n_alpha()},
                  {"n_beta", H.n_beta()},
                  {"core_energy", H.core_energy()},
                  {"sector_dimension", dim},
                  {"hf_energy", sqd::diagonal_element(H, H.hartree_fock())}};
    std::cout << out.dump(2) << "\n";
    return kOk;
  }
  if (defaults->parsed()) {
    std::cout << sqd::to_json(sqd::RunConfig{}).dump(2) << "\n";
    return kOk;
  }
  return kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const sqd::ParseError& e) {
    std::cerr << "sqd: " << e.what() << "\n";
    return kConfig;
  } catch (const sqd::ConfigError& e) {
    std::cerr << "sqd: " << e.what() << "\n";
    return kConfig;
  } catch (const sqd::ConvergenceError& e) {
    std::cerr << "sqd: " << e.what() << "\n";
    return kNumerical;
  } catch (const sqd::CapacityError& e) {
    std::cerr << "sqd: " << e.what() << "\n";
    return kCapacity;
  } catch (const sqd::EmptySampleError& e) {
    std::cerr << "sqd: " << e.what() << "\n";
    return kEmptySample;
  } catch (const CLI::Error& e) {
    std::cerr << "sqd: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "sqd: " << e.what() << "\n";
    return kFailure;
  }
}

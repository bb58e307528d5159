// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <bit>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sqd/pipeline.hpp"
#include "support/brute_force.hpp"

using namespace sqd;
using cplx = std::complex<double>;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

std::string data(const std::string& name) { return std::string(SQD_TEST_DATA_DIR) + "/" + name; }

int excitation_degree(const Determinant& x, const Determinant& y) {
  return (std::popcount(x.alpha ^ y.alpha) + std::popcount(x.beta ^ y.beta)) / 2;
}

Eigen::MatrixXd random_antisymmetric(int n, std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < p; ++q) {
      K(p, q) = g(gen);
      K(q, p) = -K(p, q);
    }
  return K;
}

Eigen::MatrixXd random_symmetric(int n, std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd J(n, n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q <= p; ++q) J(p, q) = J(q, p) = g(gen);
  return J;
}

// Lowest eigenvalue by a plain dense solve.
double dense_lowest(const std::vector<double>& m, std::size_t dim) {
  Eigen::MatrixXd A(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m[i * dim + j];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

// Probability that independent flips at rate p leave a string with k ones
// among n bits with exactly k ones.
double weight_kept(int n, int k, double p) {
  double acc = 0.0;
  for (int j = 0; j <= std::min(k, n - k); ++j)
    acc += static_cast<double>(binomial(k, j) * binomial(n - k, j)) * std::pow(p, 2 * j) *
           std::pow(1.0 - p, n - 2 * j);
  return acc;
}

Outcome operator_matrix_oracle() {
  Outcome o;
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + t % 4;
    std::mt19937_64 gen(static_cast<std::uint64_t>(t));
    const int na = 1 + static_cast<int>(gen() % static_cast<std::uint64_t>(n));
    const int nb = 1 + static_cast<int>(gen() % static_cast<std::uint64_t>(n));
    const auto H = sqd::testing::random_hamiltonian(n, na, nb, 1000 + static_cast<std::uint64_t>(t));

    // Every determinant of every sector, element by element.
    const auto all = sqd::testing::all_determinants(n);
    const auto M = sqd::testing::brute_force_matrix(H, all);
    for (std::size_t i = 0; i < all.size(); ++i)
      for (std::size_t j = 0; j < all.size(); ++j)
        worst = std::max(worst, std::abs(matrix_element(H, all[i], all[j]) - M[i * all.size() + j]));

    // The projected operator the solvers actually use, on the target sector.
    const auto basis = sector_basis(n, na, nb);
    const auto B = sqd::testing::brute_force_matrix(H, basis);
    const auto P = ProjectedHamiltonian(H, basis).dense();
    for (std::size_t k = 0; k < P.size(); ++k) worst = std::max(worst, std::abs(P[k] - B[k]));
  }
  o.require(worst <= 1e-12, "max deviation " + fmt(worst));
  o.detail = o.ok ? "max deviation " + fmt(worst) : o.detail;
  return o;
}

Outcome eigensolver_oracle() {
  Outcome o;
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    const std::size_t dim = 200;
    std::mt19937_64 gen(500 + t);
    std::uniform_real_distribution<double> u(-1.0, 1.0), pick(0.0, 1.0);
    std::vector<double> m(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
      m[i * dim + i] = 10.0 * u(gen);
      for (std::size_t j = 0; j < i; ++j)
        if (pick(gen) < 0.05) m[i * dim + j] = m[j * dim + i] = u(gen);
    }
    std::vector<double> diag(dim);
    for (std::size_t i = 0; i < dim; ++i) diag[i] = m[i * dim + i];
    DavidsonOptions opts;
    opts.residual_tol = 1e-9;
    const auto r = davidson_lowest(
        [&](std::span<const double> x, std::span<double> y) {
          for (std::size_t i = 0; i < dim; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < dim; ++j) acc += m[i * dim + j] * x[j];
            y[i] = acc;
          }
        },
        diag, opts);
    o.require(r.converged, "random operator " + std::to_string(t) + " did not converge");
    worst = std::max(worst, std::abs(r.energies[0] - dense_lowest(m, dim)));
  }

  // CI fixtures: the data files plus generated sectors up to 3136 determinants.
  std::vector<ActiveSpaceHamiltonian> fixtures;
  for (const char* f : {"one_orbital.fcidump", "chain_2o.fcidump", "chain_4o.fcidump", "chain_6o.fcidump"})
    fixtures.push_back(parse_fcidump(data(f), true));
  fixtures.push_back(sqd::testing::random_hamiltonian(2, 1, 1, 1));
  fixtures.push_back(sqd::testing::random_hamiltonian(4, 2, 2, 2));
  fixtures.push_back(sqd::testing::molecular_hamiltonian(5, 3, 2, 3));
  fixtures.push_back(sqd::testing::molecular_hamiltonian(7, 3, 3, 4));
  fixtures.push_back(sqd::testing::molecular_hamiltonian(8, 3, 3, 5));
  for (const auto& H : fixtures) {
    const auto basis = sector_basis(H.n_orb(), H.n_alpha(), H.n_beta());
    if (basis.size() > 4096) continue;
    const ProjectedHamiltonian P(H, basis);
    DavidsonOptions opts;
    opts.residual_tol = 1e-9;
    const auto r = davidson_lowest([&](std::span<const double> x, std::span<double> y) { P.apply(x, y); },
                                   P.diagonal(), opts);
    o.require(r.converged, "fixture with " + std::to_string(basis.size()) + " determinants did not converge");
    const auto fci = fci_ground_state(H);
    const double dense = dense_lowest(sqd::testing::brute_force_matrix(H, basis), basis.size());
    worst = std::max({worst, std::abs(r.energies[0] - dense), std::abs(fci.energy - dense)});
  }
  o.require(worst <= 1e-9, "max deviation " + fmt(worst) + " Ha");
  if (o.ok) o.detail = "max deviation " + fmt(worst) + " Ha";
  return o;
}

Outcome sqd_fci_convergence() {
  Outcome o;
  double full = 0.0, partial = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed)
    for (auto [n, ne] : {std::pair{2, 1}, std::pair{4, 2}}) {
      const auto H = sqd::testing::random_hamiltonian(n, ne, ne, 40 + seed);
      const auto fci = fci_ground_state(H);
      RecoveryConfig cfg;
      cfg.seed = seed;
      const auto big = sample_counts(n, fci.basis, fci.coefficients, 100'000, seed);
      full = std::max(full, std::abs(sqd_ground_state(H, big, cfg).energy - fci.energy));
      const auto small = sample_counts(n, fci.basis, fci.coefficients, 1'000, seed);
      partial = std::max(partial, std::abs(sqd_ground_state(H, small, cfg).energy - fci.energy));
    }
  o.require(full <= 1e-8, "1e5 shots: deviation " + fmt(full));
  o.require(partial <= 1e-4, "1e3 shots: deviation " + fmt(partial));
  o.detail = "1e5 shots " + fmt(full) + " Ha, 1e3 shots " + fmt(partial) + " Ha";
  return o;
}

Outcome variational_chain() {
  Outcome o;
  const double slack = 1e-9;
  int fixtures = 0;
  for (const char* f : {"chain_2o.fcidump", "chain_4o.fcidump", "chain_6o.fcidump"})
    for (const char* sampler : {"ci-vector", "lucj"})
      for (double flip : {0.0, 0.02}) {
        RunConfig c;
        c.hamiltonian = data(f);
        c.sampler = sampler;
        c.flip_prob = flip;
        c.shots = 20'000;
        c.epsilon1 = 1e-2;
        const auto H = parse_fcidump(c.hamiltonian, true);
        const auto energy = [&](const char* method) {
          c.method = method;
          return run(c, H).energy;
        };
        const double fci = energy("fci"), sqd_e = energy("sqd"), ext_sqd = energy("ext-sqd");
        const double hci = energy("hci"), ext_hci = energy("ext-hci");
        const double hf = diagonal_element(H, H.hartree_fock());
        const std::string where = std::string(f) + "/" + sampler + "/p=" + fmt(flip);
        o.require(fci <= ext_sqd + slack && ext_sqd <= sqd_e + slack, where + ": FCI <= ExtSQD <= SQD violated");
        o.require(fci <= ext_hci + slack && ext_hci <= hci + slack && hci <= hf + slack,
                  where + ": FCI <= ExtHCI <= HCI <= HF violated");
        ++fixtures;
      }
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto H = sqd::testing::molecular_hamiltonian(7, 3, 3, 60 + seed);
    const double fci = fci_ground_state(H).energy;
    const auto hci = hci_variational(H, {1e-2});
    const double e_ext_hci = ext_hci(H, hci).energy;
    const auto fci_state = fci_ground_state(H);
    const auto counts = sample_counts(7, fci_state.basis, fci_state.coefficients, 300, seed);
    RecoveryConfig cfg;
    cfg.samples_per_batch = 100;
    cfg.seed = seed;
    const auto sqd_r = sqd_ground_state(H, counts, cfg);
    const double ext = ext_sqd(H, sqd_r).energy;
    const double hf = diagonal_element(H, H.hartree_fock());
    o.require(fci <= ext + slack && ext <= sqd_r.energy + slack, "generated (6e,7o): SQD chain violated");
    o.require(fci <= e_ext_hci + slack && e_ext_hci <= hci.energy + slack && hci.energy <= hf + slack,
              "generated (6e,7o): HCI chain violated");
    ++fixtures;
  }
  if (o.ok) o.detail = std::to_string(fixtures) + " fixture/sampler combinations";
  return o;
}

Outcome recovery_efficacy() {
  Outcome o;
  const double p = 0.05;
  const std::uint64_t shots = 100'000;
  double worst = 0.0, worst_sigma = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto H = sqd::testing::molecular_hamiltonian(4, 2, 2, 70 + seed);
    const auto fci = fci_ground_state(H);
    const auto clean = sample_counts(4, fci.basis, fci.coefficients, shots, seed);
    const auto noisy = apply_readout_noise(clean, {p, seed});
    RecoveryConfig cfg;
    cfg.seed = seed;
    const double e_clean = sqd_ground_state(H, clean, cfg).energy;
    const double e_noisy = sqd_ground_state(H, noisy, cfg).energy;
    worst = std::max(worst, std::abs(e_noisy - e_clean));

    const auto [valid, invalid] = partition_by_hamming(noisy, 2, 2);
    const auto occupations = empirical_occupations(valid);
    const auto recovered = recover_configurations(invalid, occupations, 2, 2, seed);
    o.require(recovered.total_shots() == invalid.total_shots(), "recovery changed the shot count");
    for (const auto& [d, c] : recovered.entries())
      o.require(std::popcount(d.alpha) == 2 && std::popcount(d.beta) == 2, "recovered shot outside the sector");

    const double q = 1.0 - weight_kept(4, 2, p) * weight_kept(4, 2, p);
    const double observed = static_cast<double>(invalid.total_shots()) / static_cast<double>(shots);
    const double sigma = std::sqrt(q * (1.0 - q) / static_cast<double>(shots));
    worst_sigma = std::max(worst_sigma, std::abs(observed - q) / sigma);
  }
  o.require(worst <= 1e-4, "noisy vs clean SQD deviation " + fmt(worst));
  o.require(worst_sigma <= 5.0, "forbidden fraction off by " + fmt(worst_sigma) + " sigma");
  if (o.ok) o.detail = "energy gap " + fmt(worst) + " Ha, forbidden fraction within " + fmt(worst_sigma) + " sigma";
  return o;
}

Outcome extension_thresholds() {
  Outcome o;
  const ExtensionThresholds defaults;
  o.require(defaults.discard_below == 1e-2 && defaults.doubles_above == 1e-1, "threshold defaults changed");
  const int n = 6;
  const Determinant d0{0b000111, 0b000111};
  const Determinant d1{0b001011, 0b000111};
  const Determinant d2{0b111000, 0b111000};
  const std::vector<double> c{0.2, 0.05, 0.005};
  const auto out = extend_subspace(c, {d0, d1, d2}, n, defaults);
  const std::set<Determinant> got(out.begin(), out.end());
  std::set<Determinant> expected;
  for (const auto& e : sector_basis(n, 3, 3))
    if (excitation_degree(e, d0) <= 2 || excitation_degree(e, d1) <= 1) expected.insert(e);
  o.require(got == expected, "extended set differs from singles+doubles / singles / dropped");
  o.require(!got.contains(d2), "the 0.005 configuration was kept");
  if (o.ok) o.detail = std::to_string(got.size()) + " configurations, as expected";
  return o;
}

Outcome lucj_sampler() {
  Outcome o;
  {
    const int n = 5;
    LUCJParams params;
    params.layers.push_back({Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(2 * n, 2 * n), false});
    const auto counts = sample_counts(lucj_state(params, n, 2, 2), 10'000, 1);
    o.require(counts.size() == 1 && counts.count(hartree_fock(2, 2)) == 10'000, "zero parameters sampled non-RHF");
  }
  double rdm_err = 0.0;
  {
    std::mt19937_64 gen(11);
    for (auto [n, na, nb] : {std::tuple{4, 2, 2}, std::tuple{6, 3, 2}}) {
      const Eigen::MatrixXd K = random_antisymmetric(n, gen);
      LUCJParams params;
      params.layers.push_back({K, Eigen::MatrixXd::Zero(2 * n, 2 * n), false});
      const auto st = lucj_state(params, n, na, nb);
      std::map<sqd::testing::FockState, cplx> psi;
      for (std::size_t i = 0; i < st.dimension(); ++i) psi[sqd::testing::to_fock(st.determinant(i), n)] = st.amplitudes[i];
      const Eigen::MatrixXd U = K.exp();
      for (auto [offset, n_occ] : {std::pair{0, na}, std::pair{n, nb}}) {
        Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
        for (int k = 0; k < n_occ; ++k) P(k, k) = 1.0;
        const Eigen::MatrixXd ref = U * P * U.transpose();
        for (int p = 0; p < n; ++p)
          for (int q = 0; q < n; ++q) {
            cplx g = 0.0;
            for (const auto& [x, c] : psi) {
              auto s = x;
              double sign = 1.0;
              if (!sqd::testing::annihilate(s, offset + q, sign) || !sqd::testing::create(s, offset + p, sign)) continue;
              if (auto it = psi.find(s); it != psi.end()) g += std::conj(it->second) * sign * c;
            }
            rdm_err = std::max(rdm_err, std::abs(g - cplx(ref(p, q), 0.0)));
          }
      }
    }
  }
  o.require(rdm_err <= 1e-9, "density matrix deviation " + fmt(rdm_err));
  double tv = 0.0;
  {
    std::mt19937_64 gen(12);
    const int n = 5;
    LUCJParams params;
    for (int l = 0; l < 2; ++l)
      params.layers.push_back({random_antisymmetric(n, gen), random_symmetric(2 * n, gen), l == 0});
    const auto st = lucj_state(params, n, 2, 2);
    const std::uint64_t shots = 1'000'000;
    const auto counts = sample_counts(st, shots, 12);
    for (std::size_t i = 0; i < st.dimension(); ++i) {
      const double prob = std::norm(st.amplitudes[i]) / (st.norm() * st.norm());
      tv += std::abs(prob - static_cast<double>(counts.count(st.determinant(i))) / static_cast<double>(shots));
    }
    tv *= 0.5;
    o.require(st.dimension() <= 100, "sector larger than 100");
  }
  o.require(tv < 0.01, "total variation " + fmt(tv));
  if (o.ok) o.detail = "RDM deviation " + fmt(rdm_err) + ", TV " + fmt(tv);
  return o;
}

Outcome hci_limits() {
  Outcome o;
  double worst = 0.0, largest_rise = 0.0;
  std::vector<ActiveSpaceHamiltonian> fixtures;
  for (const char* f : {"chain_2o.fcidump", "chain_4o.fcidump", "chain_6o.fcidump"})
    fixtures.push_back(parse_fcidump(data(f), true));
  fixtures.push_back(sqd::testing::random_hamiltonian(4, 2, 1, 80));
  fixtures.push_back(sqd::testing::molecular_hamiltonian(7, 3, 3, 81));
  fixtures.push_back(sqd::testing::molecular_hamiltonian(8, 4, 4, 82));
  for (const auto& H : fixtures) {
    const double fci = fci_ground_state(H).energy;
    double previous = std::numeric_limits<double>::infinity();
    for (double eps : {1e-2, 1e-3, 1e-4, 0.0}) {
      const double e = hci_variational(H, {eps}).energy;
      // Spaces that differ only by uncoupled determinants have equal energies
      // in exact arithmetic; compare at floating-point resolution.
      if (std::isfinite(previous)) {
        const double resolution = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(previous);
        largest_rise = std::max(largest_rise, e - previous);
        o.require(e <= previous + resolution, "energy rose by " + fmt(e - previous) + " at epsilon1=" + fmt(eps));
      }
      previous = e;
    }
    worst = std::max(worst, std::abs(previous - fci));
  }
  o.require(worst <= 1e-10, "epsilon1=0 deviation " + fmt(worst));
  if (o.ok)
    o.detail = "epsilon1=0 deviation " + fmt(worst) + " Ha on sectors up to 4900, largest rise " + fmt(largest_rise);
  return o;
}

Outcome protocol_defaults() {
  Outcome o;
  const Json j = Json::parse(to_json(RunConfig{}).dump());
  o.require(j.at("iterations") == 10, "iterations");
  o.require(j.at("batches") == 16, "batches");
  o.require(j.at("shots") == 6'000'000, "shots");
  o.require(j.at("discard-below") == 1e-2, "discard-below");
  o.require(j.at("doubles-above") == 1e-1, "doubles-above");
  o.require(j.at("eta") == 1e-3, "eta");
  const RecoveryConfig r;
  o.require(r.iterations == 10 && r.batches == 16, "recovery defaults");
  if (o.ok) o.detail = "K=10 B=16 shots=6e6 thresholds 1e-2/1e-1 eta=1e-3";
  return o;
}

Outcome reaction_arithmetic() {
  Outcome o;
  RunConfig c;
  c.method = "fci";
  c.hamiltonian = data("chain_4o.fcidump");
  const auto a = record_from_json(Json::parse(dump_record(run(c))));
  c.hamiltonian = data("chain_6o.fcidump");
  const auto b = record_from_json(Json::parse(dump_record(run(c))));
  const auto ab = reaction(a, b), ba = reaction(b, a);
  const double expected_h = a.energy - b.energy;
  const double expected_ev = expected_h * 27.211386245988;
  o.require(std::bit_cast<std::uint64_t>(ab.delta_hartree) == std::bit_cast<std::uint64_t>(expected_h), "hartree bits");
  o.require(std::bit_cast<std::uint64_t>(ab.delta_ev) == std::bit_cast<std::uint64_t>(expected_ev), "eV bits");
  o.require(std::bit_cast<std::uint64_t>(ab.delta_hartree) == std::bit_cast<std::uint64_t>(-ba.delta_hartree),
            "antisymmetry (hartree)");
  o.require(std::bit_cast<std::uint64_t>(ab.delta_ev) == std::bit_cast<std::uint64_t>(-ba.delta_ev),
            "antisymmetry (eV)");
  ResultRecord p, r;
  p.method = r.method = "fci";
  p.energy = -5.0;
  r.energy = -3.0;
  o.require(reaction(p, r).delta_ev == -2.0 * 27.211386245988, "-5 - (-3) Ha in eV");
  if (o.ok) o.detail = "dE = " + fmt(ab.delta_ev) + " eV, bit-exact and antisymmetric";
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double time_limit;  // seconds, 0 for none
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "operator-matrix oracle", 30.0, operator_matrix_oracle},
      {2, "eigensolver oracle", 60.0, eigensolver_oracle},
      {3, "SQD to FCI convergence", 120.0, sqd_fci_convergence},
      {4, "variational chain", 0.0, variational_chain},
      {5, "recovery efficacy", 0.0, recovery_efficacy},
      {6, "extension thresholds", 0.0, extension_thresholds},
      {7, "LUCJ sampler", 0.0, lucj_sampler},
      {8, "HCI limits", 0.0, hci_limits},
      {9, "protocol defaults", 0.0, protocol_defaults},
      {10, "reaction arithmetic", 0.0, reaction_arithmetic},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out.ok = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (out.ok && c.time_limit > 0.0 && seconds >= c.time_limit) {
      out.ok = false;
      out.detail = "took " + fmt(seconds) + " s, limit " + fmt(c.time_limit) + " s";
    }
    std::printf("[%s] criterion %2d: %-26s %7.2f s  %s\n", out.ok ? "PASS" : "FAIL", c.id, c.name, seconds,
                out.detail.c_str());
    std::fflush(stdout);
    if (!out.ok) ++failures;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sqd/errors.hpp"

namespace sqd {

/// Per-orbital data from an upstream density-difference / natural-orbital analysis.
struct OrbitalRanking {
  std::vector<int> indices;
  std::vector<double> contributions;
  std::vector<double> occupations;  ///< natural-orbital occupations in [0, 2]

  std::size_t size() const { return indices.size(); }
};

/// Reads lines of `index contribution occupation`; blank lines and '#' comments are skipped.
inline OrbitalRanking read_orbital_data(std::istream& in) {
  OrbitalRanking r;
  std::set<int> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string first;
    if (!(fields >> first)) continue;
    fields.seekg(0);
    const std::string where = "orbital data line " + std::to_string(line_no) + ": ";
    int index = 0;
    double contribution = 0.0, occupation = 0.0;
    std::string extra;
    if (!(fields >> index >> contribution >> occupation) || (fields >> extra))
      throw ParseError(where + "expected 'index contribution occupation'");
    if (index < 0) throw ParseError(where + "negative orbital index");
    if (!seen.insert(index).second) throw ParseError(where + "duplicate orbital index " + std::to_string(index));
    if (!(contribution >= 0.0)) throw ParseError(where + "contribution must be >= 0");
    if (!(occupation >= 0.0 && occupation <= 2.0)) throw ParseError(where + "occupation must lie in [0, 2]");
    r.indices.push_back(index);
    r.contributions.push_back(contribution);
    r.occupations.push_back(occupation);
  }
  if (r.indices.empty()) throw ParseError("orbital data: no orbitals");
  return r;
}

inline OrbitalRanking read_orbital_data(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("orbital data: cannot open '" + path + "'");
  return read_orbital_data(in);
}

inline constexpr double kDefaultContributionThreshold = 1e-3;

/// Positions with score >= eta, by descending score, ties by position.
inline std::vector<int> filter_contributions(const std::vector<double>& scores,
                                             double eta = kDefaultContributionThreshold) {
  if (!(eta >= 0.0)) throw ConfigError("filter_contributions: eta must be >= 0");
  std::vector<int> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!(scores[i] >= 0.0)) throw ConfigError("filter_contributions: scores must be >= 0");
    if (scores[i] >= eta) out.push_back(static_cast<int>(i));
  }
  std::stable_sort(out.begin(), out.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  return out;
}

struct FractionalBand {
  double low = 0.02;
  double high = 1.98;
  bool contains(double x) const { return x >= low && x <= high; }
};

struct ActiveSelection {
  std::vector<int> orbitals;  ///< selected positions, ascending
  std::vector<int> forced;    ///< fractionally occupied positions included up front
  int hono = -1;
  int luno = -1;
  int occupied_selected = 0;  ///< selected orbitals with occupation >= 1
  bool fallback = false;      ///< one side ran out and the other side made up the difference

  int electrons() const { return 2 * occupied_selected; }
};

/// Grows an active space outward from the HONO/LUNO pair.
///
/// Orbitals are ranked by descending occupation (ties by position). The
/// occupied side takes ceil(size/2) orbitals walking down from HONO, the
/// virtual side floor(size/2) walking up from LUNO. Orbitals in the
/// fractional band are always taken first. If a side is too short the
/// other side supplies the rest and `fallback` is set.
inline ActiveSelection select_inside_out(const std::vector<double>& occupations, int target_size,
                                         const FractionalBand& band = {}) {
  const int n = static_cast<int>(occupations.size());
  if (target_size < 2 || target_size > n) throw ConfigError("select_inside_out: need 2 <= size <= orbital count");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return occupations[static_cast<std::size_t>(a)] > occupations[static_cast<std::size_t>(b)];
  });
  int h = -1;
  for (int k = 0; k < n; ++k)
    if (occupations[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] >= 1.0) h = k;
  if (h < 0 || h + 1 >= n) throw ConfigError("select_inside_out: need at least one occupied and one virtual orbital");

  // Occupied side walks outward from HONO, virtual side from LUNO.
  std::vector<int> occ_side, vir_side;
  for (int k = h; k >= 0; --k) occ_side.push_back(order[static_cast<std::size_t>(k)]);
  for (int k = h + 1; k < n; ++k) vir_side.push_back(order[static_cast<std::size_t>(k)]);

  ActiveSelection sel;
  sel.hono = order[static_cast<std::size_t>(h)];
  sel.luno = order[static_cast<std::size_t>(h + 1)];

  std::set<int> chosen;
  int forced_occ = 0, forced_vir = 0;
  for (int p = 0; p < n; ++p)
    if (band.contains(occupations[static_cast<std::size_t>(p)])) {
      sel.forced.push_back(p);
      chosen.insert(p);
      (occupations[static_cast<std::size_t>(p)] >= 1.0 ? forced_occ : forced_vir)++;
    }
  if (static_cast<int>(sel.forced.size()) > target_size)
    throw ConfigError("select_inside_out: more fractionally occupied orbitals than the target size");

  int want_occ = std::max((target_size + 1) / 2, forced_occ);
  int want_vir = target_size - want_occ;
  if (want_vir < forced_vir) {
    want_vir = forced_vir;
    want_occ = target_size - want_vir;
  }
  const int n_occ = static_cast<int>(occ_side.size());
  const int n_vir = static_cast<int>(vir_side.size());
  if (want_occ > n_occ) {
    want_vir += want_occ - n_occ;
    want_occ = n_occ;
    sel.fallback = true;
  }
  if (want_vir > n_vir) {
    want_occ += want_vir - n_vir;
    want_vir = n_vir;
    sel.fallback = true;
  }

  const auto take = [&](const std::vector<int>& side, int quota) {
    int have = 0;
    for (int p : side)
      if (chosen.contains(p)) ++have;
    for (int p : side) {
      if (have >= quota) break;
      if (chosen.insert(p).second) ++have;
    }
  };
  take(occ_side, want_occ);
  take(vir_side, want_vir);

  sel.orbitals.assign(chosen.begin(), chosen.end());
  for (int p : sel.orbitals)
    if (occupations[static_cast<std::size_t>(p)] >= 1.0) ++sel.occupied_selected;
  return sel;
}

}  // namespace sqd

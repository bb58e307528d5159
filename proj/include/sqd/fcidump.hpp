#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sqd/errors.hpp"
#include "sqd/hamiltonian.hpp"

namespace sqd {

namespace detail {

inline std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

inline double parse_fortran_double(std::string tok) {
  std::replace(tok.begin(), tok.end(), 'D', 'E');
  std::replace(tok.begin(), tok.end(), 'd', 'e');
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') throw ParseError("FCIDUMP: invalid number '" + tok + "'");
  return v;
}

inline int parse_int(const std::string& tok, const char* what) {
  int v = 0;
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) throw ParseError(std::string("FCIDUMP: invalid ") + what + " '" + tok + "'");
  return v;
}

// Canonical representative of the 8-fold orbit of (pq|rs).
inline std::array<int, 4> canonical_eri_index(int p, int q, int r, int s) {
  if (p < q) std::swap(p, q);
  if (r < s) std::swap(r, s);
  if (std::pair{p, q} < std::pair{r, s}) {
    std::swap(p, r);
    std::swap(q, s);
  }
  return {p, q, r, s};
}

inline std::string shortest_repr(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace detail

/// Reads an FCIDUMP document.
///
/// The namelist header must declare NORB, NELEC and MS2; ORBSYM, ISYM and
/// any other keys are accepted and ignored. Integral lines are
/// `value p q r s` with 1-based orbital indices.
inline ActiveSpaceHamiltonian parse_fcidump(std::istream& in) {
  std::string header;
  std::string line;
  bool closed = false;
  bool opened = false;
  while (std::getline(in, line)) {
    const std::string u = detail::upper(line);
    if (!opened) {
      const auto pos = u.find("&FCI");
      if (pos == std::string::npos) {
        if (u.find_first_not_of(" \t\r") == std::string::npos) continue;
        throw ParseError("FCIDUMP: missing &FCI header");
      }
      opened = true;
      header += u.substr(pos + 4) + ",";
    } else {
      header += u + ",";
    }
    const std::string& h = header;
    if (h.find("&END") != std::string::npos || h.find('/') != std::string::npos) {
      closed = true;
      break;
    }
  }
  if (!opened || !closed) throw ParseError("FCIDUMP: malformed header (missing &FCI ... &END)");
  header = header.substr(0, std::min(header.find("&END"), header.find('/')));

  // Tokenize "KEY=v1,v2,KEY2=..." into key -> first value.
  std::map<std::string, std::string> keys;
  {
    std::string cleaned;
    for (char c : header) cleaned += (c == ',' || c == '\t' || c == '\r') ? ' ' : c;
    std::istringstream ts(cleaned);
    std::string tok;
    std::string current;
    std::vector<std::string> tokens;
    while (ts >> tok) tokens.push_back(tok);
    // Re-split tokens around '='.
    std::vector<std::string> parts;
    for (const auto& t : tokens) {
      std::size_t start = 0;
      while (true) {
        const auto eq = t.find('=', start);
        if (eq == std::string::npos) {
          if (start < t.size()) parts.push_back(t.substr(start));
          break;
        }
        if (eq > start) parts.push_back(t.substr(start, eq - start));
        parts.emplace_back("=");
        start = eq + 1;
      }
    }
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (parts[i] == "=") {
        if (i == 0 || i + 1 >= parts.size() || parts[i + 1] == "=")
          throw ParseError("FCIDUMP: malformed header assignment");
        current = parts[i - 1];
        keys[current] = parts[i + 1];
      }
    }
  }
  for (const char* k : {"NORB", "NELEC", "MS2"})
    if (!keys.contains(k)) throw ParseError(std::string("FCIDUMP: header is missing ") + k);

  const int norb = detail::parse_int(keys["NORB"], "NORB");
  const int nelec = detail::parse_int(keys["NELEC"], "NELEC");
  const int ms2 = detail::parse_int(keys["MS2"], "MS2");
  if (norb < 1 || norb > kMaxOrbitals) throw ParseError("FCIDUMP: NORB must be in [1, 64]");
  if (nelec < 0 || ((nelec + ms2) % 2) != 0 || std::abs(ms2) > nelec)
    throw ParseError("FCIDUMP: inconsistent electron/spin count");
  const int n_alpha = (nelec + ms2) / 2;
  const int n_beta = (nelec - ms2) / 2;
  if (n_alpha <= 0 || n_beta <= 0 || n_alpha > norb || n_beta > norb)
    throw ParseError("FCIDUMP: inconsistent electron/spin count");

  ActiveSpaceHamiltonian H(norb, n_alpha, n_beta);
  std::map<std::array<int, 4>, double> seen;
  auto record = [&](std::array<int, 4> key, double v) {
    auto [it, inserted] = seen.emplace(key, v);
    if (!inserted && std::abs(it->second - v) > 1e-10)
      throw ParseError("FCIDUMP: duplicate inconsistent entry for index (" + std::to_string(key[0] + 1) + " " +
                       std::to_string(key[1] + 1) + " " + std::to_string(key[2] + 1) + " " +
                       std::to_string(key[3] + 1) + ")");
  };

  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string vtok;
    if (!(ls >> vtok)) continue;
    std::array<std::string, 4> itok;
    for (auto& t : itok)
      if (!(ls >> t)) throw ParseError("FCIDUMP: integral line " + std::to_string(line_no) + " has too few fields");
    std::string extra;
    if (ls >> extra) throw ParseError("FCIDUMP: integral line " + std::to_string(line_no) + " has extra fields");
    const double v = detail::parse_fortran_double(vtok);
    std::array<int, 4> idx{};
    for (int k = 0; k < 4; ++k) {
      idx[static_cast<std::size_t>(k)] = detail::parse_int(itok[static_cast<std::size_t>(k)], "orbital index");
      const int x = idx[static_cast<std::size_t>(k)];
      if (x < 0 || x > norb) throw ParseError("FCIDUMP: index out of range [1, NORB] on line " + std::to_string(line_no));
    }
    const auto [p, q, r, s] = idx;
    if (p == 0 && q == 0 && r == 0 && s == 0) {
      record({-1, -1, -1, -1}, v);
      H.set_core_energy(v);
    } else if (r == 0 && s == 0 && p > 0 && q > 0) {
      record({std::max(p, q) - 1, std::min(p, q) - 1, -1, -1}, v);
      H.set_one_body(p - 1, q - 1, v);
    } else if (q == 0 && r == 0 && s == 0) {
      // Orbital energy line; not part of the Hamiltonian.
    } else if (p > 0 && q > 0 && r > 0 && s > 0) {
      record(detail::canonical_eri_index(p - 1, q - 1, r - 1, s - 1), v);
      H.set_two_body(p - 1, q - 1, r - 1, s - 1, v);
    } else {
      throw ParseError("FCIDUMP: index out of range [1, NORB] on line " + std::to_string(line_no));
    }
  }
  return H;
}

inline ActiveSpaceHamiltonian parse_fcidump(const std::string& text_or_path, bool is_path) {
  if (!is_path) {
    std::istringstream in(text_or_path);
    return parse_fcidump(in);
  }
  std::ifstream in(text_or_path);
  if (!in) throw ConfigError("cannot open FCIDUMP file '" + text_or_path + "'");
  return parse_fcidump(in);
}

/// Writes one representative per symmetry orbit, skipping |value| <= 1e-12.
inline void write_fcidump(const ActiveSpaceHamiltonian& H, std::ostream& out) {
  const int n = H.n_orb();
  out << " &FCI NORB=" << n << ",NELEC=" << H.n_alpha() + H.n_beta() << ",MS2=" << H.n_alpha() - H.n_beta()
      << ",\n  ORBSYM=";
  for (int p = 0; p < n; ++p) out << "1,";
  out << "\n  ISYM=1,\n &END\n";
  auto emit = [&](double v, int p, int q, int r, int s) {
    out << detail::shortest_repr(v) << ' ' << p << ' ' << q << ' ' << r << ' ' << s << '\n';
  };
  for (int p = 0; p < n; ++p)
    for (int q = 0; q <= p; ++q)
      for (int r = 0; r <= p; ++r)
        for (int s = 0; s <= r; ++s) {
          if (std::pair{p, q} < std::pair{r, s}) continue;
          const double v = H.eri(p, q, r, s);
          if (std::abs(v) > 1e-12) emit(v, p + 1, q + 1, r + 1, s + 1);
        }
  for (int p = 0; p < n; ++p)
    for (int q = 0; q <= p; ++q) {
      const double v = H.h(p, q);
      if (std::abs(v) > 1e-12) emit(v, p + 1, q + 1, 0, 0);
    }
  emit(H.core_energy(), 0, 0, 0, 0);
}

inline std::string to_fcidump_string(const ActiveSpaceHamiltonian& H) {
  std::ostringstream os;
  write_fcidump(H, os);
  return os.str();
}

}  // namespace sqd

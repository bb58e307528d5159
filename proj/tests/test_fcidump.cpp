#include <gtest/gtest.h>

#include <sstream>

#include "sqd/fcidump.hpp"
#include "support/brute_force.hpp"

using namespace sqd;

namespace {

ActiveSpaceHamiltonian parse(const std::string& text) {
  std::istringstream in(text);
  return parse_fcidump(in);
}

}  // namespace

TEST(Fcidump, DirectFieldMapping) {
  const auto H = parse(
      " &FCI NORB=1,NELEC=2,MS2=0,\n  ORBSYM=1,\n  ISYM=1,\n &END\n"
      "  0.5 1 1 1 1\n -1.0 1 1 0 0\n 0.25 0 0 0 0\n");
  EXPECT_EQ(H.n_orb(), 1);
  EXPECT_EQ(H.n_alpha(), 1);
  EXPECT_EQ(H.n_beta(), 1);
  EXPECT_DOUBLE_EQ(H.h(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(H.eri(0, 0, 0, 0), 0.5);
  EXPECT_DOUBLE_EQ(H.core_energy(), 0.25);
}

TEST(Fcidump, TwoBodyEntryFillsSymmetryImages) {
  const auto H = parse("&FCI NORB=2,NELEC=2,MS2=0 &END\n0.7 1 2 1 2\n");
  EXPECT_DOUBLE_EQ(H.eri(0, 1, 0, 1), 0.7);
  EXPECT_DOUBLE_EQ(H.eri(1, 0, 0, 1), 0.7);
  EXPECT_DOUBLE_EQ(H.eri(0, 1, 1, 0), 0.7);
  EXPECT_DOUBLE_EQ(H.eri(1, 0, 1, 0), 0.7);
  EXPECT_DOUBLE_EQ(H.eri(0, 0, 1, 1), 0.0);
  H.validate();
}

TEST(Fcidump, SpinCountsFromHeader) {
  const auto H = parse("&FCI NORB=4,NELEC=5,MS2=1,\n/\n");
  EXPECT_EQ(H.n_alpha(), 3);
  EXPECT_EQ(H.n_beta(), 2);
}

TEST(Fcidump, FortranExponentsAndOrbitalEnergyLines) {
  const auto H = parse("&FCI NORB=2,NELEC=2,MS2=0 &END\n1.5D-01 1 1 1 1\n-0.3 1 0 0 0\n");
  EXPECT_DOUBLE_EQ(H.eri(0, 0, 0, 0), 0.15);
}

TEST(Fcidump, Errors) {
  try {
    parse("&FCI NORB=2,NELEC=3,MS2=0 &END\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("inconsistent electron/spin count"), std::string::npos);
  }
  EXPECT_THROW(parse("NORB=2\n"), ParseError);
  EXPECT_THROW(parse("&FCI NORB=2,NELEC=2 &END\n"), ParseError);
  EXPECT_THROW(parse("&FCI NORB=2,NELEC=2,MS2=0 &END\n0.1 3 1 1 1\n"), ParseError);
  EXPECT_THROW(parse("&FCI NORB=2,NELEC=2,MS2=0 &END\n0.1 1 1\n"), ParseError);
  EXPECT_THROW(parse("&FCI NORB=2,NELEC=2,MS2=0 &END\nabc 1 1 1 1\n"), ParseError);
  EXPECT_THROW(parse("&FCI NORB=2,NELEC=2,MS2=0 &END\n0.1 1 2 1 1\n0.2 2 1 1 1\n"), ParseError);
  EXPECT_THROW(parse("&FCI NORB=2,NELEC=2,MS2=0 &END\n0.1 1 2 0 0\n0.2 2 1 0 0\n"), ParseError);
  // Consistent duplicates are accepted.
  EXPECT_NO_THROW(parse("&FCI NORB=2,NELEC=2,MS2=0 &END\n0.1 1 2 1 1\n0.1 1 1 2 1\n"));
}

TEST(Fcidump, WriteThenParseRoundTripsExactly) {
  for (std::uint64_t seed : {1U, 2U, 3U}) {
    const auto H = sqd::testing::random_hamiltonian(4, 2, 1, seed);
    const auto text = to_fcidump_string(H);
    const auto G = parse(text);
    EXPECT_EQ(G, H);
    EXPECT_EQ(to_fcidump_string(G), text);
  }
}

TEST(Fcidump, WriterEmitsOneEntryPerOrbit) {
  ActiveSpaceHamiltonian H(2, 1, 1);
  H.set_two_body(0, 1, 0, 1, 0.7);
  H.set_one_body(0, 1, 1e-13);
  const auto text = to_fcidump_string(H);
  std::istringstream in(text);
  std::string line;
  int data_lines = 0;
  bool past_header = false;
  while (std::getline(in, line)) {
    if (line.find("&END") != std::string::npos) {
      past_header = true;
      continue;
    }
    if (past_header) ++data_lines;
  }
  EXPECT_EQ(data_lines, 2);  // (21|21) and the core energy
}

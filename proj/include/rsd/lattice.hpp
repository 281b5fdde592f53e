#pragma once
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rsd/models.hpp"

namespace rsd {

using IVec = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

// Integer lattice with symmetric Gram matrix; all verifier arithmetic is
// exact (int64 scans, arbitrary precision for matrix powers).
struct IntLattice {
  IMat gram;

  int rank() const { return static_cast<int>(gram.rows()); }
  void validate() const;  // square + symmetric, throws std::invalid_argument
  std::int64_t q(const IVec& v) const;               // v^T G v
  std::int64_t pair(const IVec& a, const IVec& b) const;  // a^T G b

  // (n_pos, n_neg, n_zero) of the real spectrum, computed exactly via the
  // integer characteristic polynomial and Descartes' rule (all roots real).
  std::array<int, 3> signature() const;

  // q = c (x^2 - d y^2) detection for diagonal rank-2 lattices: returns
  // (c, d) with c > 0, d > 0 when gram = diag(c, -c d).
  std::optional<std::pair<std::int64_t, std::int64_t>> pell_form() const;
};

struct EvennessReport {
  bool even = true;
  int witness = -1;              // basis index with odd square, -1 if even
  std::int64_t value = 0;        // q(e_witness)
};
EvennessReport evenness(const IntLattice& lat);
inline bool is_even(const IntLattice& lat) { return evenness(lat).even; }

struct RepresentResult {
  std::optional<IVec> vec;       // some v with q(v) = value, |entries| <= bound
  bool certified_absent = false;
  std::string method;            // "search" or "congruence"
};
RepresentResult represents(const IntLattice& lat, std::int64_t value, std::int64_t bound);

struct NullVectorsResult {
  // Nonzero isotropic vectors in the box, one representative per +/- pair
  // (first nonzero entry positive).
  std::vector<IVec> vectors;
  bool certified_empty = false;
  std::string certificate;
};
NullVectorsResult null_vectors(const IntLattice& lat, std::int64_t bound);

enum class IsometryClass { elliptic, parabolic, loxodromic, undecided };

// Exact classification of an integer matrix by spectral radius:
// loxodromic if > 1; otherwise M^k with k = lcm{m : phi(m) <= rank} is
// unipotent, giving parabolic (!= I) or elliptic (== I). undecided only if
// the power bound exceeds order_cap.
IsometryClass classify_integer_matrix(const IMat& m, std::int64_t order_cap = 10000);
bool is_unipotent(const IMat& m);
double spectral_radius(const IMat& m);

// Projective direction (p + q sqrt(d) : r), canonical form: d squarefree
// (1 = rational), gcd(p,q,r) = 1, r > 0; r = 0 encodes (1 : 0).
struct SurdDirection {
  std::int64_t p = 1, q = 0, r = 0, d = 1;
  bool operator==(const SurdDirection& o) const;
};
// Direction of the eigenvector with the dominant eigenvalue. pre: 2x2 with
// spectral radius > 1.
SurdDirection dominant_direction(const IMat& m);

struct IsometryScan {
  std::vector<IMat> elements;    // all M with M^T G M = G, |entries| <= bound
  int n_loxodromic = 0;
  int n_distinct_axes = 0;       // distinct dominant eigendirections
  bool parabolic_found = false;  // any enumerated element classifies parabolic
};
IsometryScan isometries(const IntLattice& lat, std::int64_t entry_bound);

struct ParabolicAbsence {
  bool certified = false;        // no rational null direction => no parabolic
  std::string certificate;
  bool scan_clean = true;        // cross-check: no parabolic among enumerated
};
ParabolicAbsence parabolic_absence(const IntLattice& lat, std::int64_t entry_bound);

struct WeylTriviality {
  bool trivial = false;          // no vector of square -2
  bool certified = false;
};
WeylTriviality weyl_trivial(const IntLattice& lat, std::int64_t bound);

// The four appendix conditions plus the evenness report, in one pass.
struct AppendixReport {
  bool even = false;
  bool no_minus_two = false;
  bool minus_two_certified = false;
  bool no_null_vectors = false;
  bool null_certified = false;
  int n_loxodromic = 0;
  int n_distinct_axes = 0;
  bool enough_hyperbolic = false;  // >= 2 loxodromic with distinct axes
  bool parabolic_absent = false;
  bool parabolic_scan_clean = false;
};
AppendixReport appendix_report(const IntLattice& lat, std::int64_t entry_bound);

}  // namespace rsd

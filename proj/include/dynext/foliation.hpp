#pragma once

#include "dynext/system.hpp"

namespace dynext {

// Foliation represented by exact generators: the ideal spanned by the
// differentials of the generating functions.
struct FoliationIdeal {
  SystemPtr system;
  std::vector<Expr> generators;
};

// Closes the generator set under h -> L_F h while the new differential stays
// in state-coordinate span modulo dt and the existing generators.
FoliationIdeal invariantize(const FoliationIdeal& k);

// Generator-list union pruned to a generically independent subset; the
// result is canonical in the argument order.
FoliationIdeal meet(const FoliationIdeal& a, const FoliationIdeal& b);

std::string foliation_fingerprint(const FoliationIdeal& z);
int foliation_rank(const FoliationIdeal& z);

enum class CertStatus { Pass, Fail, NotRepresentable };

struct ZeroDynamicsCertificate {
  CertStatus status = CertStatus::Fail;
  int rho = 0;                      // number of output components
  std::vector<int> kappa;           // relative-degree vector (validated)
  std::vector<int> kappa_by_index;  // literal index-formula reading
  std::vector<int> exit_counts;     // per-level tower exit counts (rho^k)
  std::vector<int> intersection_ranks;
  bool invariance = false;      // closure fixpoint
  bool constant_rank = false;   // intersections have stable rank
  bool closed = false;          // intersections admit exact bases
  bool transversal = false;     // stabilized-level intersection is trivial
  std::vector<Expr> outputs;    // head functions realizing the foliation
  std::optional<RelativeDegreeProfile> profile;  // cross-validation result
  std::string note;
};

// Checks that the (closed) foliation is a regular zero dynamics foliation:
// stable intersection ranks with the augmented derived flag, exact
// intersection bases within the candidate span, trivial stabilized-level
// intersection, and output functions whose relative-degree vector matches
// the index bookkeeping.
ZeroDynamicsCertificate certify_regular_zero_dynamics(const FoliationIdeal& z,
                                                      const ControlSystem& sys);

}  // namespace dynext

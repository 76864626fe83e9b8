#pragma once

#include <optional>

#include "dynext/pfaff.hpp"

namespace dynext {

struct ExtensionArrow;
struct ControlSystem;
using SystemPtr = std::shared_ptr<const ControlSystem>;

enum class LinKind { Linearizable, FailsInvolutivity, FailsControllability };

struct LinearizabilityVerdict {
  LinKind kind = LinKind::Linearizable;
  int level = 0;   // first failing augmented level (involutivity failures)
  int defect = 0;  // its defect
  bool linearizable() const { return kind == LinKind::Linearizable; }
};

// A nonlinear control system in contact form: chart (t, u, x), vector field
// with unit time component, and the ideal generated by dx^i - f^i dt.
// Extended systems keep a link to their parent and the arrow used.
struct ControlSystem {
  ChartPtr chart;
  VectorField field;
  PfaffianSystem contact;
  SystemPtr parent;
  std::shared_ptr<const ExtensionArrow> incoming;
  SamplePoint user_point;  // optional partial base point (by coordinate name)
  uint64_t seed = 0;

  ChartNumerics& numerics() const;
  const DerivedFlag& flag() const;
  const DefectReport& defect_report() const;
  LinearizabilityVerdict verdict() const;
  std::vector<std::shared_ptr<const ExtensionArrow>> history() const;
  int depth() const;

 private:
  mutable std::shared_ptr<ChartNumerics> numerics_;
  mutable std::shared_ptr<const DefectReport> report_;
};

// Assembles the contact ideal dx^i - f^i(x,u) dt. Dynamics may reference
// declared states and inputs only; unknown symbols are reported by name.
SystemPtr build_contact_ideal(const std::vector<std::string>& states,
                              const std::vector<std::string>& inputs,
                              const std::vector<Expr>& dynamics, uint64_t seed,
                              SamplePoint user_point = {});

struct RelativeDegreeProfile {
  std::vector<Expr> outputs;
  std::vector<int> kappas;
  // towers[i] = [h_i, L h_i, ..., L^{kappa_i} h_i]; the last entry is the
  // virtual input value.
  std::vector<std::vector<Expr>> towers;
  SamplePoint base_point;
  double witness = 0;  // |minor| of the decoupling matrix at the base point
};

struct RelDegResult {
  std::optional<RelativeDegreeProfile> profile;
  std::string failure;
};

// Least j with L^j dh carrying input differentials, for each component, then
// the joint nondegeneracy check at a base point.
RelDegResult vector_relative_degree(const std::vector<Expr>& outputs, const ControlSystem& sys);

LinearizabilityVerdict feedback_linearizable(const ControlSystem& sys);

}  // namespace dynext

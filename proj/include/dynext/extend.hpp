#pragma once

#include "dynext/foliation.hpp"

namespace dynext {

struct NotExtendable : std::runtime_error {
  explicit NotExtendable(const std::string& what) : std::runtime_error(what) {}
};

struct InconsistentHistory : std::runtime_error {
  explicit InconsistentHistory(const std::string& what) : std::runtime_error(what) {}
};

// One primitive dynamic extension: the output it was built along, its
// relative degree, which input was replaced, and the fresh names. The
// descriptor is stable under renaming of the fresh coordinates.
struct ExtensionArrow {
  Expr output;  // on the source chart
  int kappa = 0;
  std::string replaced_input;
  std::string new_input;                  // q_k
  std::string new_state;                  // zeta_k, or the retained input when implicit
  bool solved = true;                     // closed-form input elimination applied
  std::optional<Expr> input_substitution; // replaced input as a child-chart expression
  int loss = 1;

  std::string descriptor() const;
};

struct ArrowPlan {
  Expr output;
  int kappa = 0;
  std::vector<Expr> tower;  // h, L h, ..., L^kappa h
  std::string replaced_input;
  bool solvable = false;
  Expr solve_gain;    // a in  L^k h = a * u + b
  Expr solve_offset;  // b
  RelativeDegreeProfile profile;
};

struct Extended {
  SystemPtr system;
  std::shared_ptr<const ExtensionArrow> arrow;
  ZeroDynamicsCertificate certificate;
};

// Phase 1: everything that reads the source system (relative degree, input
// choice, closed-form solve test). Kept separate so planning can run
// serially while constructions run in parallel.
ArrowPlan plan_one_step(const ControlSystem& sys, const Expr& output,
                        const std::string& input_override = "");

// Phase 2: builds the extended system for a plan, verifies the projection
// conditions and certifies the induced foliation on the extension.
Extended apply_one_step(const SystemPtr& sys, const ArrowPlan& plan);

Extended one_step_extension(const SystemPtr& sys, const Expr& output,
                            const std::string& input_override = "");

Extended pure_prolongation(const SystemPtr& sys, const std::string& input);

// Pullback of a base one-form along the extension projection: coefficients
// substituted, the solved-out input differential expanded.
KForm pullback_one_form(const KForm& base_form, const SystemPtr& child,
                        const ExtensionArrow* arrow);

// Def-style projection check: pullback containment of every base generator
// and the covering condition at generic rank = dim of the extension chart.
// A null arrow checks the identity projection.
bool verify_extension(const SystemPtr& child, const SystemPtr& base, const ExtensionArrow* arrow);

struct DecomposedStep {
  SystemPtr from;
  SystemPtr to;
  std::shared_ptr<const ExtensionArrow> arrow;
};

// Replays the extension history as verified one-step arrows, emitting the
// intermediate systems.
std::vector<DecomposedStep> decompose_composite(const SystemPtr& sys);

}  // namespace dynext

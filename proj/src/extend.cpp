#include "dynext/extend.hpp"

#include <sstream>

namespace dynext {

std::string ExtensionArrow::descriptor() const {
  std::ostringstream os;
  os << "h=" << to_string(output) << ";k=" << kappa << ";in=" << replaced_input;
  return os.str();
}

ArrowPlan plan_one_step(const ControlSystem& sys, const Expr& output,
                        const std::string& input_override) {
  RelDegResult rd = vector_relative_degree({output}, sys);
  if (!rd.profile) throw NotExtendable("output has no relative degree: " + rd.failure);
  ArrowPlan plan;
  plan.output = output;
  plan.kappa = rd.profile->kappas[0];
  plan.tower = rd.profile->towers[0];
  plan.profile = *rd.profile;

  const Chart& chart = *sys.chart;
  ChartNumerics& cn = sys.numerics();
  const Expr& alpha = plan.tower.back();

  std::string chosen;
  for (int c = chart.input_begin(); c < chart.input_end(); ++c) {
    const std::string& name = chart.coord(c);
    Expr da = differentiate(alpha, name);
    if (is_zero_expr(da) || cn.is_zero(da)) continue;
    if (!input_override.empty()) {
      if (name == input_override) {
        chosen = name;
        break;
      }
      continue;
    }
    chosen = name;
    break;
  }
  if (chosen.empty())
    throw NotExtendable(input_override.empty()
                            ? "no input appears non-singularly in the top Lie derivative"
                            : "input " + input_override + " does not appear non-singularly");
  plan.replaced_input = chosen;

  Expr gain = differentiate(alpha, chosen);
  Expr offset = sub(alpha, mul(gain, var(chosen)));
  bool gain_free = is_zero_expr(differentiate(gain, chosen)) ||
                   cn.is_zero(differentiate(gain, chosen));
  bool offset_free = is_zero_expr(differentiate(offset, chosen)) ||
                     cn.is_zero(differentiate(offset, chosen));
  plan.solvable = gain_free && offset_free;
  if (plan.solvable) {
    plan.solve_gain = gain;
    plan.solve_offset = offset;
  }
  return plan;
}

namespace {

SystemPtr make_child(const SystemPtr& parent, ChartPtr chart, VectorField field,
                     std::vector<KForm> contact_gens,
                     std::shared_ptr<const ExtensionArrow> arrow) {
  auto child = std::make_shared<ControlSystem>();
  child->chart = chart;
  child->field = std::move(field);
  child->contact.chart = chart;
  child->contact.generators = std::move(contact_gens);
  child->parent = parent;
  child->incoming = std::move(arrow);
  child->user_point = parent->user_point;
  child->seed = parent->seed;
  return child;
}

}  // namespace

Extended apply_one_step(const SystemPtr& sys, const ArrowPlan& plan) {
  const Chart& chart = *sys->chart;
  int k = sys->depth() + 1;
  std::string zeta = "zeta" + std::to_string(k);
  std::string q = "q" + std::to_string(k);
  while (chart.index_of(zeta) >= 0) zeta += "_";
  while (chart.index_of(q) >= 0) q += "_";

  auto arrow = std::make_shared<ExtensionArrow>();
  arrow->output = plan.output;
  arrow->kappa = plan.kappa;
  arrow->replaced_input = plan.replaced_input;
  arrow->new_input = q;
  arrow->solved = plan.solvable;

  std::vector<std::string> inputs = chart.input_names();
  for (std::string& name : inputs)
    if (name == plan.replaced_input) name = q;
  std::vector<std::string> states = chart.state_names();

  SystemPtr child;
  if (plan.solvable) {
    arrow->new_state = zeta;
    Expr beta = div(sub(var(zeta), plan.solve_offset), plan.solve_gain);
    arrow->input_substitution = beta;
    states.push_back(zeta);
    ChartPtr nchart = make_chart(inputs, states);
    VectorField field;
    field.chart = nchart;
    field.components.assign(size_t(nchart->dim()), zero());
    field.components[0] = one();
    std::vector<KForm> gens;
    for (int i = 0; i < chart.n_states; ++i) {
      Expr f = sys->field.components[size_t(chart.state_begin() + i)];
      Expr nf = substitute(f, plan.replaced_input, beta);
      field.components[size_t(nchart->state_begin() + i)] = nf;
      KForm g = coordinate_differential(nchart, states[size_t(i)]);
      g = form_sub(g, form_scale(coordinate_differential(nchart, 0), nf));
      gens.push_back(std::move(g));
    }
    field.components[size_t(nchart->state_begin() + chart.n_states)] = var(q);
    KForm g = coordinate_differential(nchart, zeta);
    g = form_sub(g, form_scale(coordinate_differential(nchart, 0), var(q)));
    gens.push_back(std::move(g));
    child = make_child(sys, nchart, std::move(field), std::move(gens), arrow);
  } else {
    // implicit form: the replaced input is retained as a state and the new
    // constraint d(L^k h) - q dt is adjoined
    arrow->new_state = plan.replaced_input;
    states.push_back(plan.replaced_input);
    ChartPtr nchart = make_chart(inputs, states);
    const Expr& alpha = plan.tower.back();
    Expr drift = lie_scalar(sys->field, alpha);  // inputs carry zero components
    Expr gain = differentiate(alpha, plan.replaced_input);
    Expr c = div(sub(var(q), drift), gain);
    VectorField field;
    field.chart = nchart;
    field.components.assign(size_t(nchart->dim()), zero());
    field.components[0] = one();
    std::vector<KForm> gens;
    for (int i = 0; i < chart.n_states; ++i) {
      Expr f = sys->field.components[size_t(chart.state_begin() + i)];
      field.components[size_t(nchart->state_begin() + i)] = f;
      KForm g = coordinate_differential(nchart, states[size_t(i)]);
      g = form_sub(g, form_scale(coordinate_differential(nchart, 0), f));
      gens.push_back(std::move(g));
    }
    field.components[size_t(nchart->require_index(plan.replaced_input))] = c;
    KForm constraint = differential(nchart, alpha);
    constraint = form_sub(constraint, form_scale(coordinate_differential(nchart, 0), var(q)));
    gens.push_back(std::move(constraint));
    child = make_child(sys, nchart, std::move(field), std::move(gens), arrow);
  }

  if (!verify_extension(child, sys, arrow.get()))
    throw NotExtendable("constructed extension failed the projection conditions");

  Expr pulled = plan.solvable && depends_on(plan.output, plan.replaced_input)
                    ? substitute(plan.output, plan.replaced_input, *arrow->input_substitution)
                    : plan.output;
  FoliationIdeal z2{child, {pulled}};
  ZeroDynamicsCertificate cert = certify_regular_zero_dynamics(z2, *child);
  if (cert.status != CertStatus::Pass)
    throw NotExtendable(cert.status == CertStatus::NotRepresentable
                            ? "induced foliation has no exact representation: " + cert.note
                            : "induced foliation failed certification: " + cert.note);
  return Extended{child, arrow, std::move(cert)};
}

Extended one_step_extension(const SystemPtr& sys, const Expr& output,
                            const std::string& input_override) {
  return apply_one_step(sys, plan_one_step(*sys, output, input_override));
}

Extended pure_prolongation(const SystemPtr& sys, const std::string& input) {
  if (sys->chart->index_of(input) < 0 || !sys->chart->is_input(sys->chart->index_of(input)))
    throw NotExtendable("not an input: " + input);
  return one_step_extension(sys, var(input), input);
}

KForm pullback_one_form(const KForm& base_form, const SystemPtr& child,
                        const ExtensionArrow* arrow) {
  const std::string* dropped = nullptr;
  const Expr* beta = nullptr;
  if (arrow && arrow->solved) {
    dropped = &arrow->replaced_input;
    beta = &*arrow->input_substitution;
  }
  KForm out = zero_form(child->chart, 1);
  const Chart& base_chart = *base_form.chart;
  for (const auto& [idx, c] : base_form.terms) {
    const std::string& name = base_chart.coord(idx[0]);
    Expr coeff = dropped && depends_on(c, *dropped) ? substitute(c, *dropped, *beta) : c;
    if (dropped && name == *dropped) {
      out = form_add(out, form_scale(differential(child->chart, *beta), coeff));
    } else {
      out = form_add(out, form_scale(coordinate_differential(child->chart, name), coeff));
    }
  }
  return out;
}

bool verify_extension(const SystemPtr& child, const SystemPtr& base,
                      const ExtensionArrow* arrow) {
  ChartNumerics& cn = child->numerics();
  // (i) pullback containment of every base generator
  for (const KForm& g : base->contact.generators) {
    KForm pb = pullback_one_form(g, child, arrow);
    if (!ideal_membership(pb, child->contact.generators, cn)) return false;
  }
  // (ii) covering: pulled-back functions, the induced foliation tower and
  // the fresh input must span the whole cotangent space
  std::vector<KForm> span;
  span.push_back(coordinate_differential(child->chart, 0));
  const std::string* dropped = nullptr;
  if (arrow && arrow->solved) dropped = &arrow->replaced_input;
  for (const std::string& name : base->chart->coords) {
    if (name == "t") continue;
    if (dropped && name == *dropped)
      span.push_back(differential(child->chart, *arrow->input_substitution));
    else
      span.push_back(coordinate_differential(child->chart, name));
  }
  if (arrow) {
    Expr pulled = dropped && depends_on(arrow->output, *dropped)
                      ? substitute(arrow->output, *dropped, *arrow->input_substitution)
                      : arrow->output;
    FoliationIdeal z2 = invariantize(FoliationIdeal{child, {pulled}});
    for (const Expr& g : z2.generators) span.push_back(differential(child->chart, g));
    span.push_back(coordinate_differential(child->chart, arrow->new_input));
  }
  return generic_rank(span, cn).rank == child->chart->dim();
}

std::vector<DecomposedStep> decompose_composite(const SystemPtr& sys) {
  std::vector<SystemPtr> chain;
  for (SystemPtr s = sys; s; s = s->parent) chain.push_back(s);
  std::reverse(chain.begin(), chain.end());
  std::vector<DecomposedStep> steps;
  for (size_t i = 1; i < chain.size(); ++i) {
    DecomposedStep step{chain[i - 1], chain[i], chain[i]->incoming};
    if (!verify_extension(step.to, step.from, step.arrow.get()))
      throw InconsistentHistory("extension history link " + std::to_string(i) +
                                " fails the projection conditions");
    steps.push_back(std::move(step));
  }
  return steps;
}

}  // namespace dynext

#include "dynext/system.hpp"

#include <algorithm>

#include "dynext/extend.hpp"

namespace dynext {

using boost::multiprecision::abs;

ChartNumerics& ControlSystem::numerics() const {
  if (!numerics_) numerics_ = std::make_shared<ChartNumerics>(chart, Sampler{.seed = seed});
  return *numerics_;
}

const DerivedFlag& ControlSystem::flag() const { return contact.flag(numerics()); }

const DefectReport& ControlSystem::defect_report() const {
  if (!report_)
    report_ = std::make_shared<const DefectReport>(lid_report(chart, flag(), numerics()));
  return *report_;
}

LinearizabilityVerdict ControlSystem::verdict() const {
  const DefectReport& rep = defect_report();
  LinearizabilityVerdict v;
  if (rep.lid > 0) {
    v.kind = LinKind::FailsInvolutivity;
    v.level = rep.k_star;
    v.defect = rep.lid;
  } else if (!rep.controllable) {
    v.kind = LinKind::FailsControllability;
  } else {
    v.kind = LinKind::Linearizable;
  }
  return v;
}

std::vector<std::shared_ptr<const ExtensionArrow>> ControlSystem::history() const {
  std::vector<std::shared_ptr<const ExtensionArrow>> h;
  for (const ControlSystem* s = this; s->parent; s = s->parent.get()) h.push_back(s->incoming);
  std::reverse(h.begin(), h.end());
  return h;
}

int ControlSystem::depth() const {
  int d = 0;
  for (const ControlSystem* s = this; s->parent; s = s->parent.get()) ++d;
  return d;
}

SystemPtr build_contact_ideal(const std::vector<std::string>& states,
                              const std::vector<std::string>& inputs,
                              const std::vector<Expr>& dynamics, uint64_t seed,
                              SamplePoint user_point) {
  if (dynamics.size() != states.size())
    throw std::invalid_argument("need exactly one dynamics entry per state");
  ChartPtr chart = make_chart(inputs, states);
  for (size_t i = 0; i < dynamics.size(); ++i) {
    for (const std::string& s : free_symbols(dynamics[i])) {
      int idx = chart->index_of(s);
      if (idx < 0 || idx == chart->time_index())
        throw UnknownSymbolError(s);
    }
  }
  auto sys = std::make_shared<ControlSystem>();
  sys->chart = chart;
  sys->seed = seed;
  sys->user_point = std::move(user_point);
  sys->field.chart = chart;
  sys->field.components.assign(size_t(chart->dim()), zero());
  sys->field.components[0] = one();
  for (size_t i = 0; i < states.size(); ++i)
    sys->field.components[size_t(chart->state_begin()) + i] = dynamics[i];
  sys->contact.chart = chart;
  for (size_t i = 0; i < states.size(); ++i) {
    KForm gen = coordinate_differential(chart, states[i]);
    gen = form_sub(gen, form_scale(coordinate_differential(chart, 0), dynamics[i]));
    sys->contact.generators.push_back(std::move(gen));
  }
  return sys;
}

namespace {

// Rank and |pivot product| of a numeric matrix; the product over the pivots
// equals the absolute determinant of the selected maximal minor.
std::pair<int, F> rank_and_minor(NumMat m) {
  if (m.empty()) return {0, F(1)};
  size_t rows = m.size(), cols = m[0].size();
  F scale = 1;
  for (const auto& row : m)
    for (const F& v : row)
      if (abs(v) > scale) scale = abs(v);
  F tol = kZeroTol * scale;
  int rank = 0;
  F minor = 1;
  size_t rpos = 0;
  for (size_t c = 0; c < cols && rpos < rows; ++c) {
    size_t best = rpos;
    for (size_t r = rpos + 1; r < rows; ++r)
      if (abs(m[r][c]) > abs(m[best][c])) best = r;
    if (abs(m[best][c]) <= tol) continue;
    std::swap(m[rpos], m[best]);
    minor *= abs(m[rpos][c]);
    for (size_t r = rpos + 1; r < rows; ++r) {
      F f = m[r][c] / m[rpos][c];
      if (f == 0) continue;
      for (size_t k = c; k < cols; ++k) m[r][k] -= f * m[rpos][k];
    }
    ++rpos;
    ++rank;
  }
  return {rank, minor};
}

}  // namespace

RelDegResult vector_relative_degree(const std::vector<Expr>& outputs, const ControlSystem& sys) {
  RelDegResult out;
  ChartNumerics& cn = sys.numerics();
  const Chart& chart = *sys.chart;
  int n = chart.n_states;
  RelativeDegreeProfile profile;
  profile.outputs = outputs;

  for (size_t i = 0; i < outputs.size(); ++i) {
    for (const std::string& s : free_symbols(outputs[i]))
      if (chart.index_of(s) < 0 || chart.index_of(s) == chart.time_index()) {
        out.failure = "output references unknown symbol: " + s;
        return out;
      }
    Expr g = outputs[i];
    std::vector<Expr> tower{g};
    int kappa = -1;
    for (int j = 0; j <= n + 1; ++j) {
      bool input_dependent = false;
      for (int c = chart.input_begin(); c < chart.input_end(); ++c) {
        Expr dg = differentiate(g, chart.coord(c));
        if (is_zero_expr(dg)) continue;
        if (!cn.is_zero(dg)) {
          input_dependent = true;
          break;
        }
      }
      if (input_dependent) {
        kappa = j;
        break;
      }
      g = lie_scalar(sys.field, g);
      tower.push_back(g);
    }
    if (kappa < 0) {
      out.failure = "component " + std::to_string(i + 1) + " has no finite relative degree up to " +
                    std::to_string(n + 1);
      return out;
    }
    profile.kappas.push_back(kappa);
    profile.towers.push_back(std::move(tower));
  }

  // joint nondegeneracy: the decoupling matrix must have full row rank
  size_t rho = outputs.size();
  std::vector<std::vector<Expr>> decoupling(rho);
  for (size_t i = 0; i < rho; ++i) {
    const Expr& top = profile.towers[i].back();
    for (int c = chart.input_begin(); c < chart.input_end(); ++c)
      decoupling[i].push_back(differentiate(top, chart.coord(c)));
  }

  const Sampler& sampler = cn.sampler();
  bool found = false;
  for (int i = 0; i < sampler.n_points && !found; ++i) {
    for (int r = 0; r < sampler.retry_limit; ++r) {
      SamplePoint p = cn.point(i, r);
      for (const auto& [k, v] : sys.user_point) p[k] = v;
      try {
        NumMat m(rho);
        for (size_t a = 0; a < rho; ++a)
          for (const Expr& e : decoupling[a]) m[a].push_back(evaluate(e, p));
        auto [rank, minor] = rank_and_minor(std::move(m));
        if (rank == int(rho)) {
          profile.base_point = p;
          profile.witness = minor.convert_to<double>();
          found = true;
        }
      } catch (const DomainError&) {
        continue;
      }
      break;
    }
  }
  if (!found) {
    out.failure = "decoupling matrix is generically singular";
    return out;
  }
  out.profile = std::move(profile);
  return out;
}

LinearizabilityVerdict feedback_linearizable(const ControlSystem& sys) { return sys.verdict(); }

}  // namespace dynext

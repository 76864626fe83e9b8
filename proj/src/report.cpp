#include "dynext/report.hpp"

#include <sstream>

namespace dynext {

namespace {

std::string q_to_string(const Q& q) {
  std::ostringstream os;
  os << q;
  return os.str();
}

Json point_json(const SamplePoint& p) {
  Json j = Json::object();
  for (const auto& [name, v] : p) j[name] = q_to_string(v);
  return j;
}

Json flag_json(const ControlSystem& sys) {
  const DerivedFlag& flag = sys.flag();
  Json j;
  j["dimensions"] = flag.dims;
  j["augmented_dimensions"] = flag.aug_dims;
  j["defects"] = flag.aug_defects;
  std::vector<bool> inv(flag.aug_involutive.begin(), flag.aug_involutive.end());
  j["involutive"] = inv;
  j["stabilizes_at"] = flag.stabilize_index;
  return j;
}

Json verdict_json(const ControlSystem& sys) {
  const DefectReport& rep = sys.defect_report();
  LinearizabilityVerdict v = sys.verdict();
  Json j;
  j["controllable"] = rep.controllable;
  j["linearizable"] = v.linearizable();
  switch (v.kind) {
    case LinKind::Linearizable:
      j["verdict"] = "linearizable";
      break;
    case LinKind::FailsInvolutivity: {
      std::ostringstream os;
      os << "fails-involutivity(level " << v.level << ", defect " << v.defect << ")";
      j["verdict"] = os.str();
      break;
    }
    case LinKind::FailsControllability:
      j["verdict"] = "fails-controllability";
      break;
  }
  return j;
}

Json lid_json(const ControlSystem& sys) {
  const DefectReport& rep = sys.defect_report();
  Json j;
  j["value"] = rep.lid;
  j["level"] = rep.k_star;
  Json gens = Json::array();
  for (const KForm& g : rep.defect_generators) gens.push_back(to_string(g));
  j["defect_generators"] = gens;
  return j;
}

Json certificate_json(const ZeroDynamicsCertificate& cert) {
  Json j;
  switch (cert.status) {
    case CertStatus::Pass: j["status"] = "pass"; break;
    case CertStatus::Fail: j["status"] = "fail"; break;
    case CertStatus::NotRepresentable: j["status"] = "not-representable"; break;
  }
  j["rho"] = cert.rho;
  j["kappa"] = cert.kappa;
  j["kappa_by_index"] = cert.kappa_by_index;
  j["exit_counts"] = cert.exit_counts;
  j["intersection_ranks"] = cert.intersection_ranks;
  Json outs = Json::array();
  for (const Expr& e : cert.outputs) outs.push_back(to_string(e));
  j["outputs"] = outs;
  if (!cert.note.empty()) j["note"] = cert.note;
  return j;
}

Json system_json(const ControlSystem& sys) {
  Json j;
  j["states"] = sys.chart->state_names();
  j["inputs"] = sys.chart->input_names();
  j["dimension"] = sys.chart->dim();
  j["point"] = point_json(sys.user_point);
  return j;
}

// Serializes an extended system back into the input file format when every
// step admitted closed-form input elimination.
std::optional<std::string> final_system_toml(const ControlSystem& sys) {
  for (const auto& arrow : sys.history())
    if (!arrow->solved) return std::nullopt;
  std::ostringstream os;
  os << "[system]\n";
  os << "states = [";
  auto states = sys.chart->state_names();
  for (size_t i = 0; i < states.size(); ++i) os << (i ? ", " : "") << '"' << states[i] << '"';
  os << "]\n";
  os << "inputs = [";
  auto inputs = sys.chart->input_names();
  for (size_t i = 0; i < inputs.size(); ++i) os << (i ? ", " : "") << '"' << inputs[i] << '"';
  os << "]\n\n[dynamics]\n";
  for (size_t i = 0; i < states.size(); ++i) {
    const Expr& f = sys.field.components[size_t(sys.chart->state_begin()) + i];
    os << states[i] << " = \"" << to_string(f) << "\"\n";
  }
  return os.str();
}

Json final_system_json(const ControlSystem& sys) {
  Json j = system_json(sys);
  Json dyn = Json::object();
  bool solved = true;
  for (const auto& arrow : sys.history())
    if (!arrow->solved) solved = false;
  if (solved) {
    auto states = sys.chart->state_names();
    for (size_t i = 0; i < states.size(); ++i)
      dyn[states[i]] =
          to_string(sys.field.components[size_t(sys.chart->state_begin()) + i]);
    j["dynamics"] = dyn;
  } else {
    j["dynamics"] = nullptr;
  }
  Json cons = Json::array();
  for (const KForm& g : sys.contact.generators) cons.push_back(to_string(g));
  j["constraints"] = cons;
  if (auto toml = final_system_toml(sys)) j["file"] = *toml;
  return j;
}

}  // namespace

SearchOptions options_from_file(const SystemFile& sf) {
  SearchOptions opt;
  opt.candidates.coefficients = sf.coefficients;
  opt.candidates.max_support = sf.support;
  opt.candidates.user_candidates = sf.candidates;
  opt.candidates.include_prolongations = sf.include_prolongations;
  opt.candidates.max_order = sf.max_order;
  if (sf.heuristic == "lid") opt.heuristic = HeuristicKind::Lid;
  else if (sf.heuristic == "cover") opt.heuristic = HeuristicKind::Cover;
  else opt.heuristic = HeuristicKind::None;
  opt.algorithm = sf.algorithm == "astar" ? Algorithm::AStar : Algorithm::Dijkstra;
  return opt;
}

Json make_report(const SystemFile& sf, const SystemPtr& sys, const std::string& command,
                 const SearchOptions& opts, int enumerate_order) {
  Json j;
  j["tool"] = {{"name", "dynext"}, {"version", "0.1.0"}};
  j["command"] = command;
  j["seed"] = sf.seed;
  j["system"] = system_json(*sys);
  j["flag"] = flag_json(*sys);
  j["lid"] = lid_json(*sys);
  j["verdicts"] = verdict_json(*sys);

  std::vector<std::string> notes{
      "genericity is decided by sampling: ranks and zero tests hold on the sampled "
      "dense open set; regularity of intersections is interpreted as constant "
      "generic rank with exact one-form generators"};
  std::vector<std::string> warnings;

  if (command == "search") {
    SearchResult res = minimal_extension_search(sys, opts);
    Json s;
    s["status"] = res.found ? "found" : "exhausted";
    s["algorithm"] = opts.algorithm == Algorithm::AStar ? "astar" : "dijkstra";
    switch (opts.heuristic) {
      case HeuristicKind::None: s["heuristic"] = "none"; break;
      case HeuristicKind::Lid: s["heuristic"] = "lid"; break;
      case HeuristicKind::Cover: s["heuristic"] = "cover"; break;
    }
    s["cost"] = res.found ? Json(res.cost) : Json(nullptr);
    s["nodes_expanded"] = res.nodes_expanded;
    s["root_heuristic"] = res.root_heuristic;
    Json arrows = Json::array();
    for (const SearchArrowRecord& rec : res.arrows) {
      Json a;
      a["output"] = to_string(rec.arrow->output);
      a["relative_degree"] = rec.arrow->kappa;
      a["replaced_input"] = rec.arrow->replaced_input;
      a["new_input"] = rec.arrow->new_input;
      a["new_state"] = rec.arrow->new_state;
      a["solved"] = rec.arrow->solved;
      if (rec.arrow->input_substitution)
        a["input_substitution"] = to_string(*rec.arrow->input_substitution);
      a["certificate"] = certificate_json(rec.certificate);
      arrows.push_back(std::move(a));
    }
    s["arrows"] = arrows;
    auto jstar = dp_value(res);
    auto it = jstar.find(res.root_fp);
    s["dp_root_value"] = (it != jstar.end() && it->second >= 0) ? Json(it->second) : Json(nullptr);
    Json rejected = Json::array();
    for (const ArrowLog& log : res.rejected)
      rejected.push_back({{"candidate", log.candidate}, {"reason", log.reason}});
    s["rejected_arrows"] = rejected;
    j["search"] = s;
    if (res.found) {
      j["final_system"] = final_system_json(*res.final_system);
      j["final_verdict"] = verdict_json(*res.final_system);
    } else {
      j["final_system"] = nullptr;
    }
    for (const std::string& w : res.warnings) warnings.push_back(w);
    if (opts.heuristic == HeuristicKind::Lid && res.found &&
        res.root_heuristic > res.cost) {
      std::ostringstream os;
      os << "lid heuristic overestimates here: leading defect " << res.root_heuristic
         << " exceeds the optimal extension count " << res.cost
         << ", so it is not an admissible lower bound";
      warnings.push_back(os.str());
    }
  } else if (command == "enumerate") {
    std::vector<SweepEntry> sweep = prolongation_sweep(sys, enumerate_order, opts.parallel);
    Json e;
    e["max_order"] = enumerate_order;
    Json profiles = Json::array();
    int count = 0;
    for (const SweepEntry& entry : sweep) {
      Json p;
      Json prof = Json::object();
      for (const auto& [name, c] : entry.profile) prof[name] = c;
      p["profile"] = prof;
      p["order"] = entry.order;
      p["linearizable"] = entry.verdict.linearizable();
      profiles.push_back(std::move(p));
      if (entry.verdict.linearizable()) ++count;
    }
    e["profiles"] = profiles;
    e["linearizable_count"] = count;
    j["enumerate"] = e;
  }

  j["notes"] = notes;
  j["warnings"] = warnings;
  return j;
}

std::string render_report(const Json& report) { return report.dump(2) + "\n"; }

}  // namespace dynext

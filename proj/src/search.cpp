#include "dynext/search.hpp"

#include <omp.h>

#include <algorithm>
#include <set>
#include <sstream>

namespace dynext {

namespace {

// Applies fn to every item, optionally with OpenMP; results keep input
// order, so parallel and serial runs are bit-identical downstream.
template <class Out, class In, class Fn>
std::vector<Out> ordered_map(const std::vector<In>& items, bool parallel, Fn fn) {
  std::vector<Out> out(items.size());
  std::vector<std::exception_ptr> errors(items.size());
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < (long long)items.size(); ++i) {
      try {
        out[size_t(i)] = fn(items[size_t(i)]);
      } catch (...) {
        errors[size_t(i)] = std::current_exception();
      }
    }
  } else {
    for (size_t i = 0; i < items.size(); ++i) {
      try {
        out[i] = fn(items[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace

std::string system_fingerprint(const ControlSystem& sys) {
  std::vector<std::string> parts;
  for (const auto& arrow : sys.history()) parts.push_back(arrow->descriptor());
  std::sort(parts.begin(), parts.end());
  std::ostringstream os;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) os << "|";
    os << parts[i];
  }
  return os.str();
}

std::vector<Expr> candidate_pool(const ControlSystem& sys, const CandidateConfig& cfg) {
  std::vector<Expr> pool;
  std::set<std::string> seen;
  std::vector<std::string> states = sys.chart->state_names();
  std::vector<long long> coeffs;
  for (long long c : cfg.coefficients)
    if (c != 0) coeffs.push_back(c);
  int n = int(states.size());
  int support = std::min(cfg.max_support, n);

  // subsets of states by increasing size, lexicographic; coefficient tuples
  // lexicographic with the first coefficient positive
  std::vector<int> subset;
  std::function<void(int, int)> rec_subset = [&](int start, int remaining) {
    if (!subset.empty()) {
      size_t k = subset.size();
      std::vector<size_t> pick(k, 0);
      while (true) {
        if (coeffs[pick[0]] > 0) {
          std::vector<Expr> terms;
          for (size_t i = 0; i < k; ++i) {
            long long c = coeffs[pick[i]];
            Expr v = var(states[size_t(subset[i])]);
            terms.push_back(c == 1 ? v : mul(rat(c), v));
          }
          Expr e = sum(std::move(terms));
          std::string key = to_string(e);
          if (!seen.count(key)) {
            seen.insert(key);
            pool.push_back(e);
          }
        }
        size_t j = k;
        while (j > 0) {
          --j;
          if (++pick[j] < coeffs.size()) break;
          pick[j] = 0;
          if (j == 0) goto done;
        }
      }
    done:;
    }
    if (remaining == 0) return;
    for (int s = start; s < n; ++s) {
      subset.push_back(s);
      rec_subset(s + 1, remaining - 1);
      subset.pop_back();
    }
  };
  // enumerate by subset size so smaller supports come first
  for (int size = 1; size <= support; ++size) {
    std::function<void(int, int)> rec = [&](int start, int need) {
      if (need == 0) {
        rec_subset(n, 0);
        return;
      }
      for (int s = start; s <= n - need; ++s) {
        subset.push_back(s);
        rec(s + 1, need - 1);
        subset.pop_back();
      }
    };
    rec(0, size);
  }
  for (const Expr& u : cfg.user_candidates) {
    bool ok = true;
    for (const std::string& s : free_symbols(u)) {
      int idx = sys.chart->index_of(s);
      if (idx < 0 || idx == sys.chart->time_index()) ok = false;
    }
    if (!ok) continue;
    std::string key = to_string(u);
    if (!seen.count(key)) {
      seen.insert(key);
      pool.push_back(u);
    }
  }
  return pool;
}

CoverResult minimal_cover_candidates(const ControlSystem& sys, const CandidateConfig& cfg) {
  const DefectReport& rep = sys.defect_report();
  if (rep.lid == 0)
    throw std::invalid_argument("cover search requested on an involutive augmented flag");
  int k_star = rep.k_star;
  const DerivedFlag& flag = sys.flag();
  const std::vector<KForm>& level = flag.augmented[size_t(k_star)];
  const std::vector<KForm>& prev = flag.augmented[size_t(k_star) - 1];
  ChartNumerics& cn = sys.numerics();
  int dim = sys.chart->dim();

  std::vector<Expr> pool = candidate_pool(sys, cfg);
  if (pool.empty()) throw NoCandidates("empty candidate pool");
  std::vector<Expr> cands;
  std::vector<KForm> cand_forms;
  for (const Expr& v : pool) {
    KForm dv = differential(sys.chart, v);
    if (dv.is_zero()) continue;
    if (!ideal_membership(dv, prev, cn)) continue;
    cands.push_back(v);
    cand_forms.push_back(std::move(dv));
  }
  CoverResult out;
  if (cands.empty()) return out;

  std::vector<KForm> torsion_forms;
  for (const KForm& w : rep.defect_generators) torsion_forms.push_back(exterior_derivative(w));

  struct PointData {
    NumMat residuals;          // candidates, compressed to complement coords
    std::vector<NumMat> torsion;  // defect generators, complement block
    F scale = 1;
  };
  auto points = cn.map_points<PointData>([&](int i, int r) {
    NumMat w;
    for (const KForm& g : level) w.push_back(cn.eval_one_form(g, i, r));
    if (independent_rows(w).size() < level.size()) throw NonGenericPoint();
    NumRref rref = num_rref(w);
    std::vector<int> comp = complement_columns(rref, dim);
    PointData pd;
    F s0 = 1;
    for (const KForm& dv : cand_forms) {
      NumRow full = reduce_row(rref, cn.eval_one_form(dv, i, r));
      NumRow compressed(comp.size());
      for (size_t j = 0; j < comp.size(); ++j) compressed[j] = full[size_t(comp[j])];
      for (const F& v : compressed)
        if (boost::multiprecision::abs(v) > s0) s0 = boost::multiprecision::abs(v);
      pd.residuals.push_back(std::move(compressed));
    }
    for (const KForm& tf : torsion_forms) {
      NumMat block = reduce_two_form_matrix(rref, cn.eval_two_form(tf, i, r), dim);
      for (const auto& row : block)
        for (const F& v : row)
          if (boost::multiprecision::abs(v) > s0) s0 = boost::multiprecision::abs(v);
      pd.torsion.push_back(std::move(block));
    }
    pd.scale = (1 + s0) * (1 + s0) * (1 + s0);
    return pd;
  });

  size_t ncands = cands.size();
  int cap = std::min<int>(4, int(ncands));
  std::vector<int> pick;
  std::vector<std::vector<Expr>> found;

  std::function<bool(const std::vector<int>&)> admissible = [&](const std::vector<int>& sel) {
    bool independent_somewhere = false;
    for (const PointData& pd : points) {
      NumMat rows;
      for (int j : sel) rows.push_back(pd.residuals[size_t(j)]);
      NumMat copy = rows;
      bool indep = num_rank(std::move(copy)) == int(sel.size());
      if (!indep) continue;
      independent_somewhere = true;
      NumRref rr = num_rref(rows);
      int c = int(pd.residuals.empty() ? 0 : pd.residuals[0].size());
      for (const NumMat& block : pd.torsion) {
        NumRow reduced = reduce_two_form(rr, block, c);
        if (!row_near_zero(reduced, pd.scale)) return false;
      }
    }
    return independent_somewhere;
  };

  for (int ell = 1; ell <= cap && found.empty(); ++ell) {
    std::function<void(int, int)> rec = [&](int start, int need) {
      if (need == 0) {
        if (admissible(pick)) {
          std::vector<Expr> set;
          for (int j : pick) set.push_back(cands[size_t(j)]);
          found.push_back(std::move(set));
        }
        return;
      }
      for (int s = start; s <= int(ncands) - need; ++s) {
        pick.push_back(s);
        rec(s + 1, need - 1);
        pick.pop_back();
      }
    };
    rec(0, ell);
    if (!found.empty()) {
      out.found = true;
      out.ell = ell;
      out.sets = std::move(found);
    }
  }
  return out;
}

int heuristic_value(const ControlSystem& sys, HeuristicKind kind, const CandidateConfig& cfg) {
  switch (kind) {
    case HeuristicKind::None:
      return 0;
    case HeuristicKind::Lid:
      return sys.defect_report().lid;
    case HeuristicKind::Cover: {
      if (sys.defect_report().lid == 0) return 0;
      try {
        CoverResult cr = minimal_cover_candidates(sys, cfg);
        return cr.found ? cr.ell : 1;
      } catch (const NoCandidates&) {
        return 1;
      }
    }
  }
  return 0;
}

std::vector<EnumeratedChild> enumerate_primitive_arrows(const SystemPtr& node,
                                                        const CandidateConfig& cfg,
                                                        HeuristicKind kind, bool parallel,
                                                        std::vector<ArrowLog>* log) {
  std::vector<Expr> candidates;
  std::vector<std::string> overrides;
  std::set<std::string> seen;
  auto push_candidate = [&](const Expr& e, const std::string& override_input) {
    std::string key = to_string(e) + "@" + override_input;
    if (seen.count(key)) return;
    seen.insert(key);
    candidates.push_back(e);
    overrides.push_back(override_input);
  };
  if (cfg.include_prolongations)
    for (const std::string& u : node->chart->input_names()) push_candidate(var(u), u);
  if (node->defect_report().lid > 0) {
    try {
      CoverResult cr = minimal_cover_candidates(*node, cfg);
      for (const auto& set : cr.sets)
        for (const Expr& v : set) push_candidate(v, cfg.input_override);
    } catch (const NoCandidates& e) {
      if (log) log->push_back({"<cover>", e.what()});
    }
  }
  for (const Expr& u : cfg.user_candidates) {
    bool ok = true;
    for (const std::string& s : free_symbols(u)) {
      int idx = node->chart->index_of(s);
      if (idx < 0 || idx == node->chart->time_index()) ok = false;
    }
    if (ok) push_candidate(u, cfg.input_override);
  }

  // phase 1 (serial): plans read the shared parent caches
  struct Planned {
    std::optional<ArrowPlan> plan;
    std::string candidate;
    std::string error;
  };
  std::vector<Planned> plans;
  plans.reserve(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) {
    Planned p;
    p.candidate = to_string(candidates[i]);
    try {
      p.plan = plan_one_step(*node, candidates[i], overrides[i]);
    } catch (const std::exception& e) {
      p.error = e.what();
    }
    plans.push_back(std::move(p));
  }

  // phase 2 (parallel): each construction touches only its own system caches
  struct Built {
    std::optional<EnumeratedChild> child;
    std::string candidate;
    std::string error;
  };
  auto built = ordered_map<Built>(plans, parallel, [&](const Planned& p) {
    Built b;
    b.candidate = p.candidate;
    if (!p.plan) {
      b.error = p.error;
      return b;
    }
    try {
      EnumeratedChild ec;
      ec.ext = apply_one_step(node, *p.plan);
      ec.fingerprint = system_fingerprint(*ec.ext.system);
      ec.verdict = ec.ext.system->verdict();
      ec.heuristic = heuristic_value(*ec.ext.system, kind, cfg);
      b.child = std::move(ec);
    } catch (const std::exception& e) {
      b.error = e.what();
    }
    return b;
  });

  std::vector<EnumeratedChild> out;
  std::set<std::string> fps;
  for (auto& b : built) {
    if (!b.child) {
      if (log && !b.error.empty()) log->push_back({b.candidate, b.error});
      continue;
    }
    if (fps.count(b.child->fingerprint)) continue;
    fps.insert(b.child->fingerprint);
    out.push_back(std::move(*b.child));
  }
  return out;
}

SearchResult minimal_extension_search(const SystemPtr& base, const SearchOptions& opt) {
  SearchResult result;
  if (!controllability_check(base->flag()))
    throw std::invalid_argument("base system fails the controllability condition");

  CandidateConfig cfg = opt.candidates;
  int depth_bound = cfg.max_order >= 0 ? cfg.max_order
                                       : base->chart->n_states + base->chart->n_inputs;
  // the priority uses the heuristic only in A* mode; node values are still
  // computed when the non-increasing restriction needs them
  HeuristicKind kind = opt.algorithm == Algorithm::AStar ? opt.heuristic : HeuristicKind::None;
  HeuristicKind h_kind = (kind != HeuristicKind::None || opt.restrict_nonincreasing)
                             ? opt.heuristic
                             : HeuristicKind::None;

  int h_root = heuristic_value(*base, h_kind, cfg);
  result.root_heuristic = h_root;
  result.root_fp = system_fingerprint(*base);
  if (opt.heuristic == HeuristicKind::Lid) {
    result.warnings.push_back(
        "lid heuristic is guidance only: the leading defect can exceed the optimal "
        "extension count, so it is not certified as a lower bound");
  }

  struct NodeRec {
    SystemPtr system;
    int g = 0;
    int h = 0;
    std::optional<SearchArrowRecord> incoming;
    std::string parent_fp;
    bool goal = false;
  };
  std::map<std::string, NodeRec> store;
  auto priority = [&](int g, int h) -> long long {
    if (kind == HeuristicKind::None) return g;
    if (opt.literal_reweighting) return (long long)g - h + h_root;
    return (long long)g + h;
  };

  std::set<std::tuple<long long, int, std::string>> open;
  std::map<std::string, int> closed;

  NodeRec root;
  root.system = base;
  root.g = 0;
  root.h = h_root;
  root.goal = base->verdict().linearizable();
  store[result.root_fp] = root;
  result.goal_flags[result.root_fp] = root.goal;
  result.g_values[result.root_fp] = 0;
  open.insert({priority(0, h_root), 0, result.root_fp});

  while (!open.empty()) {
    auto [f, g, fp] = *open.begin();
    open.erase(open.begin());
    auto cit = closed.find(fp);
    if (cit != closed.end()) {
      if (g < cit->second)
        throw std::logic_error("settled node reappeared with a lower cost");
      continue;
    }
    closed[fp] = g;
    ++result.nodes_expanded;
    NodeRec& rec = store.at(fp);

    if (rec.goal) {
      result.found = true;
      result.cost = g;
      result.final_system = rec.system;
      std::vector<DecomposedStep> steps = decompose_composite(rec.system);
      std::string cursor = fp;
      std::vector<SearchArrowRecord> arrows;
      while (!cursor.empty()) {
        const NodeRec& r2 = store.at(cursor);
        if (!r2.incoming) break;
        arrows.push_back(*r2.incoming);
        cursor = r2.parent_fp;
      }
      std::reverse(arrows.begin(), arrows.end());
      if (arrows.size() != steps.size())
        throw std::logic_error("winner decomposition does not match its history");
      result.arrows = std::move(arrows);
      return result;
    }
    if (g >= depth_bound) continue;

    std::vector<EnumeratedChild> children =
        enumerate_primitive_arrows(rec.system, cfg, h_kind, opt.parallel, &result.rejected);
    std::vector<std::string>& edge_list = result.edges[fp];
    for (EnumeratedChild& ch : children) {
      if (opt.restrict_nonincreasing && ch.heuristic > rec.h) continue;
      edge_list.push_back(ch.fingerprint);
      if (closed.count(ch.fingerprint)) continue;
      if (!store.count(ch.fingerprint)) {
        NodeRec nr;
        nr.system = ch.ext.system;
        nr.g = g + 1;
        nr.h = ch.heuristic;
        nr.incoming = SearchArrowRecord{ch.ext.arrow, ch.ext.certificate};
        nr.parent_fp = fp;
        nr.goal = ch.verdict.linearizable();
        result.goal_flags[ch.fingerprint] = nr.goal;
        result.g_values[ch.fingerprint] = nr.g;
        store[ch.fingerprint] = std::move(nr);
        open.insert({priority(g + 1, ch.heuristic), g + 1, ch.fingerprint});
      }
    }
  }
  result.found = false;
  return result;
}

std::map<std::string, long long> dp_value(const SearchResult& result) {
  std::map<std::string, long long> j;
  for (const auto& [fp, goal] : result.goal_flags) j[fp] = goal ? 0 : -1;
  bool changed = true;
  size_t guard = result.goal_flags.size() + 2;
  while (changed && guard-- > 0) {
    changed = false;
    for (const auto& [fp, children] : result.edges) {
      long long best = j.count(fp) && result.goal_flags.at(fp) ? 0 : -1;
      for (const std::string& c : children) {
        auto it = j.find(c);
        if (it == j.end() || it->second < 0) continue;
        long long cand = 1 + it->second;
        if (best < 0 || cand < best) best = cand;
      }
      if (best >= 0 && (j[fp] < 0 || best < j[fp])) {
        j[fp] = best;
        changed = true;
      }
    }
  }
  return j;
}

SystemPtr prolongation_profile(const SystemPtr& base, const std::map<std::string, int>& profile) {
  SystemPtr sys = base;
  std::map<std::string, std::string> current;  // original input -> current name
  for (const std::string& u : base->chart->input_names()) current[u] = u;
  for (const auto& [input, count] : profile) {
    if (!current.count(input)) throw NotExtendable("not an input: " + input);
    for (int c = 0; c < count; ++c) {
      Extended ext = pure_prolongation(sys, current[input]);
      current[input] = ext.arrow->new_input;
      sys = ext.system;
    }
  }
  return sys;
}

std::vector<SweepEntry> prolongation_sweep(const SystemPtr& base, int max_order, bool parallel) {
  std::vector<std::string> inputs = base->chart->input_names();
  // multisets in lexicographic order, grouped by total order; each level
  // extends the previous level's systems by one prolongation
  struct WorkItem {
    std::vector<int> counts;
    SystemPtr system;
    std::map<std::string, std::string> current;
    int last = 0;  // inputs with index < last are frozen
  };
  std::vector<SweepEntry> out;
  WorkItem root;
  root.counts.assign(inputs.size(), 0);
  root.system = base;
  for (const std::string& u : inputs) root.current[u] = u;
  std::vector<WorkItem> level{root};
  for (int order = 1; order <= max_order; ++order) {
    struct Task {
      size_t parent;
      int input;
      ArrowPlan plan;
    };
    // planning reads the shared parent caches, so it stays serial
    std::vector<Task> tasks;
    for (size_t p = 0; p < level.size(); ++p)
      for (int i = level[p].last; i < int(inputs.size()); ++i) {
        const std::string& name = level[p].current.at(inputs[size_t(i)]);
        tasks.push_back({p, i, plan_one_step(*level[p].system, var(name), name)});
      }
    struct BuiltItem {
      WorkItem item;
      LinearizabilityVerdict verdict;
    };
    auto next = ordered_map<BuiltItem>(tasks, parallel, [&](const Task& t) {
      const WorkItem& parent = level[t.parent];
      Extended ext = apply_one_step(parent.system, t.plan);
      BuiltItem b;
      b.item = parent;
      b.item.system = ext.system;
      b.item.current[inputs[size_t(t.input)]] = ext.arrow->new_input;
      b.item.counts[size_t(t.input)] += 1;
      b.item.last = t.input;
      b.verdict = ext.system->verdict();
      return b;
    });
    level.clear();
    for (const BuiltItem& b : next) {
      SweepEntry e;
      for (size_t i = 0; i < inputs.size(); ++i)
        if (b.item.counts[i] > 0) e.profile[inputs[i]] = b.item.counts[i];
      e.order = order;
      e.verdict = b.verdict;
      e.system = b.item.system;
      out.push_back(e);
      level.push_back(b.item);
    }
  }
  return out;
}

}  // namespace dynext

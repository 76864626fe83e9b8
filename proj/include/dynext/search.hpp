#pragma once

#include <functional>
#include <map>

#include "dynext/extend.hpp"

namespace dynext {

enum class HeuristicKind { None, Lid, Cover };
enum class Algorithm { Dijkstra, AStar };

struct NoCandidates : std::runtime_error {
  explicit NoCandidates(const std::string& what) : std::runtime_error(what) {}
};

struct CandidateConfig {
  std::vector<long long> coefficients{-1, 0, 1};
  int max_support = 3;
  std::vector<Expr> user_candidates;
  bool include_prolongations = true;
  int max_order = -1;  // depth bound; negative selects n + m
  std::string input_override;
};

// Linear state-coordinate combinations within the coefficient/support
// bounds, first nonzero coefficient positive, plus user candidates.
std::vector<Expr> candidate_pool(const ControlSystem& sys, const CandidateConfig& cfg);

struct CoverResult {
  bool found = false;
  int ell = 0;
  std::vector<std::vector<Expr>> sets;  // all minimal covering candidate sets
};

// Smallest sets of exact one-forms from the previous augmented level that
// wedge nontrivially with the defective level and absorb every defect
// generator's torsion. Brute force by increasing size.
CoverResult minimal_cover_candidates(const ControlSystem& sys, const CandidateConfig& cfg);

int heuristic_value(const ControlSystem& sys, HeuristicKind kind, const CandidateConfig& cfg);

struct ArrowLog {
  std::string candidate;
  std::string reason;
};

struct EnumeratedChild {
  Extended ext;
  std::string fingerprint;
  LinearizabilityVerdict verdict;
  int heuristic = 0;
};

// Children of a node: pure prolongations, arrows along covering candidate
// outputs and user candidates with defined relative degree. Construction
// failures are logged per arrow, never fatal.
std::vector<EnumeratedChild> enumerate_primitive_arrows(const SystemPtr& node,
                                                        const CandidateConfig& cfg,
                                                        HeuristicKind kind, bool parallel,
                                                        std::vector<ArrowLog>* log);

struct SearchOptions {
  CandidateConfig candidates;
  HeuristicKind heuristic = HeuristicKind::None;
  Algorithm algorithm = Algorithm::Dijkstra;
  bool literal_reweighting = false;   // adjusted loss g - H(node) + H(root)
  bool restrict_nonincreasing = false;
  bool parallel = true;
};

struct SearchArrowRecord {
  std::shared_ptr<const ExtensionArrow> arrow;
  ZeroDynamicsCertificate certificate;
};

struct SearchResult {
  bool found = false;  // false encodes Exhausted
  int cost = 0;
  SystemPtr final_system;
  std::vector<SearchArrowRecord> arrows;
  long long nodes_expanded = 0;
  int root_heuristic = 0;
  std::vector<std::string> warnings;
  std::vector<ArrowLog> rejected;
  std::string root_fp;
  std::map<std::string, std::vector<std::string>> edges;  // explored graph
  std::map<std::string, bool> goal_flags;
  std::map<std::string, int> g_values;
};

// Best-first search over extension systems with priority g + H; goal test is
// feedback linearizability. With heuristic None this is Dijkstra and the
// returned cost is minimal within the candidate-restricted, depth-bounded
// category.
SearchResult minimal_extension_search(const SystemPtr& base, const SearchOptions& opt);

// Value iteration over the explored graph; -1 is the +infinity sentinel.
std::map<std::string, long long> dp_value(const SearchResult& result);

struct SweepEntry {
  std::map<std::string, int> profile;  // original input name -> prolongation count
  int order = 0;
  LinearizabilityVerdict verdict;
  SystemPtr system;
};

// All pure-prolongation profiles up to a total order, each checked for
// feedback linearizability.
std::vector<SweepEntry> prolongation_sweep(const SystemPtr& base, int max_order, bool parallel);

// Follows one prolongation profile (input name -> count).
SystemPtr prolongation_profile(const SystemPtr& base, const std::map<std::string, int>& profile);

std::string system_fingerprint(const ControlSystem& sys);

}  // namespace dynext

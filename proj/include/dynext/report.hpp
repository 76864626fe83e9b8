#pragma once

#include <json.hpp>

#include "dynext/search.hpp"
#include "dynext/sysfile.hpp"

namespace dynext {

using Json = nlohmann::ordered_json;

// Fills SearchOptions / CandidateConfig from a parsed file, before any
// command-line overrides.
SearchOptions options_from_file(const SystemFile& sf);

// Builds the deterministic report for one command. Re-running with the same
// file, seed and options yields a byte-identical document regardless of the
// thread count.
Json make_report(const SystemFile& sf, const SystemPtr& sys, const std::string& command,
                 const SearchOptions& opts, int enumerate_order);

std::string render_report(const Json& report);

}  // namespace dynext

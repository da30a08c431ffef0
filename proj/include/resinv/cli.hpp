#pragma once

#include <iosfwd>

namespace resinv {

/// Entry point of the `resinv` command line tool.
///
///   resinv <verb> -c case.yaml [-o out/] [--seed N] [--threads N] [-v]
///
/// Verbs: simulate, sample-truth, synth-data, invert-reglm, invert-stdlm,
/// study, check. Returns 0 on success, 1 on usage or configuration errors
/// and 2 on numerical failures. A manifest.json is written to the output
/// directory once it is known, whatever the outcome.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace resinv

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qpr::cli {

// Subcommands: segment | qpr | stft | sqi | train-baseline | infer | eval |
// synth | split | bundle-init. Returns 0 on success and 1 on any validation
// or module error, after printing one JSON error object per line to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qpr::cli

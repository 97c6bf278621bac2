#pragma once

#include <string>
#include <vector>

namespace mixmemb {

/// Entry point behind the mixmemb tool. Subcommands: generate, fit, sweep,
/// eval. Returns 0 on success, 1 on usage errors, 2 on runtime failures.
int cli_main(const std::vector<std::string>& args);
int cli_main(int argc, char** argv);

}  // namespace mixmemb

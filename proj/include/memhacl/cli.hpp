#pragma once

#include <string>
#include <vector>

namespace memhacl {

// Full command-line workflow: synth, check, pretrain, finetune, eval,
// augment, export, gradcheck. `args` excludes the program name. Returns the
// process exit code; failures print a categorized message to stderr.
int run_cli(const std::vector<std::string>& args);

}  // namespace memhacl

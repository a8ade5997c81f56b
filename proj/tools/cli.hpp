#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace unet::cli {

/// Runs the command line with argv[0] excluded. Returns the process exit status:
/// 0 on success, 1 on a rejected precondition or I/O failure, 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace unet::cli

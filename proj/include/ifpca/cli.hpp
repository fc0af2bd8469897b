#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "ifpca/error.hpp"

namespace ifpca {

// 0 ok, 2 usage, 3 data or I/O, 4 numerical failure, 5 empty selection.
int exit_status(ErrorCode code);

// Runs one command; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ifpca

#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fedconf {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/// Runs one subcommand (calibrate, federate, predict, evaluate, synth,
/// noise). argv[0] is the program name.
int cli_dispatch(std::span<const std::string> argv, std::ostream& out, std::ostream& err);
int cli_dispatch(int argc, const char* const* argv);

}  // namespace fedconf

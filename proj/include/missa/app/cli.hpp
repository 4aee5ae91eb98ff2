#ifndef MISSA_APP_CLI_HPP_
#define MISSA_APP_CLI_HPP_

#include <iosfwd>

namespace missa::app {

/// Command-line entry: train, eval, chat, serve, table and synth. Returns
/// the process exit status; usage errors are nonzero.
int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace missa::app

#endif  // MISSA_APP_CLI_HPP_

#ifndef RCRTE_COMMANDS_HPP
#define RCRTE_COMMANDS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

namespace rcrte {

inline constexpr const char* kVersion = "0.1.0";

// Process exit codes. Input problems, numerical failures and fits that hit
// the iteration cap are distinguishable to calling scripts.
enum ExitCode : int {
    kExitOk = 0,
    kExitInputError = 2,
    kExitNumericalError = 3,
    kExitNonConvergence = 4,
};

// Full default configuration for every subcommand.
nlohmann::json default_config();

// Layered config: defaults, then the optional config file, then explicit
// overrides. The output directory resolves as: --out flag, config out_dir,
// RCRTE_OUT environment variable, current directory.
nlohmann::json resolve_config(const std::optional<std::string>& config_path,
                              std::optional<std::uint64_t> seed_override,
                              std::optional<int> threads_override,
                              std::optional<std::string> out_override);

int cmd_generate(const nlohmann::json& cfg);
int cmd_fit(const nlohmann::json& cfg);
int cmd_predict(const nlohmann::json& cfg);
int cmd_cv(const nlohmann::json& cfg);
int cmd_print_defaults(std::ostream& out);

} // namespace rcrte

#endif

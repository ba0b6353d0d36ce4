#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace intersim::cli {

inline constexpr int kOk = 0;
inline constexpr int kUsageError = 1;
inline constexpr int kRuntimeError = 2;

inline constexpr const char* kToolVersion = "0.1.0";
/// Default worker count when the run configuration does not set one.
inline constexpr const char* kWorkersEnv = "INTERSIM_WORKERS";

/// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& data);

int cmd_run(const std::filesystem::path& config, const std::filesystem::path& out_dir, std::ostream& err);
int cmd_evaluate(const std::vector<std::filesystem::path>& run_dirs, std::ostream& out, std::ostream& err);
int cmd_benchmark(const std::filesystem::path& config, const std::vector<std::size_t>& agents,
                  const std::vector<std::size_t>& workers, std::size_t repetitions,
                  const std::filesystem::path& csv_out, std::ostream& out, std::ostream& err);
int cmd_plotdata(const std::filesystem::path& run_dir, std::ostream& err);

/// Parses argv and dispatches to a subcommand.
int main(int argc, char** argv);

}  // namespace intersim::cli

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace treesv {

inline constexpr const char* kArtifactVersion = "1";

// Exit codes shared by the binary and the CLI tests.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitVerification = 4;

struct PhaseTiming {
  std::string phase;
  double wall_seconds = 0.0;
  double cpu_seconds = 0.0;
};

// Every subcommand that produces files drops exactly one manifest.json next
// to them: what ran, with which resolved configuration and seeds, over which
// inputs, producing which outputs, and how long each phase took.
struct RunManifest {
  std::string subcommand;
  std::map<std::string, std::string> config;   // resolved flag values, stringified
  std::map<std::string, std::string> metrics;  // measured values (e.g. training accuracy)
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<PhaseTiming> timings;
};

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const std::string& text);
void write_manifest(const RunManifest& manifest, const std::string& directory);
RunManifest read_manifest(const std::string& directory);

// Wall + CPU stopwatch for manifest phase entries.
class PhaseClock {
 public:
  PhaseClock();
  PhaseTiming stop(const std::string& phase) const;

 private:
  std::int64_t wall_start_ns_;
  double cpu_start_;
};

// Parses argv and runs one subcommand. Returns a process exit code; never
// throws. Errors print to stderr.
int run_cli(int argc, const char* const* argv);

}  // namespace treesv

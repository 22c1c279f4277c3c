#pragma once

// Experiment driver: INI-style run configurations, parameter schemas with
// validation, deterministic CSV/JSON artifact writing, and a run manifest
// carrying an FNV-1a checksum per artifact. Reruns with the same seed produce
// byte-identical artifacts; worker count and output directory are execution
// topology and deliberately excluded from the manifest so it stays comparable
// across machines.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "clab/errors.hpp"

namespace clab {

struct RunConfig {
    std::string experiment;
    std::map<std::string, std::string> parameters;  // resolved key -> value text
    std::string output_dir = "out";
    std::uint64_t master_seed = 42;
    int workers = 1;
};

// Experiments: qsd, cq, lindblad, timescale-jz, timescale-dp, and the pinned
// presets preset-fig4, preset-fig5, preset-fig6.
const std::vector<std::string>& known_experiments();

// Parses an INI-style config: exactly one [experiment] section, key = value
// lines, '#' comments. Throws ParseError (with line number) on malformed
// syntax and ValidationError for an unknown experiment name. Values are not
// yet schema-checked; apply_defaults_and_validate does that.
RunConfig parse_config(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Fills in schema defaults and validates every parameter (type, range,
// choices). Unknown keys, missing required keys, and out-of-range values throw
// ValidationError naming the key. Also lifts master_seed / workers /
// output_dir into the typed fields.
void apply_defaults_and_validate(RunConfig& config);

// Runs the experiment, writes its artifacts plus run_manifest.json into
// config.output_dir, and returns the artifact file names. The config must have
// been validated.
std::vector<std::string> execute(const RunConfig& config);

// Process-level wrapper: validate + execute with the documented exit codes
// (0 success, 2 configuration error, 3 runtime failure); messages to stderr.
int run_cli(RunConfig config);

// --- small utilities shared with the tests -------------------------------------------------------

std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t fnv1a64_file(const std::string& path);
std::string hex64(std::uint64_t value);

// Shortest round-trip decimal form of a double (std::to_chars).
std::string format_double(double value);

}  // namespace clab

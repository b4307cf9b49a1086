#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "smtw/behaviors.hpp"
#include "smtw/episode.hpp"
#include "smtw/gridworld.hpp"

namespace smtw {

// Every file this toolkit writes carries format_version; readers reject
// versions they do not understand.
inline constexpr int kFormatVersion = 1;

// Raised for malformed inputs and version mismatches (exit code kExitDataFormat).
struct DataFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_hex_of_string(const std::string& s);
std::string sha256_hex_of_file(const std::string& path);

// --- instance sets (JSON lines; header line, then one instance per line) ---

void write_instances(const std::string& path, std::span<const EnvInstance> instances);
std::vector<EnvInstance> read_instances(const std::string& path);

// --- demonstration datasets --------------------------------------------
// JSON lines: a header carrying the format version, env config, the instance
// seed list and the bundle table (1-based line numbers of each bundle's six
// episodes), then one episode per line with observations as nested 0/1 arrays.

struct DemoDataset {
  int n = 0;
  int demonstrator_cap = 2000;
  int free_cap = 1000;
  int per_env = 0;
  std::vector<uint64_t> instance_seeds;
  std::vector<Demonstration> demos;
};

void write_demos(const std::string& path, const DemoDataset& dataset);
DemoDataset read_demos(const std::string& path);

// --- run manifests -------------------------------------------------------
// Deterministic given config and inputs: no timestamps, content hashes only.

struct ManifestData {
  std::string command;
  std::string config_json;
  uint64_t master_seed = 0;
  std::vector<std::string> inputs;   // paths, hashed at write time
  std::vector<std::string> outputs;  // paths, hashed at write time
  std::map<std::string, double> metrics;
  std::map<std::string, std::string> notes;
};

void write_manifest(const std::string& path, const ManifestData& data);

}  // namespace smtw

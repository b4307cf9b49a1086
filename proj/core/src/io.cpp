#include "smtw/io.hpp"

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "smtw/nn.hpp"

namespace smtw {

using nlohmann::json;

namespace {

json read_json_line(const std::string& line, const std::string& where) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) throw DataFormatError(where + ": malformed JSON");
  return j;
}

void check_version(const json& j, const std::string& where) {
  if (!j.contains("format_version") || !j["format_version"].is_number_integer()) {
    throw DataFormatError(where + ": missing format_version");
  }
  if (j["format_version"].get<int>() != kFormatVersion) {
    throw DataFormatError(where + ": unsupported format_version " +
                          j["format_version"].dump());
  }
}

json frame_to_nested(const Frame& f, int n) {
  json rows = json::array();
  for (int r = 0; r < n; ++r) {
    json cols = json::array();
    for (int c = 0; c < n; ++c) {
      json chans = json::array();
      for (int ch = 0; ch < 3; ++ch) chans.push_back(static_cast<int>(f[(r * n + c) * 3 + ch]));
      cols.push_back(std::move(chans));
    }
    rows.push_back(std::move(cols));
  }
  return rows;
}

Frame frame_from_nested(const json& rows, int n, const std::string& where) {
  Frame f(static_cast<size_t>(n) * n * 3);
  if (static_cast<int>(rows.size()) != n) throw DataFormatError(where + ": bad frame shape");
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        int v = rows[r][c][ch].get<int>();
        if (v != 0 && v != 1) throw DataFormatError(where + ": pixel not 0/1");
        f[(r * n + c) * 3 + ch] = static_cast<uint8_t>(v);
      }
    }
  }
  return f;
}

json episode_to_json(const Episode& ep, const std::string& role) {
  json j;
  j["instance_seed"] = ep.instance_seed;
  j["role"] = role;
  json frames = json::array();
  for (const Frame& f : ep.frames) frames.push_back(frame_to_nested(f, ep.n));
  j["observations"] = std::move(frames);
  j["ground_truth_states"] = ep.gts;
  json actions = json::array();
  for (Action a : ep.actions) actions.push_back(static_cast<int>(a));
  j["actions"] = std::move(actions);
  j["rewards"] = ep.rewards;
  j["terminal"] = ep.terminal;
  j["truncated"] = ep.truncated;
  return j;
}

Episode episode_from_json(const json& j, int n, const std::string& where) {
  Episode ep;
  ep.n = n;
  ep.instance_seed = j.at("instance_seed").get<uint64_t>();
  for (const json& fr : j.at("observations")) {
    ep.frames.push_back(frame_from_nested(fr, n, where));
  }
  ep.gts = j.at("ground_truth_states").get<std::vector<int>>();
  for (const json& a : j.at("actions")) ep.actions.push_back(static_cast<Action>(a.get<int>()));
  ep.rewards = j.at("rewards").get<std::vector<double>>();
  ep.terminal = j.at("terminal").get<bool>();
  ep.truncated = j.at("truncated").get<bool>();
  if (ep.frames.size() != ep.actions.size() + 1 || ep.gts.size() != ep.frames.size() ||
      ep.rewards.size() != ep.actions.size()) {
    throw DataFormatError(where + ": inconsistent episode arrays");
  }
  return ep;
}

}  // namespace

std::string sha256_hex(std::span<const unsigned char> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_hex_of_string(const std::string& s) {
  return sha256_hex({reinterpret_cast<const unsigned char*>(s.data()), s.size()});
}

std::string sha256_hex_of_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex_of_string(ss.str());
}

void write_instances(const std::string& path, std::span<const EnvInstance> instances) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  json header;
  header["format_version"] = kFormatVersion;
  header["kind"] = "instances";
  header["count"] = instances.size();
  out << header.dump() << '\n';
  for (const EnvInstance& inst : instances) {
    json j;
    j["n"] = inst.n;
    j["key_cells"] = inst.key_rows;
    j["door_cells"] = inst.door_rows;
    j["correct_key"] = inst.correct_key;
    j["correct_door"] = inst.correct_door;
    j["start_cell"] = {inst.start_cell.row, inst.start_cell.col};
    j["seed"] = inst.seed;
    out << j.dump() << '\n';
  }
}

std::vector<EnvInstance> read_instances(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataFormatError(path + ": empty file");
  json header = read_json_line(line, path);
  check_version(header, path);
  if (header.value("kind", "") != "instances") {
    throw DataFormatError(path + ": not an instance-set file");
  }
  std::vector<EnvInstance> instances;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = read_json_line(line, path);
    EnvInstance inst;
    inst.n = j.at("n").get<int>();
    inst.key_rows = j.at("key_cells").get<std::vector<int>>();
    inst.door_rows = j.at("door_cells").get<std::vector<int>>();
    inst.correct_key = j.at("correct_key").get<int>();
    inst.correct_door = j.at("correct_door").get<int>();
    inst.start_cell = {j.at("start_cell")[0].get<int>(), j.at("start_cell")[1].get<int>()};
    inst.seed = j.at("seed").get<uint64_t>();
    if (static_cast<int>(inst.key_rows.size()) != inst.n ||
        static_cast<int>(inst.door_rows.size()) != inst.n) {
      throw DataFormatError(path + ": instance arrays do not match n");
    }
    instances.push_back(std::move(inst));
  }
  return instances;
}

void write_demos(const std::string& path, const DemoDataset& dataset) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  json header;
  header["format_version"] = kFormatVersion;
  header["kind"] = "demos";
  header["env"] = {{"n", dataset.n},
                   {"demonstrator_cap", dataset.demonstrator_cap},
                   {"free_cap", dataset.free_cap}};
  header["per_env"] = dataset.per_env;
  header["instance_seeds"] = dataset.instance_seeds;
  json bundles = json::array();
  // Line 1 is the header; episode lines follow in bundle order.
  size_t line_no = 2;
  for (const Demonstration& demo : dataset.demos) {
    json bundle;
    bundle["instance_seed"] = demo.exploration.instance_seed;
    std::vector<size_t> lines;
    for (size_t i = 0; i < 1 + demo.exploits.size(); ++i) lines.push_back(line_no++);
    bundle["episode_lines"] = lines;
    bundles.push_back(std::move(bundle));
  }
  header["bundles"] = std::move(bundles);
  out << header.dump() << '\n';
  for (const Demonstration& demo : dataset.demos) {
    out << episode_to_json(demo.exploration, "exploration").dump() << '\n';
    for (const Episode& e : demo.exploits) out << episode_to_json(e, "exploit").dump() << '\n';
  }
}

DemoDataset read_demos(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataFormatError(path + ": empty file");
  json header = read_json_line(line, path);
  check_version(header, path);
  if (header.value("kind", "") != "demos") throw DataFormatError(path + ": not a demos file");

  DemoDataset dataset;
  dataset.n = header.at("env").at("n").get<int>();
  dataset.demonstrator_cap = header.at("env").value("demonstrator_cap", 2000);
  dataset.free_cap = header.at("env").value("free_cap", 1000);
  dataset.per_env = header.at("per_env").get<int>();
  dataset.instance_seeds = header.at("instance_seeds").get<std::vector<uint64_t>>();

  std::vector<Episode> episodes;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    episodes.push_back(episode_from_json(read_json_line(line, path), dataset.n, path));
  }
  const json& bundles = header.at("bundles");
  for (const json& bundle : bundles) {
    const auto lines = bundle.at("episode_lines").get<std::vector<size_t>>();
    Demonstration demo;
    for (size_t i = 0; i < lines.size(); ++i) {
      size_t idx = lines[i] - 2;  // header occupies line 1
      if (idx >= episodes.size()) throw DataFormatError(path + ": bundle line out of range");
      if (i == 0) {
        demo.exploration = episodes[idx];
      } else {
        demo.exploits.push_back(episodes[idx]);
      }
    }
    dataset.demos.push_back(std::move(demo));
  }
  return dataset;
}

void write_manifest(const std::string& path, const ManifestData& data) {
  namespace fs = std::filesystem;
  // Paths are recorded relative to the manifest so identical runs produce
  // byte-identical manifests wherever their outputs live.
  const fs::path manifest_dir = fs::absolute(fs::path(path)).parent_path();
  auto label_for = [&](const std::string& p) {
    const fs::path abs = fs::absolute(p);
    std::error_code ec;
    const fs::path rel = fs::relative(abs, manifest_dir, ec);
    std::string label = rel.string();
    if (ec || label.empty() || label.rfind("..", 0) == 0) label = abs.filename().string();
    return label;
  };

  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "manifest";
  j["command"] = data.command;
  j["master_seed"] = data.master_seed;
  j["config"] = json::parse(data.config_json);
  j["config_hash"] = "sha256:" + sha256_hex_of_string(data.config_json);
  json inputs = json::object();
  for (const std::string& p : data.inputs) inputs[label_for(p)] = "sha256:" + sha256_hex_of_file(p);
  j["inputs"] = std::move(inputs);
  json outputs = json::object();
  for (const std::string& p : data.outputs) outputs[label_for(p)] = "sha256:" + sha256_hex_of_file(p);
  j["outputs"] = std::move(outputs);
  j["metrics"] = data.metrics;
  j["notes"] = data.notes;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

// --- checkpoints (declared in nn.hpp) -------------------------------------

void save_checkpoint(const std::string& path, const ParamStore& params,
                     const CheckpointMeta& meta) {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = meta.kind;
  j["n"] = meta.n;
  j["extra"] = meta.extra;
  json arrays = json::object();
  for (const auto& [name, a] : params.arrays()) {
    json entry;
    entry["shape"] = a.shape;
    entry["values"] = a.data;  // row-major
    arrays[name] = std::move(entry);
  }
  j["arrays"] = std::move(arrays);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump() << '\n';
}

namespace {
json load_checkpoint_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataFormatError(path + ": malformed JSON");
  check_version(j, path);
  return j;
}

CheckpointMeta meta_from_json(const json& j) {
  CheckpointMeta meta;
  meta.kind = j.at("kind").get<std::string>();
  meta.n = j.at("n").get<int>();
  for (const auto& [k, v] : j.at("extra").items()) meta.extra[k] = v.get<int64_t>();
  return meta;
}
}  // namespace

CheckpointMeta read_checkpoint_meta(const std::string& path) {
  return meta_from_json(load_checkpoint_json(path));
}

CheckpointMeta load_checkpoint(const std::string& path, ParamStore& params) {
  json j = load_checkpoint_json(path);
  const json& arrays = j.at("arrays");
  for (auto& [name, a] : params.arrays()) {
    if (!arrays.contains(name)) {
      throw DataFormatError(path + ": checkpoint is missing array " + name);
    }
    const json& entry = arrays.at(name);
    auto shape = entry.at("shape").get<std::vector<size_t>>();
    if (shape != a.shape) throw DataFormatError(path + ": shape mismatch for " + name);
    auto values = entry.at("values").get<std::vector<double>>();
    if (values.size() != a.data.size()) {
      throw DataFormatError(path + ": value count mismatch for " + name);
    }
    a.data = std::move(values);
  }
  return meta_from_json(j);
}

}  // namespace smtw

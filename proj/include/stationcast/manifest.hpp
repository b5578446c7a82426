#pragma once

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "stationcast/serialize.hpp"

namespace stationcast::manifest {

using json = nlohmann::ordered_json;

inline std::uint64_t fnv1a(const char* data, std::size_t len) {
  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hash_bytes(const std::string& bytes) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(bytes.data(), bytes.size())));
  return buf;
}

inline std::string hash_file(const std::string& path) {
  return hash_bytes(serialize::read_file_bytes(path));
}

// Per-stage record of input/output content hashes plus a hash of the config
// slice the stage depends on; a stage is up to date when all three groups
// still match what is on disk.
class Manifest {
 public:
  static Manifest load_or_empty(const std::string& path) {
    Manifest m;
    m.path_ = path;
    if (std::filesystem::exists(path)) {
      json doc = json::parse(serialize::read_file_bytes(path), nullptr, false);
      if (!doc.is_discarded() && doc.is_object()) m.doc_ = std::move(doc);
    }
    if (!m.doc_.contains("stages") || !m.doc_["stages"].is_object())
      m.doc_["stages"] = json::object();
    m.doc_["format"] = "stct.manifest.v1";
    return m;
  }

  bool stage_up_to_date(const std::string& stage,
                        const std::map<std::string, std::string>& input_hashes,
                        const std::string& config_hash,
                        const std::vector<std::string>& outputs) const {
    if (!doc_["stages"].contains(stage)) return false;
    const json& e = doc_["stages"][stage];
    if (e.value("config_hash", "") != config_hash) return false;

    if (!e.contains("inputs") || !e["inputs"].is_object()) return false;
    if (e["inputs"].size() != input_hashes.size()) return false;
    for (const auto& [p, h] : input_hashes) {
      if (e["inputs"].value(p, "") != h) return false;
    }

    if (!e.contains("outputs") || !e["outputs"].is_object()) return false;
    for (const std::string& out : outputs) {
      if (!e["outputs"].contains(out)) return false;
      if (!std::filesystem::exists(out)) return false;
      if (hash_file(out) != e["outputs"].value(out, "")) return false;
    }
    return true;
  }

  void record_stage(const std::string& stage,
                    const std::map<std::string, std::string>& input_hashes,
                    const std::string& config_hash,
                    const std::vector<std::string>& outputs) {
    json e;
    e["config_hash"] = config_hash;
    json in = json::object();
    for (const auto& [p, h] : input_hashes) in[p] = h;
    e["inputs"] = in;
    json out = json::object();
    for (const std::string& o : outputs) out[o] = hash_file(o);
    e["outputs"] = out;

    char ts[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(ts, sizeof(ts), "%Y-%m-%dT%H:%M:%SZ", &tm);
    e["completed_at"] = ts;
    doc_["stages"][stage] = e;
  }

  void save() const { serialize::write_file_atomic(path_, doc_.dump(2) + "\n"); }

  const json& doc() const { return doc_; }

 private:
  std::string path_;
  json doc_ = json::object();
};

}  // namespace stationcast::manifest

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>
#include <openssl/evp.h>

#include "cpreach/conformal/calibration.hpp"
#include "cpreach/error.hpp"
#include "cpreach/geometry/interval_box.hpp"
#include "cpreach/harness/config.hpp"
#include "cpreach/reach/flowpipe.hpp"

namespace cpreach {

inline constexpr const char* kLibraryVersion = "0.1.0";

inline std::string sha256_hex(const void* data, std::size_t size) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data, size, digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorKind::Io, "SHA-256 computation failed");
  }
  std::ostringstream hex;
  hex << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) hex << std::setw(2) << static_cast<int>(digest[i]);
  return hex.str();
}

inline std::string sha256_hex(const std::string& s) { return sha256_hex(s.data(), s.size()); }

inline std::vector<unsigned char> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string sha256_file(const std::string& path) {
  const std::vector<unsigned char> bytes = read_file_bytes(path);
  return sha256_hex(bytes.data(), bytes.size());
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
  out << text;
  if (!out) fail(ErrorKind::Io, "failed writing '" + path + "'");
}

inline std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

inline void write_json_file(const std::string& path, const Json& j) { write_text_file(path, json_text(j)); }

/// Per-step, per-component bounds over the trajectory space plus free-form
/// provenance; the shared on-disk form of surrogate and confident flowpipes.
struct FlowpipeDocument {
  Eigen::Index n = 0;
  Eigen::Index K = 0;
  std::string mode;
  IntervalBox bounds;
  Json provenance = Json::object();
  Json conformal;  // null for a surrogate flowpipe

  Json to_json() const {
    Json steps = Json::array();
    for (Eigen::Index k = 0; k <= K; ++k) {
      Json step = Json::array();
      for (Eigen::Index j = 0; j < n; ++j) step.push_back({bounds.lower(k * n + j), bounds.upper(k * n + j)});
      steps.push_back(std::move(step));
    }
    Json doc;
    doc["n"] = n;
    doc["K"] = K;
    doc["mode"] = mode;
    doc["steps"] = std::move(steps);
    doc["provenance"] = provenance;
    if (!conformal.is_null()) doc["conformal"] = conformal;
    return doc;
  }

  static FlowpipeDocument from_json(const Json& doc) {
    FlowpipeDocument f;
    try {
      f.n = doc.at("n").get<Eigen::Index>();
      f.K = doc.at("K").get<Eigen::Index>();
      f.mode = doc.at("mode").get<std::string>();
      const Json& steps = doc.at("steps");
      require(f.n >= 1 && f.K >= 0 && steps.size() == static_cast<std::size_t>(f.K + 1), ErrorKind::ShapeMismatch,
              "flowpipe document must list K + 1 steps");
      Eigen::VectorXd lo((f.K + 1) * f.n), hi((f.K + 1) * f.n);
      for (Eigen::Index k = 0; k <= f.K; ++k) {
        const Json& step = steps.at(static_cast<std::size_t>(k));
        require(step.size() == static_cast<std::size_t>(f.n), ErrorKind::ShapeMismatch,
                "flowpipe step " + std::to_string(k) + " must list n intervals");
        for (Eigen::Index j = 0; j < f.n; ++j) {
          const Json& iv = step.at(static_cast<std::size_t>(j));
          lo[k * f.n + j] = iv.at(0).get<double>();
          hi[k * f.n + j] = iv.at(1).get<double>();
        }
      }
      f.bounds = IntervalBox(std::move(lo), std::move(hi));
      f.provenance = doc.value("provenance", Json::object());
      if (doc.contains("conformal")) f.conformal = doc["conformal"];
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::ShapeMismatch, std::string("malformed flowpipe document: ") + e.what());
    }
    return f;
  }
};

inline FlowpipeDocument load_flowpipe(const std::string& path) { return FlowpipeDocument::from_json(read_json_file(path)); }

inline Json quantiles_to_json(const QuantileVector& q, const std::string& dataset_hash, const std::string& model_hash) {
  Json j;
  j["n"] = q.n;
  j["K"] = q.K;
  j["L"] = q.L;
  j["epsilon"] = q.epsilon;
  j["delta"] = q.delta;
  j["ell"] = q.ell;
  j["rStar"] = std::vector<double>(q.r_star.data(), q.r_star.data() + q.r_star.size());
  j["datasetHash"] = dataset_hash;
  j["modelHash"] = model_hash;
  return j;
}

inline QuantileVector quantiles_from_json(const Json& j) {
  QuantileVector q;
  try {
    q.n = j.at("n").get<Eigen::Index>();
    q.K = j.at("K").get<Eigen::Index>();
    q.L = j.at("L").get<Eigen::Index>();
    q.epsilon = j.at("epsilon").get<double>();
    q.delta = j.at("delta").get<double>();
    q.ell = j.at("ell").get<std::int64_t>();
    const auto r = j.at("rStar").get<std::vector<double>>();
    q.r_star = Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ShapeMismatch, std::string("malformed quantile document: ") + e.what());
  }
  require(q.r_star.size() == q.n * q.K, ErrorKind::ShapeMismatch, "quantile document must list n*K quantiles");
  return q;
}

/// Artifact index of one output directory: content hashes (relative paths)
/// and per-stage timings. Stages record what they write and check what they
/// read against it.
class RunManifest {
 public:
  static constexpr const char* kFileName = "manifest.json";

  explicit RunManifest(std::string dir) : dir_(std::move(dir)) {
    const std::string path = file_path();
    if (std::filesystem::exists(path)) {
      doc_ = read_json_file(path);
    }
    if (!doc_.is_object()) doc_ = Json::object();
    if (!doc_.contains("libraryVersion")) doc_["libraryVersion"] = kLibraryVersion;
    if (!doc_.contains("artifacts")) doc_["artifacts"] = Json::object();
    if (!doc_.contains("timings")) doc_["timings"] = Json::object();
  }

  std::string file_path() const { return (std::filesystem::path(dir_) / kFileName).string(); }
  std::string path_of(const std::string& name) const { return (std::filesystem::path(dir_) / name).string(); }

  void set_config(const Json& config) {
    doc_["configHash"] = sha256_hex(json_text(config));
  }

  /// Hashes the file as written and records it.
  std::string record(const std::string& name) {
    const std::string hash = sha256_file(path_of(name));
    doc_["artifacts"][name] = {{"path", name}, {"sha256", hash}};
    return hash;
  }

  /// Hash of an input file, checked against the recorded one when present.
  std::string verify(const std::string& name) const {
    const std::string hash = sha256_file(path_of(name));
    const Json& a = doc_["artifacts"];
    if (a.contains(name) && a[name]["sha256"] != hash) {
      fail(ErrorKind::HashMismatch, "'" + name + "' does not match the hash recorded in " + std::string(kFileName));
    }
    return hash;
  }

  std::optional<std::string> hash_of(const std::string& name) const {
    const Json& a = doc_["artifacts"];
    if (!a.contains(name)) return std::nullopt;
    return a[name]["sha256"].get<std::string>();
  }

  void set_timing(const std::string& stage, double seconds) { doc_["timings"][stage] = seconds; }
  void set(const std::string& key, Json value) { doc_[key] = std::move(value); }

  const Json& json() const { return doc_; }
  void save() const { write_json_file(file_path(), doc_); }

 private:
  std::string dir_;
  Json doc_;
};

}  // namespace cpreach

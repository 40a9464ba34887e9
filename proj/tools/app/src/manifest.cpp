// Copyright 2026 The tmsvlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tmsv_app/manifest.hpp"

#include <array>
#include <fstream>
#include <memory>

#include <Eigen/Core>
#include <fmt/format.h>
#include <openssl/evp.h>
#include <openssl/opensslv.h>

#include "tmsv/error.hpp"
#include "tmsv_app/config.hpp"

namespace tmsv::app {
namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw Error(ErrorKind::kIoError, "SHA-256 initialization failed");
    }
  }
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md.data(), &len);
    std::string out;
    for (unsigned i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view data) {
  Sha256 h;
  h.update(data.data(), data.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoError, fmt::format("{}: cannot open", path.string()));
  Sha256 h;
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

const ManifestRun& Manifest::run(std::string_view name) const {
  for (const auto& r : runs)
    if (r.name == name) return r;
  throw Error(ErrorKind::kCalibrationFailure,
              fmt::format("dataset has no '{}' run", name));
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  YAML::Node root;
  root["manifest_version"] = kManifestVersion;
  root["tool"] = m.tool;
  root["versions"]["eigen"] = fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION,
                                          EIGEN_MINOR_VERSION);
  root["versions"]["fmt"] = FMT_VERSION;
  root["versions"]["openssl"] = OPENSSL_VERSION_TEXT;
  root["seed"] = m.seed;
  root["config_sha256"] = m.config_sha256;
  YAML::Node runs(YAML::NodeType::Sequence);
  for (const auto& r : m.runs) {
    YAML::Node n;
    n["name"] = r.name;
    n["file"] = r.file;
    n["seed"] = r.seed;
    n["n_samples"] = r.n_samples;
    n["sha256"] = r.sha256;
    runs.push_back(n);
  }
  root["runs"] = runs;
  root["config"] = m.config;
  std::ofstream out(path);
  out << emit_yaml(root);
  if (!out) throw Error(ErrorKind::kIoError, fmt::format("{}: write failed", path.string()));
}

Manifest read_manifest(const std::filesystem::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw Error(ErrorKind::kIoError, fmt::format("{}: {}", path.string(), e.what()));
  }
  if (!root["manifest_version"] || root["manifest_version"].as<int>() != kManifestVersion) {
    throw ConfigError("manifest_version", "missing or unsupported");
  }
  Manifest m;
  m.tool = root["tool"].as<std::string>("");
  m.seed = root["seed"].as<std::uint64_t>(0);
  m.config_sha256 = root["config_sha256"].as<std::string>("");
  m.config = root["config"];
  for (const auto& n : root["runs"]) {
    ManifestRun r;
    r.name = n["name"].as<std::string>();
    r.file = n["file"].as<std::string>();
    r.seed = n["seed"].as<std::uint64_t>();
    r.n_samples = n["n_samples"].as<std::uint64_t>();
    r.sha256 = n["sha256"].as<std::string>("");
    m.runs.push_back(r);
  }
  return m;
}

}  // namespace tmsv::app

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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <yaml-cpp/yaml.h>

namespace tmsv::app {

inline constexpr int kManifestVersion = 1;
inline constexpr std::string_view kToolVersion = "tmsvlab 0.3.0";

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

struct ManifestRun {
  std::string name;  // XX, XP, PX, PP, vacuum, dark
  std::string file;  // relative to the manifest
  std::uint64_t seed = 0;
  std::uint64_t n_samples = 0;
  std::string sha256;
};

struct Manifest {
  std::string tool = std::string(kToolVersion);
  std::string config_sha256;
  std::uint64_t seed = 0;
  YAML::Node config;
  std::vector<ManifestRun> runs;

  const ManifestRun& run(std::string_view name) const;
};

void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

}  // namespace tmsv::app

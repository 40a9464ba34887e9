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


#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "tmsv/error.hpp"
#include "tmsv/raw_io.hpp"
#include "test_util.hpp"

namespace tmsv {
namespace {

using testing::kind_of;

class RawIo : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("tmsv_raw_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

std::vector<unsigned char> file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename T>
T read_at(const std::vector<unsigned char>& bytes, std::size_t offset) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return v;
}

TEST_F(RawIo, HeaderLayoutIsByteExact) {
  RawSampleStream s;
  s.sample_rate = 16e6;
  s.scale = 2.5;
  s.channels = {{1.0, 2.0, 3.0}, {-1.0, -2.0, -3.0}};
  const auto path = dir_ / "a.tmsv";
  write_raw(path, s);
  const auto bytes = file_bytes(path);
  ASSERT_EQ(bytes.size(), kRawHeaderBytes + 6 * sizeof(double));
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "TMSV");
  EXPECT_EQ(read_at<std::uint16_t>(bytes, 4), 1);
  EXPECT_EQ(read_at<double>(bytes, 6), 16e6);
  EXPECT_EQ(read_at<std::uint16_t>(bytes, 14), 2);
  EXPECT_EQ(read_at<std::uint64_t>(bytes, 16), 3u);
  EXPECT_EQ(read_at<double>(bytes, 24), 2.5);
  // Channel-interleaved payload.
  EXPECT_EQ(read_at<double>(bytes, 32), 1.0);
  EXPECT_EQ(read_at<double>(bytes, 40), -1.0);
  EXPECT_EQ(read_at<double>(bytes, 48), 2.0);
}

TEST_F(RawIo, RoundTrip) {
  RawSampleStream s;
  s.sample_rate = 1e6;
  s.scale = 0.75;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> ch;
    for (int i = 0; i < 1000; ++i) ch.push_back(c * 1000 + i + 0.125);
    s.channels.push_back(ch);
  }
  const auto path = dir_ / "b.tmsv";
  write_raw(path, s);
  const auto back = read_raw(path);
  EXPECT_EQ(back.sample_rate, s.sample_rate);
  EXPECT_EQ(back.scale, s.scale);
  EXPECT_EQ(back.channels, s.channels);
}

TEST_F(RawIo, StreamingWriterPatchesCount) {
  const auto path = dir_ / "c.tmsv";
  {
    RawWriter w(path, 1e6, 2, 1.0);
    const std::vector<double> frames = {1, 2, 3, 4};
    w.write(frames);
    w.write(frames);
    EXPECT_EQ(w.samples_written(), 4u);
    EXPECT_EQ(kind_of([&] { w.write(std::vector<double>{1.0}); }), ErrorKind::kInvalidArgument);
  }
  RawReader r(path);
  EXPECT_EQ(r.header().n_samples, 4u);
  std::vector<double> buf;
  EXPECT_EQ(r.read(buf, 3), 3u);
  EXPECT_EQ(r.remaining(), 1u);
  EXPECT_EQ(r.read(buf, 3), 1u);
  EXPECT_EQ(r.read(buf, 3), 0u);
}

TEST_F(RawIo, CorruptFilesAreIoErrors) {
  RawSampleStream s;
  s.sample_rate = 1e6;
  s.channels = {{1.0, 2.0}, {3.0, 4.0}};
  const auto path = dir_ / "d.tmsv";
  write_raw(path, s);
  auto bytes = file_bytes(path);

  auto write_bytes = [&](const std::vector<unsigned char>& b) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  };
  auto truncated = bytes;
  truncated.resize(bytes.size() - 8);
  write_bytes(truncated);
  EXPECT_EQ(kind_of([&] { read_raw(path); }), ErrorKind::kIoError);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  write_bytes(bad_magic);
  EXPECT_EQ(kind_of([&] { read_raw(path); }), ErrorKind::kIoError);

  auto bad_version = bytes;
  bad_version[4] = 9;
  write_bytes(bad_version);
  EXPECT_EQ(kind_of([&] { read_raw(path); }), ErrorKind::kIoError);

  EXPECT_EQ(kind_of([&] { read_raw(dir_ / "missing.tmsv"); }), ErrorKind::kIoError);
}

}  // namespace
}  // namespace tmsv

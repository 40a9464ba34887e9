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

#include "tmsv/raw_io.hpp"

#include <array>
#include <bit>
#include <cstring>

#include <fmt/format.h>

#include "tmsv/error.hpp"

namespace tmsv {
namespace {

static_assert(std::endian::native == std::endian::little,
              "raw format I/O assumes a little-endian host");

constexpr std::array<char, 4> kMagic{'T', 'M', 'S', 'V'};

template <typename T>
void put(unsigned char*& p, T v) {
  std::memcpy(p, &v, sizeof(T));
  p += sizeof(T);
}

template <typename T>
T get(const unsigned char*& p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  p += sizeof(T);
  return v;
}

std::array<unsigned char, kRawHeaderBytes> encode(const RawHeader& h) {
  std::array<unsigned char, kRawHeaderBytes> buf{};
  unsigned char* p = buf.data();
  std::memcpy(p, kMagic.data(), 4);
  p += 4;
  put(p, h.version);
  put(p, h.sample_rate);
  put(p, h.n_channels);
  put(p, h.n_samples);
  put(p, h.scale);
  return buf;
}

[[noreturn]] void io_fail(const std::filesystem::path& path, std::string_view what) {
  throw Error(ErrorKind::kIoError, fmt::format("{}: {}", path.string(), what));
}

}  // namespace

RawWriter::RawWriter(const std::filesystem::path& path, double sample_rate,
                     std::uint16_t n_channels, double scale)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), n_channels_(n_channels) {
  if (!out_) io_fail(path_, "cannot open for writing");
  if (n_channels == 0) throw Error(ErrorKind::kInvalidArgument, "n_channels must be positive");
  RawHeader h;
  h.sample_rate = sample_rate;
  h.n_channels = n_channels;
  h.scale = scale;
  const auto buf = encode(h);
  out_.write(reinterpret_cast<const char*>(buf.data()), buf.size());
  if (!out_) io_fail(path_, "header write failed");
}

RawWriter::~RawWriter() {
  if (!closed_) {
    try {
      close();
    } catch (...) {
    }
  }
}

void RawWriter::write(std::span<const double> interleaved) {
  if (closed_) throw Error(ErrorKind::kIoError, "write after close");
  if (interleaved.size() % n_channels_ != 0) {
    throw Error(ErrorKind::kInvalidArgument, "sample count is not a multiple of n_channels");
  }
  out_.write(reinterpret_cast<const char*>(interleaved.data()),
             static_cast<std::streamsize>(interleaved.size_bytes()));
  if (!out_) io_fail(path_, "write failed (disk full?)");
  n_samples_ += interleaved.size() / n_channels_;
}

void RawWriter::close() {
  if (closed_) return;
  closed_ = true;
  out_.seekp(16);
  out_.write(reinterpret_cast<const char*>(&n_samples_), sizeof(n_samples_));
  out_.close();
  if (!out_) io_fail(path_, "finalizing header failed");
}

RawReader::RawReader(const std::filesystem::path& path)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) io_fail(path_, "cannot open for reading");
  std::array<unsigned char, kRawHeaderBytes> buf{};
  in_.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (in_.gcount() != static_cast<std::streamsize>(buf.size())) io_fail(path_, "truncated header");
  if (std::memcmp(buf.data(), kMagic.data(), 4) != 0) io_fail(path_, "bad magic");
  const unsigned char* p = buf.data() + 4;
  header_.version = get<std::uint16_t>(p);
  header_.sample_rate = get<double>(p);
  header_.n_channels = get<std::uint16_t>(p);
  header_.n_samples = get<std::uint64_t>(p);
  header_.scale = get<double>(p);
  if (header_.version != kRawFormatVersion) {
    io_fail(path_, fmt::format("unsupported version {}", header_.version));
  }
  if (header_.n_channels == 0) io_fail(path_, "zero channels");
  const auto expected = kRawHeaderBytes + header_.n_samples * header_.n_channels * sizeof(double);
  std::error_code ec;
  const auto size = std::filesystem::file_size(path_, ec);
  if (ec || size != expected) {
    io_fail(path_, fmt::format("file size {} does not match header ({} bytes expected)", size,
                               expected));
  }
}

std::size_t RawReader::read(std::vector<double>& interleaved, std::size_t max_frames) {
  const auto frames = static_cast<std::size_t>(std::min<std::uint64_t>(max_frames, remaining()));
  interleaved.resize(frames * header_.n_channels);
  if (frames == 0) return 0;
  in_.read(reinterpret_cast<char*>(interleaved.data()),
           static_cast<std::streamsize>(interleaved.size() * sizeof(double)));
  if (!in_) io_fail(path_, "short read");
  position_ += frames;
  return frames;
}

void write_raw(const std::filesystem::path& path, const RawSampleStream& stream) {
  stream.validate();
  RawWriter writer(path, stream.sample_rate, static_cast<std::uint16_t>(stream.n_channels()),
                   stream.scale);
  const std::size_t nc = stream.n_channels();
  constexpr std::size_t kFrames = 1 << 15;
  std::vector<double> buf;
  for (std::size_t start = 0; start < stream.n_samples(); start += kFrames) {
    const std::size_t len = std::min(kFrames, stream.n_samples() - start);
    buf.resize(len * nc);
    for (std::size_t i = 0; i < len; ++i)
      for (std::size_t c = 0; c < nc; ++c) buf[i * nc + c] = stream.channels[c][start + i];
    writer.write(buf);
  }
  writer.close();
}

RawSampleStream read_raw(const std::filesystem::path& path) {
  RawReader reader(path);
  const RawHeader& h = reader.header();
  RawSampleStream stream;
  stream.sample_rate = h.sample_rate;
  stream.scale = h.scale;
  stream.channels.assign(h.n_channels, {});
  for (auto& ch : stream.channels) ch.reserve(h.n_samples);
  std::vector<double> buf;
  while (reader.read(buf, 1 << 15) > 0) {
    const std::size_t frames = buf.size() / h.n_channels;
    for (std::size_t i = 0; i < frames; ++i)
      for (std::size_t c = 0; c < h.n_channels; ++c)
        stream.channels[c].push_back(buf[i * h.n_channels + c]);
  }
  return stream;
}

}  // namespace tmsv

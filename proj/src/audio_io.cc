// Copyright 2026 The spkmia Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "spkmia/audio_io.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <tuple>

#include "json.hpp"
#include "spkmia/error.h"

namespace spkmia {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little,
              "byte-order conversion for big-endian hosts is not implemented");

std::vector<char> ReadAll(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), ErrorCode::kIoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename T>
T Load(const std::vector<char>& buf, std::size_t offset) {
  Require(offset + sizeof(T) <= buf.size(), ErrorCode::kFormatError,
          "truncated header");
  T v;
  std::memcpy(&v, buf.data() + offset, sizeof(T));
  return v;
}

template <typename T>
void Put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

Voice ReadWav(const fs::path& path, const std::string& speaker_id,
              const std::string& voice_id) {
  const std::vector<char> buf = ReadAll(path);
  Require(buf.size() >= 12 && std::memcmp(buf.data(), "RIFF", 4) == 0 &&
              std::memcmp(buf.data() + 8, "WAVE", 4) == 0,
          ErrorCode::kFormatError, path.string() + " is not a RIFF/WAVE file");

  int sample_rate = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::string id(buf.data() + pos, 4);
    const auto size = Load<std::uint32_t>(buf, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      const auto format = Load<std::uint16_t>(buf, body);
      const auto channels = Load<std::uint16_t>(buf, body + 2);
      sample_rate = static_cast<int>(Load<std::uint32_t>(buf, body + 4));
      const auto bits = Load<std::uint16_t>(buf, body + 14);
      Require(format == 1 && channels == 1 && bits == 16, ErrorCode::kFormatError,
              path.string() + ": only mono 16-bit PCM is supported");
      have_fmt = true;
    } else if (id == "data") {
      Require(have_fmt, ErrorCode::kFormatError, path.string() + ": data before fmt");
      Require(body + size <= buf.size(), ErrorCode::kFormatError,
              path.string() + ": truncated data chunk");
      std::vector<float> samples(size / 2);
      for (std::size_t i = 0; i < samples.size(); ++i) {
        samples[i] = static_cast<float>(Load<std::int16_t>(buf, body + 2 * i)) / 32768.0f;
      }
      return Voice(speaker_id, voice_id, std::move(samples), sample_rate);
    }
    pos = body + size + (size & 1);
  }
  Fail(ErrorCode::kFormatError, path.string() + ": no data chunk");
}

void WriteWav(const fs::path& path, const Voice& voice) {
  std::ofstream out(path, std::ios::binary);
  Require(static_cast<bool>(out), ErrorCode::kIoError, "cannot write " + path.string());
  const auto data_bytes = static_cast<std::uint32_t>(voice.num_samples() * 2);
  const auto rate = static_cast<std::uint32_t>(voice.sample_rate());
  out.write("RIFF", 4);
  Put<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  Put<std::uint32_t>(out, 16);
  Put<std::uint16_t>(out, 1);
  Put<std::uint16_t>(out, 1);
  Put<std::uint32_t>(out, rate);
  Put<std::uint32_t>(out, rate * 2);
  Put<std::uint16_t>(out, 2);
  Put<std::uint16_t>(out, 16);
  out.write("data", 4);
  Put<std::uint32_t>(out, data_bytes);
  for (float s : voice.samples()) {
    const float c = std::clamp(s, -1.0f, 1.0f);
    Put<std::int16_t>(out, static_cast<std::int16_t>(
                               std::lround(std::min(c * 32768.0f, 32767.0f))));
  }
}

Voice ReadRawF32(const fs::path& descriptor) {
  std::ifstream in(descriptor);
  Require(static_cast<bool>(in), ErrorCode::kIoError,
          "cannot open " + descriptor.string());
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kFormatError, descriptor.string() + ": " + e.what());
  }
  for (const char* key : {"speaker_id", "voice_id", "sample_rate", "num_samples"}) {
    Require(meta.contains(key), ErrorCode::kFormatError,
            descriptor.string() + ": missing '" + key + "'");
  }
  fs::path raw = descriptor;
  raw.replace_extension(".f32");
  const std::vector<char> buf = ReadAll(raw);
  const auto n = meta["num_samples"].get<std::size_t>();
  Require(buf.size() == n * sizeof(float), ErrorCode::kFormatError,
          raw.string() + ": size does not match num_samples");
  std::vector<float> samples(n);
  std::memcpy(samples.data(), buf.data(), buf.size());
  return Voice(meta["speaker_id"].get<std::string>(), meta["voice_id"].get<std::string>(),
               std::move(samples), meta["sample_rate"].get<int>());
}

void WriteRawF32(const fs::path& stem, const Voice& voice) {
  fs::path raw = stem;
  raw += ".f32";
  fs::path meta_path = stem;
  meta_path += ".json";
  {
    std::ofstream out(raw, std::ios::binary);
    Require(static_cast<bool>(out), ErrorCode::kIoError, "cannot write " + raw.string());
    out.write(reinterpret_cast<const char*>(voice.samples().data()),
              static_cast<std::streamsize>(voice.num_samples() * sizeof(float)));
  }
  nlohmann::json meta = {{"speaker_id", voice.speaker_id()},
                         {"voice_id", voice.voice_id()},
                         {"sample_rate", voice.sample_rate()},
                         {"num_samples", voice.num_samples()}};
  std::ofstream out(meta_path);
  Require(static_cast<bool>(out), ErrorCode::kIoError,
          "cannot write " + meta_path.string());
  out << meta.dump() << "\n";
}

std::vector<Voice> LoadVoiceDirectory(const fs::path& root) {
  Require(fs::is_directory(root), ErrorCode::kIoError,
          root.string() + " is not a directory");
  std::vector<Voice> voices;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const fs::path& p = entry.path();
    if (p.extension() == ".wav") {
      voices.push_back(ReadWav(p, p.parent_path().filename().string(), p.stem().string()));
    } else if (p.extension() == ".json") {
      fs::path raw = p;
      raw.replace_extension(".f32");
      if (fs::exists(raw)) voices.push_back(ReadRawF32(p));
    }
  }
  std::sort(voices.begin(), voices.end(), [](const Voice& a, const Voice& b) {
    return std::tie(a.speaker_id(), a.voice_id()) < std::tie(b.speaker_id(), b.voice_id());
  });
  return voices;
}

}  // namespace spkmia

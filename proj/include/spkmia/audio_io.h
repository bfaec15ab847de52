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

// Voice ingestion: 16-bit little-endian mono PCM WAV, and raw little-endian
// f32 samples with a sidecar JSON descriptor
//   {"speaker_id": ..., "voice_id": ..., "sample_rate": ..., "num_samples": ...}.

#ifndef SPKMIA_AUDIO_IO_H_
#define SPKMIA_AUDIO_IO_H_

#include <filesystem>
#include <string>
#include <vector>

#include "spkmia/types.h"

namespace spkmia {

Voice ReadWav(const std::filesystem::path& path, const std::string& speaker_id,
              const std::string& voice_id);
// Samples are clipped to [-1, 1] and quantized to 16 bits.
void WriteWav(const std::filesystem::path& path, const Voice& voice);

// `descriptor` is the sidecar JSON; samples are read from the file of the same
// stem with extension .f32.
Voice ReadRawF32(const std::filesystem::path& descriptor);
// Writes <stem>.f32 and <stem>.json.
void WriteRawF32(const std::filesystem::path& stem, const Voice& voice);

// Loads every voice under `root`: <root>/<speaker>/<voice>.wav and
// <root>/**/<voice>.json + .f32 pairs. Sorted by (speaker_id, voice_id).
std::vector<Voice> LoadVoiceDirectory(const std::filesystem::path& root);

}  // namespace spkmia

#endif  // SPKMIA_AUDIO_IO_H_

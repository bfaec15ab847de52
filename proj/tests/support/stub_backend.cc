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

// Usage: stub_backend <srs-state.json> [--fault NAME] [--sample-rate HZ]

#include <unistd.h>

#include <cstdio>
#include <cstring>
#include <string>

#include "json.hpp"
#include "spkmia/file_util.h"
#include "spkmia/synthetic_srs.h"
#include "support/stub_server.h"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <srs-state.json> [--fault NAME] [--sample-rate HZ]\n",
                 argv[0]);
    return 2;
  }
  spkmia::testing::StubOptions options;
  for (int i = 2; i + 1 < argc; i += 2) {
    if (std::strcmp(argv[i], "--fault") == 0) {
      options.fault = spkmia::testing::ParseStubFault(argv[i + 1]);
    } else if (std::strcmp(argv[i], "--sample-rate") == 0) {
      options.sample_rate = std::stoi(argv[i + 1]);
    }
  }
  const auto srs =
      spkmia::SyntheticSrs::FromJson(nlohmann::json::parse(spkmia::ReadFile(argv[1])));
  spkmia::testing::ServeStub(STDIN_FILENO, STDOUT_FILENO, *srs, options);
  return 0;
}

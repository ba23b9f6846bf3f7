// Copyright 2026 The whirl-sim Authors
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

#ifndef WHIRL_SCENE_IO_H_
#define WHIRL_SCENE_IO_H_

#include <filesystem>
#include <string>

#include "whirl/sim_env.h"

namespace whirl::sim {

// Scene definitions are YAML documents; see configs/scenes/ for one commented
// example per benchmark task. Throws ConfigError on malformed input and on
// any scene invariant violation.
Scene ParseScene(const std::string& yaml_text);
Scene LoadScene(const std::filesystem::path& path);

}  // namespace whirl::sim

#endif  // WHIRL_SCENE_IO_H_

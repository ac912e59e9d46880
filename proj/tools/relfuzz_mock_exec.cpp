// Copyright 2026 The relfuzz Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Executor speaking the wire protocol, driven by a mock script. Scripted
// deaths and hangs happen for real, so it exercises the supervising client.

#include <iostream>

#include "CLI11.hpp"
#include "relfuzz/mock_executor.hpp"

int main(int argc, char** argv) {
  CLI::App app{"relfuzz mock executor"};
  std::string script_path;
  app.add_option("--script", script_path, "mock script (JSON)")->required()->check(CLI::ExistingFile);
  CLI11_PARSE(app, argc, argv);
  try {
    const auto script = relfuzz::MockScript::load(script_path);
    return relfuzz::serve_mock(script, std::cin, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "relfuzz_mock_exec: " << e.what() << "\n";
    return 2;
  }
}

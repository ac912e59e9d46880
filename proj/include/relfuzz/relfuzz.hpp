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

// Umbrella header.

#pragma once

#include "relfuzz/corpus.hpp"
#include "relfuzz/driver.hpp"
#include "relfuzz/expr.hpp"
#include "relfuzz/fuzzer.hpp"
#include "relfuzz/hash.hpp"
#include "relfuzz/hungarian.hpp"
#include "relfuzz/matcher.hpp"
#include "relfuzz/mock_executor.hpp"
#include "relfuzz/protocol.hpp"
#include "relfuzz/status.hpp"
#include "relfuzz/synthesizer.hpp"
#include "relfuzz/templates.hpp"
#include "relfuzz/text.hpp"
#include "relfuzz/value.hpp"
#include "relfuzz/verifier.hpp"

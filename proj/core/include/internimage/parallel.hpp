// Copyright 2026 The internimage Authors
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

#include <functional>

namespace internimage {

/// Worker count from INTERNIMAGE_NUM_THREADS (default 1, clamped to >= 1).
int thread_count();

/// Overrides the environment for the current process; 0 restores it.
void set_thread_count(int n);

/// Runs body(i) for i in [0, count). Indices are split into contiguous
/// chunks, one per worker; body must only write state owned by its index.
void parallel_for(int count, const std::function<void(int)>& body);

}  // namespace internimage

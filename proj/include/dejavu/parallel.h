// Copyright 2026 The Dejavu Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DEJAVU_PARALLEL_H_
#define DEJAVU_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace dejavu {

// Resolves a user thread request: 0 means hardware concurrency.
int ResolveThreads(int requested);

// Splits [0, n) into at most `threads` contiguous chunks of at least
// `min_chunk` items and runs `body(begin, end)` on each. Results must be
// written to per-index slots so the output does not depend on scheduling.
// After all chunks join, the exception from the lowest failing chunk is
// rethrown.
void ParallelFor(std::size_t n, int threads, std::size_t min_chunk,
                 const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace dejavu

#endif  // DEJAVU_PARALLEL_H_

// Copyright 2026 The eqcl Authors
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


#ifndef EQCL_RUNTIME_H_
#define EQCL_RUNTIME_H_

namespace eqcl {

// Keeps freed heap memory inside the process instead of returning it to the
// kernel. Training allocates and drops the same large tensors every step, so
// the default glibc thresholds spend a noticeable share of the time in page
// faults. No-op on other C libraries. Call once, early in main.
void TuneAllocator();

}  // namespace eqcl

#endif  // EQCL_RUNTIME_H_

/* Copyright 2026 The vitslim Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

namespace vitslim {

// Keeps freed activation buffers in the heap instead of returning them to the
// OS after every step. Without this, glibc serves each large tensor with a
// fresh mmap and the page faults cost more than the arithmetic. Idempotent;
// a no-op on other C libraries.
void tune_allocator();

}  // namespace vitslim

/* Copyright 2026 The sedkit Authors. All Rights Reserved.

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

#ifndef SEDKIT_SRC_LINALG_HPP_
#define SEDKIT_SRC_LINALG_HPP_

#include <cstddef>

namespace sedkit::linalg {

// Row-major C[m x n] (+)= op(A) * op(B), where op(A) is [m x k] and op(B) is
// [k x n]. A transposed operand is stored as [k x m] / [n x k].
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, const double* a, const double* b, double* c,
          bool accumulate);

}  // namespace sedkit::linalg

#endif  // SEDKIT_SRC_LINALG_HPP_

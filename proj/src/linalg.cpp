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

#include "linalg.hpp"

#include <Eigen/Core>

namespace sedkit::linalg {

namespace {

using RowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using Map = Eigen::Map<RowMajor>;

template <typename A, typename B>
void assign(Map& c, const A& a, const B& b, bool accumulate) {
  if (accumulate) {
    c.noalias() += a * b;
  } else {
    c.noalias() = a * b;
  }
}

}  // namespace

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, const double* a, const double* b, double* c,
          bool accumulate) {
  const auto M = static_cast<Eigen::Index>(m);
  const auto N = static_cast<Eigen::Index>(n);
  const auto K = static_cast<Eigen::Index>(k);
  Map cm(c, M, N);
  if (!trans_a && !trans_b) {
    assign(cm, ConstMap(a, M, K), ConstMap(b, K, N), accumulate);
  } else if (!trans_a && trans_b) {
    assign(cm, ConstMap(a, M, K), ConstMap(b, N, K).transpose(), accumulate);
  } else if (trans_a && !trans_b) {
    assign(cm, ConstMap(a, K, M).transpose(), ConstMap(b, K, N), accumulate);
  } else {
    assign(cm, ConstMap(a, K, M).transpose(), ConstMap(b, N, K).transpose(),
           accumulate);
  }
}

}  // namespace sedkit::linalg

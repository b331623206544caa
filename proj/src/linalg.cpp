/* Copyright 2026 The Disent Authors. All Rights Reserved.

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

#include "disent/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace disent::la {

bool cholesky_lower(const std::vector<double>& a, std::size_t n,
                    std::vector<double>& chol) {
  chol.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= chol[i * n + k] * chol[j * n + k];
      if (i == j) {
        if (s <= 0.0 || !std::isfinite(s)) return false;
        chol[i * n + i] = std::sqrt(s);
      } else {
        chol[i * n + j] = s / chol[j * n + j];
      }
    }
  }
  return true;
}

void solve_lower(const std::vector<double>& chol, std::size_t n,
                 const std::vector<double>& b, std::vector<double>& y) {
  y.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= chol[i * n + k] * y[k];
    y[i] = s / chol[i * n + i];
  }
}

std::vector<double> inverse_from_cholesky(const std::vector<double>& chol,
                                          std::size_t n) {
  // Invert L column by column, then A^{-1} = L^{-T} L^{-1}.
  std::vector<double> linv(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    linv[j * n + j] = 1.0 / chol[j * n + j];
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s -= chol[i * n + k] * linv[k * n + j];
      linv[i * n + j] = s / chol[i * n + i];
    }
  }
  std::vector<double> inv(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = std::max(i, j); k < n; ++k)
        s += linv[k * n + i] * linv[k * n + j];
      inv[i * n + j] = s;
    }
  return inv;
}

double logdet_from_cholesky(const std::vector<double>& chol, std::size_t n) {
  double ld = 0.0;
  for (std::size_t i = 0; i < n; ++i) ld += std::log(chol[i * n + i]);
  return 2.0 * ld;
}

std::vector<double> aat(const std::vector<double>& a, std::size_t n) {
  std::vector<double> c(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += a[i * n + k] * a[j * n + k];
      c[i * n + j] = s;
    }
  return c;
}

}  // namespace disent::la

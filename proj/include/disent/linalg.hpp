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

// Dense helpers for the small (<= 32x32) symmetric matrices that show up in
// Gaussian KL/TC computations. Row-major storage throughout.

#ifndef DISENT_LINALG_HPP_
#define DISENT_LINALG_HPP_

#include <cstddef>
#include <vector>

namespace disent::la {

// Lower Cholesky factor of a symmetric positive-definite matrix.
// Returns false if the matrix is not positive definite.
bool cholesky_lower(const std::vector<double>& a, std::size_t n,
                    std::vector<double>& chol);

// Solve L y = b with L lower triangular.
void solve_lower(const std::vector<double>& chol, std::size_t n,
                 const std::vector<double>& b, std::vector<double>& y);

// A^{-1} from the lower Cholesky factor of A.
std::vector<double> inverse_from_cholesky(const std::vector<double>& chol,
                                          std::size_t n);

// log det A from its lower Cholesky factor.
double logdet_from_cholesky(const std::vector<double>& chol, std::size_t n);

// C = A * A^T for a square row-major matrix.
std::vector<double> aat(const std::vector<double>& a, std::size_t n);

}  // namespace disent::la

#endif  // DISENT_LINALG_HPP_

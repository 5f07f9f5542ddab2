// Copyright 2026 The qocgrad Authors
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

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace qoc {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;

/// Bad caller input: dimension mismatch, out-of-range parameter, invalid config.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to reach its accuracy target.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unit-norm complex amplitude vector.
class QuantumState {
 public:
  static constexpr double kNormTolerance = 1e-10;

  /// Throws InputError unless |amplitudes| == 1 within kNormTolerance.
  explicit QuantumState(ComplexVector amplitudes);

  /// Rescales `amplitudes` to unit norm. Throws on a zero or non-finite vector.
  static QuantumState normalized(ComplexVector amplitudes);
  static QuantumState basis(Eigen::Index dimension, Eigen::Index index);

  const ComplexVector& amplitudes() const { return amplitudes_; }
  Eigen::Index dimension() const { return amplitudes_.size(); }

 private:
  ComplexVector amplitudes_;
};

struct DiagonalStorage {
  RealVector diagonal;
};

/// Real symmetric tridiagonal matrix; off_diagonal has length D-1.
struct TridiagonalStorage {
  RealVector diagonal;
  RealVector off_diagonal;
};

struct CooEntry {
  Eigen::Index row;
  Eigen::Index col;
  Complex value;
};

/// Coordinate list; duplicates are summed on construction.
struct CooStorage {
  std::vector<CooEntry> entries;
};

using OperatorStorage = std::variant<DiagonalStorage, TridiagonalStorage, CooStorage>;

/// Hermitian matrix in one of three structured sparse forms, applied matrix-free.
class SparseHermitianOperator {
 public:
  static constexpr double kHermiticityTolerance = 1e-12;

  /// Validates storage shape and Hermiticity; COO entries are sorted and merged.
  SparseHermitianOperator(Eigen::Index dimension, OperatorStorage storage);

  static SparseHermitianOperator identity(Eigen::Index dimension);
  static SparseHermitianOperator zero(Eigen::Index dimension);
  static SparseHermitianOperator diagonal(RealVector diagonal);
  static SparseHermitianOperator tridiagonal(RealVector diagonal, RealVector off_diagonal);
  /// Builds COO storage from the Hermitian part of a dense matrix; entries with
  /// |value| <= drop_tolerance are omitted.
  static SparseHermitianOperator from_dense(const ComplexMatrix& dense, double drop_tolerance = 0.0);

  Eigen::Index dimension() const { return dimension_; }
  /// Maximum number of structural nonzeros in any row.
  Eigen::Index sparsity() const { return sparsity_; }
  const OperatorStorage& storage() const { return storage_; }

  /// y = A x (accumulating into y with `y += scale * A x` when accumulate is true).
  void apply_into(const ComplexVector& x, ComplexVector& y, Complex scale = 1.0,
                  bool accumulate = false) const;
  /// Upper bound on the spectral norm: maximum absolute row sum.
  double row_sum_norm() const;
  ComplexMatrix to_dense() const;
  SparseHermitianOperator scaled(double factor) const;

 private:
  Eigen::Index dimension_;
  OperatorStorage storage_;
  Eigen::Index sparsity_ = 0;
};

/// a*A + b*B with the narrowest storage that holds the sum.
SparseHermitianOperator linear_combination(double a, const SparseHermitianOperator& A, double b,
                                           const SparseHermitianOperator& B);

/// op * psi, not renormalized. Throws InputError on dimension mismatch.
ComplexVector apply(const SparseHermitianOperator& op, const ComplexVector& psi);
ComplexVector apply(const SparseHermitianOperator& op, const QuantumState& psi);

/// Re<psi|op|psi>; throws std::logic_error if the imaginary part exceeds 1e-10 * |psi|^2.
double expectation(const SparseHermitianOperator& op, const ComplexVector& psi);
double expectation(const SparseHermitianOperator& op, const QuantumState& psi);

/// Largest absolute entry.
double max_norm(const SparseHermitianOperator& op);

struct NormEstimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Largest |eigenvalue| by power iteration on op^2. When the iteration stalls
/// the best estimate is returned with converged == false.
NormEstimate spectral_norm_estimate(const SparseHermitianOperator& op, double tol = 1e-10,
                                    int max_iterations = 200000);

struct ExampleModelParams {
  Eigen::Index dimension = 64;
  double laplacian_scale = 1.0;
  double r0 = 10.0;
  double gamma0 = 0.5;
  /// Grid coordinates r_i; empty means r_i = i.
  std::vector<double> coordinates;
  /// Divide each operator by its spectral norm estimate.
  bool normalize = true;
  double norm_tolerance = 1e-12;

  void validate() const;
  std::vector<double> grid() const;
};

struct ExampleModel {
  SparseHermitianOperator h0;
  SparseHermitianOperator mu;
  SparseHermitianOperator observable;
};

/// Three-point Laplacian H0, dipole mu = r exp(-r/r0), observable
/// O = (gamma0/pi) exp(-gamma0^2 r^2), each rescaled to unit spectral norm.
ExampleModel build_example_model(const ExampleModelParams& params);

/// Gaussian wave packet exp(-(r-center)^2 / (2 width^2)) on the given grid, normalized.
QuantumState gaussian_state(const std::vector<double>& grid, double center, double width);

/// Dense random Hermitian matrix with entries drawn from N(0,1) (seeded),
/// returned in COO form and rescaled to unit spectral norm.
SparseHermitianOperator random_hermitian(Eigen::Index dimension, std::uint64_t seed);
QuantumState random_state(Eigen::Index dimension, std::uint64_t seed);

}  // namespace qoc

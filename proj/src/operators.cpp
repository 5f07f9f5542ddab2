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

#include "qocgrad/operators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <utility>

namespace qoc {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_dimension(Eigen::Index expected, Eigen::Index actual, const char* what) {
  if (expected != actual) {
    std::ostringstream msg;
    msg << what << ": dimension mismatch (" << expected << " vs " << actual << ")";
    throw InputError(msg.str());
  }
}

bool all_finite(const ComplexVector& v) {
  return std::all_of(v.data(), v.data() + v.size(),
                     [](const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

}  // namespace

// ---------------------------------------------------------------------------
// QuantumState

QuantumState::QuantumState(ComplexVector amplitudes) : amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() < 1) throw InputError("QuantumState: empty amplitude vector");
  if (!all_finite(amplitudes_)) throw InputError("QuantumState: non-finite amplitude");
  const double norm = amplitudes_.norm();
  if (std::abs(norm - 1.0) > kNormTolerance) {
    std::ostringstream msg;
    msg << "QuantumState: norm " << norm << " is not 1";
    throw InputError(msg.str());
  }
}

QuantumState QuantumState::normalized(ComplexVector amplitudes) {
  const double norm = amplitudes.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw InputError("QuantumState: cannot normalize vector");
  amplitudes /= norm;
  return QuantumState(std::move(amplitudes));
}

QuantumState QuantumState::basis(Eigen::Index dimension, Eigen::Index index) {
  if (index < 0 || index >= dimension) throw InputError("QuantumState::basis: index out of range");
  ComplexVector v = ComplexVector::Zero(dimension);
  v(index) = 1.0;
  return QuantumState(std::move(v));
}

// ---------------------------------------------------------------------------
// SparseHermitianOperator

SparseHermitianOperator::SparseHermitianOperator(Eigen::Index dimension, OperatorStorage storage)
    : dimension_(dimension), storage_(std::move(storage)) {
  if (dimension_ < 1) throw InputError("SparseHermitianOperator: dimension must be positive");
  std::visit(
      Overloaded{
          [&](DiagonalStorage& s) {
            require_dimension(dimension_, s.diagonal.size(), "diagonal storage");
            if (!s.diagonal.allFinite()) throw InputError("diagonal storage: non-finite entry");
            sparsity_ = (s.diagonal.array() != 0.0).any() ? 1 : 0;
          },
          [&](TridiagonalStorage& s) {
            require_dimension(dimension_, s.diagonal.size(), "tridiagonal storage");
            require_dimension(dimension_ - 1, s.off_diagonal.size(), "tridiagonal off-diagonal");
            if (!s.diagonal.allFinite() || !s.off_diagonal.allFinite()) {
              throw InputError("tridiagonal storage: non-finite entry");
            }
            for (Eigen::Index i = 0; i < dimension_; ++i) {
              Eigen::Index nnz = s.diagonal(i) != 0.0 ? 1 : 0;
              if (i > 0 && s.off_diagonal(i - 1) != 0.0) ++nnz;
              if (i + 1 < dimension_ && s.off_diagonal(i) != 0.0) ++nnz;
              sparsity_ = std::max(sparsity_, nnz);
            }
          },
          [&](CooStorage& s) {
            std::map<std::pair<Eigen::Index, Eigen::Index>, Complex> merged;
            for (const auto& e : s.entries) {
              if (e.row < 0 || e.row >= dimension_ || e.col < 0 || e.col >= dimension_) {
                throw InputError("coordinate storage: index out of range");
              }
              if (!std::isfinite(e.value.real()) || !std::isfinite(e.value.imag())) {
                throw InputError("coordinate storage: non-finite entry");
              }
              merged[{e.row, e.col}] += e.value;
            }
            s.entries.clear();
            std::vector<Eigen::Index> row_count(static_cast<std::size_t>(dimension_), 0);
            for (const auto& [key, value] : merged) {
              if (value == Complex(0.0)) continue;
              const auto [row, col] = key;
              const auto mirror = merged.find({col, row});
              const Complex partner = mirror == merged.end() ? Complex(0.0) : mirror->second;
              const double scale = std::max(1.0, std::abs(value));
              if (std::abs(partner - std::conj(value)) > kHermiticityTolerance * scale) {
                std::ostringstream msg;
                msg << "coordinate storage: entry (" << row << "," << col << ") has no Hermitian partner";
                throw InputError(msg.str());
              }
              s.entries.push_back({row, col, value});
              ++row_count[static_cast<std::size_t>(row)];
            }
            for (auto c : row_count) sparsity_ = std::max(sparsity_, c);
          },
      },
      storage_);
}

SparseHermitianOperator SparseHermitianOperator::identity(Eigen::Index dimension) {
  return diagonal(RealVector::Ones(dimension));
}

SparseHermitianOperator SparseHermitianOperator::zero(Eigen::Index dimension) {
  return diagonal(RealVector::Zero(dimension));
}

SparseHermitianOperator SparseHermitianOperator::diagonal(RealVector diagonal) {
  const auto d = diagonal.size();
  return SparseHermitianOperator(d, DiagonalStorage{std::move(diagonal)});
}

SparseHermitianOperator SparseHermitianOperator::tridiagonal(RealVector diagonal, RealVector off_diagonal) {
  const auto d = diagonal.size();
  return SparseHermitianOperator(d, TridiagonalStorage{std::move(diagonal), std::move(off_diagonal)});
}

SparseHermitianOperator SparseHermitianOperator::from_dense(const ComplexMatrix& dense, double drop_tolerance) {
  if (dense.rows() != dense.cols()) throw InputError("from_dense: matrix is not square");
  const ComplexMatrix herm = 0.5 * (dense + dense.adjoint());
  CooStorage coo;
  for (Eigen::Index i = 0; i < herm.rows(); ++i) {
    for (Eigen::Index j = 0; j < herm.cols(); ++j) {
      if (std::abs(herm(i, j)) > drop_tolerance) coo.entries.push_back({i, j, herm(i, j)});
    }
  }
  return SparseHermitianOperator(dense.rows(), std::move(coo));
}

void SparseHermitianOperator::apply_into(const ComplexVector& x, ComplexVector& y, Complex scale,
                                         bool accumulate) const {
  require_dimension(dimension_, x.size(), "apply");
  if (!accumulate) {
    y.setZero(dimension_);
  } else {
    require_dimension(dimension_, y.size(), "apply (accumulate)");
  }
  std::visit(Overloaded{
                 [&](const DiagonalStorage& s) {
                   for (Eigen::Index i = 0; i < dimension_; ++i) y(i) += scale * s.diagonal(i) * x(i);
                 },
                 [&](const TridiagonalStorage& s) {
                   for (Eigen::Index i = 0; i < dimension_; ++i) {
                     Complex acc = s.diagonal(i) * x(i);
                     if (i > 0) acc += s.off_diagonal(i - 1) * x(i - 1);
                     if (i + 1 < dimension_) acc += s.off_diagonal(i) * x(i + 1);
                     y(i) += scale * acc;
                   }
                 },
                 [&](const CooStorage& s) {
                   for (const auto& e : s.entries) y(e.row) += scale * e.value * x(e.col);
                 },
             },
             storage_);
}

double SparseHermitianOperator::row_sum_norm() const {
  return std::visit(Overloaded{
                        [&](const DiagonalStorage& s) { return s.diagonal.cwiseAbs().maxCoeff(); },
                        [&](const TridiagonalStorage& s) {
                          double best = 0.0;
                          for (Eigen::Index i = 0; i < dimension_; ++i) {
                            double sum = std::abs(s.diagonal(i));
                            if (i > 0) sum += std::abs(s.off_diagonal(i - 1));
                            if (i + 1 < dimension_) sum += std::abs(s.off_diagonal(i));
                            best = std::max(best, sum);
                          }
                          return best;
                        },
                        [&](const CooStorage& s) {
                          RealVector sums = RealVector::Zero(dimension_);
                          for (const auto& e : s.entries) sums(e.row) += std::abs(e.value);
                          return sums.size() ? sums.maxCoeff() : 0.0;
                        },
                    },
                    storage_);
}

ComplexMatrix SparseHermitianOperator::to_dense() const {
  ComplexMatrix dense = ComplexMatrix::Zero(dimension_, dimension_);
  std::visit(Overloaded{
                 [&](const DiagonalStorage& s) {
                   for (Eigen::Index i = 0; i < dimension_; ++i) dense(i, i) = s.diagonal(i);
                 },
                 [&](const TridiagonalStorage& s) {
                   for (Eigen::Index i = 0; i < dimension_; ++i) {
                     dense(i, i) = s.diagonal(i);
                     if (i + 1 < dimension_) {
                       dense(i, i + 1) = s.off_diagonal(i);
                       dense(i + 1, i) = s.off_diagonal(i);
                     }
                   }
                 },
                 [&](const CooStorage& s) {
                   for (const auto& e : s.entries) dense(e.row, e.col) += e.value;
                 },
             },
             storage_);
  return dense;
}

SparseHermitianOperator SparseHermitianOperator::scaled(double factor) const {
  return std::visit(Overloaded{
                        [&](const DiagonalStorage& s) { return diagonal(factor * s.diagonal); },
                        [&](const TridiagonalStorage& s) {
                          return tridiagonal(factor * s.diagonal, factor * s.off_diagonal);
                        },
                        [&](const CooStorage& s) {
                          CooStorage out = s;
                          for (auto& e : out.entries) e.value *= factor;
                          return SparseHermitianOperator(dimension_, std::move(out));
                        },
                    },
                    storage_);
}

namespace {

TridiagonalStorage as_tridiagonal(const SparseHermitianOperator& op) {
  const auto d = op.dimension();
  if (const auto* s = std::get_if<DiagonalStorage>(&op.storage())) {
    return {s->diagonal, RealVector::Zero(d - 1)};
  }
  return std::get<TridiagonalStorage>(op.storage());
}

CooStorage as_coo(const SparseHermitianOperator& op) {
  if (const auto* s = std::get_if<CooStorage>(&op.storage())) return *s;
  CooStorage out;
  const ComplexMatrix dense = op.to_dense();
  for (Eigen::Index i = 0; i < dense.rows(); ++i) {
    for (Eigen::Index j = std::max<Eigen::Index>(0, i - 1); j < std::min(dense.cols(), i + 2); ++j) {
      if (dense(i, j) != Complex(0.0)) out.entries.push_back({i, j, dense(i, j)});
    }
  }
  return out;
}

}  // namespace

SparseHermitianOperator linear_combination(double a, const SparseHermitianOperator& A, double b,
                                           const SparseHermitianOperator& B) {
  require_dimension(A.dimension(), B.dimension(), "linear_combination");
  const auto* da = std::get_if<DiagonalStorage>(&A.storage());
  const auto* db = std::get_if<DiagonalStorage>(&B.storage());
  if (da && db) return SparseHermitianOperator::diagonal(a * da->diagonal + b * db->diagonal);
  const bool a_banded = !std::holds_alternative<CooStorage>(A.storage());
  const bool b_banded = !std::holds_alternative<CooStorage>(B.storage());
  if (a_banded && b_banded) {
    const auto ta = as_tridiagonal(A);
    const auto tb = as_tridiagonal(B);
    return SparseHermitianOperator::tridiagonal(a * ta.diagonal + b * tb.diagonal,
                                                a * ta.off_diagonal + b * tb.off_diagonal);
  }
  CooStorage out;
  for (auto e : as_coo(A).entries) {
    e.value *= a;
    out.entries.push_back(e);
  }
  for (auto e : as_coo(B).entries) {
    e.value *= b;
    out.entries.push_back(e);
  }
  return SparseHermitianOperator(A.dimension(), std::move(out));
}

ComplexVector apply(const SparseHermitianOperator& op, const ComplexVector& psi) {
  ComplexVector out;
  op.apply_into(psi, out);
  return out;
}

ComplexVector apply(const SparseHermitianOperator& op, const QuantumState& psi) {
  return apply(op, psi.amplitudes());
}

double expectation(const SparseHermitianOperator& op, const ComplexVector& psi) {
  const ComplexVector op_psi = apply(op, psi);
  const Complex value = psi.dot(op_psi);  // Eigen's dot conjugates the left operand
  const double scale = std::max(1.0, psi.squaredNorm());
  if (std::abs(value.imag()) > 1e-10 * scale) {
    std::ostringstream msg;
    msg << "expectation: imaginary part " << value.imag() << " for a Hermitian operator";
    throw std::logic_error(msg.str());
  }
  return value.real();
}

double expectation(const SparseHermitianOperator& op, const QuantumState& psi) {
  return expectation(op, psi.amplitudes());
}

double max_norm(const SparseHermitianOperator& op) {
  return std::visit(Overloaded{
                        [](const DiagonalStorage& s) { return s.diagonal.cwiseAbs().maxCoeff(); },
                        [](const TridiagonalStorage& s) {
                          double m = s.diagonal.cwiseAbs().maxCoeff();
                          if (s.off_diagonal.size()) m = std::max(m, s.off_diagonal.cwiseAbs().maxCoeff());
                          return m;
                        },
                        [](const CooStorage& s) {
                          double m = 0.0;
                          for (const auto& e : s.entries) m = std::max(m, std::abs(e.value));
                          return m;
                        },
                    },
                    op.storage());
}

NormEstimate spectral_norm_estimate(const SparseHermitianOperator& op, double tol, int max_iterations) {
  if (!(tol > 0.0)) throw InputError("spectral_norm_estimate: tol must be positive");
  const auto d = op.dimension();
  NormEstimate best;
  if (op.row_sum_norm() == 0.0) {
    best.converged = true;
    return best;
  }
  // Power iteration on op^2 with Aitken-style error estimate from the ratio of
  // successive increments. A start vector that is (numerically) orthogonal to
  // the dominant eigenspace shows up as a stall and triggers a fresh start.
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> normal;
  constexpr int kRestarts = 3;
  int total = 0;
  for (int attempt = 0; attempt < kRestarts && total < max_iterations; ++attempt) {
    ComplexVector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = Complex(normal(rng), normal(rng));
    v.normalize();
    ComplexVector w;
    double estimate = 0.0;
    double previous_change = 0.0;
    for (int it = 0; it < max_iterations - total; ++it) {
      op.apply_into(v, w);
      const double next = w.norm();
      ++best.iterations;
      if (next == 0.0) break;
      const double change = std::abs(next - estimate);
      estimate = next;
      best.value = std::max(best.value, estimate);
      if (it > 2 && previous_change > 0.0) {
        const double ratio = std::min(change / previous_change, 0.999999);
        const double error = change * ratio / (1.0 - ratio);
        if (error <= tol * estimate || change == 0.0) {
          best.converged = true;
          return best;
        }
      }
      previous_change = change;
      op.apply_into(w, v);
      const double vn = v.norm();
      if (vn == 0.0) break;
      v /= vn;
    }
    total = best.iterations;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Example model

void ExampleModelParams::validate() const {
  if (dimension < 2) throw InputError("example model: dimension must be >= 2");
  if (!(r0 > 0.0)) throw InputError("example model: r0 must be positive");
  if (!(gamma0 > 0.0)) throw InputError("example model: gamma0 must be positive");
  if (!coordinates.empty() && static_cast<Eigen::Index>(coordinates.size()) != dimension) {
    throw InputError("example model: coordinates must have one entry per grid point");
  }
}

std::vector<double> ExampleModelParams::grid() const {
  if (!coordinates.empty()) return coordinates;
  std::vector<double> r(static_cast<std::size_t>(dimension));
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = static_cast<double>(i);
  return r;
}

ExampleModel build_example_model(const ExampleModelParams& params) {
  params.validate();
  const auto d = params.dimension;
  const auto r = params.grid();

  RealVector lap_diag = RealVector::Constant(d, 2.0 * params.laplacian_scale);
  RealVector lap_off = RealVector::Constant(d - 1, -params.laplacian_scale);
  RealVector mu(d), obs(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double ri = r[static_cast<std::size_t>(i)];
    mu(i) = ri * std::exp(-ri / params.r0);
    obs(i) = params.gamma0 / std::numbers::pi * std::exp(-params.gamma0 * params.gamma0 * ri * ri);
  }
  ExampleModel model{SparseHermitianOperator::tridiagonal(lap_diag, lap_off),
                     SparseHermitianOperator::diagonal(mu), SparseHermitianOperator::diagonal(obs)};
  if (params.normalize) {
    auto unit = [&](SparseHermitianOperator& op) {
      const double n = spectral_norm_estimate(op, params.norm_tolerance).value;
      if (n > 0.0) op = op.scaled(1.0 / n);
    };
    unit(model.h0);
    unit(model.mu);
    unit(model.observable);
  }
  return model;
}

QuantumState gaussian_state(const std::vector<double>& grid, double center, double width) {
  if (!(width > 0.0)) throw InputError("gaussian_state: width must be positive");
  ComplexVector v(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = (grid[i] - center) / width;
    v(static_cast<Eigen::Index>(i)) = std::exp(-0.5 * x * x);
  }
  return QuantumState::normalized(std::move(v));
}

SparseHermitianOperator random_hermitian(Eigen::Index dimension, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  ComplexMatrix m(dimension, dimension);
  for (Eigen::Index i = 0; i < dimension; ++i) {
    for (Eigen::Index j = 0; j < dimension; ++j) m(i, j) = Complex(normal(rng), normal(rng));
  }
  auto op = SparseHermitianOperator::from_dense(m);
  return op.scaled(1.0 / spectral_norm_estimate(op, 1e-13).value);
}

QuantumState random_state(Eigen::Index dimension, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  ComplexVector v(dimension);
  for (Eigen::Index i = 0; i < dimension; ++i) v(i) = Complex(normal(rng), normal(rng));
  return QuantumState::normalized(std::move(v));
}

}  // namespace qoc

// Copyright 2026 The iontomo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <span>

#include <Eigen/Dense>

#include "json.hpp"

namespace iontomo::quantum {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Rng = std::mt19937_64;

/// 2^n_qubits, throwing std::domain_error when n_qubits is out of range.
int64_t dimension_for(int n_qubits);

/// Normalized state vector on n qubits. Qubit 0 is the most significant bit of
/// the amplitude index.
class PureState {
   public:
    /// Throws std::domain_error unless the length is 2^n (n >= 1) and the norm is 1 within 1e-12.
    explicit PureState(Vector amplitudes);
    /// Normalizes first; throws for a zero vector.
    static PureState normalized(Vector amplitudes);
    static PureState basis(int n_qubits, int64_t index);

    const Vector &amplitudes() const { return amplitudes_; }
    int n_qubits() const { return n_qubits_; }
    int64_t dim() const { return amplitudes_.size(); }
    /// |psi><psi|
    Matrix projector() const;

   private:
    Vector amplitudes_;
    int n_qubits_;
};

/// Hermitian, unit-trace, positive semidefinite matrix on n qubits.
class DensityMatrix {
   public:
    static constexpr double kHermitianTol = 1e-10;
    static constexpr double kTraceTol = 1e-10;
    static constexpr double kEigenFloor = -1e-9;

    /// Throws std::domain_error when any invariant fails.
    explicit DensityMatrix(Matrix matrix);
    static DensityMatrix from_pure(const PureState &psi);
    static DensityMatrix maximally_mixed(int n_qubits);
    /// Clips negative eigenvalues to zero and renormalizes. For reporting paths only.
    static DensityMatrix repaired(const Matrix &matrix);

    const Matrix &matrix() const { return matrix_; }
    int n_qubits() const { return n_qubits_; }
    int64_t dim() const { return matrix_.rows(); }
    double min_eigenvalue() const;
    double purity() const;

   private:
    Matrix matrix_;
    int n_qubits_;
};

class Unitary {
   public:
    static constexpr double kTol = 1e-10;

    /// Throws std::domain_error unless U^dagger U = I within kTol in operator norm.
    explicit Unitary(Matrix matrix);
    static Unitary identity(int64_t dim);

    const Matrix &matrix() const { return matrix_; }
    int64_t dim() const { return matrix_.rows(); }

   private:
    Matrix matrix_;
};

/// Haar-distributed pure state: i.i.d. standard complex normals, normalized.
PureState haar_random_pure_state(int n_qubits, Rng &rng);

/// <psi|rho|psi>, clamped to [0, 1].
double fidelity(const DensityMatrix &rho, const PureState &psi);

/// Kronecker product in list order. Throws for an empty list or non-square factors.
Matrix tensor_product(std::span<const Matrix> ops);

/// Half the trace norm of a - b. Both must be Hermitian.
double trace_distance(const Matrix &a, const Matrix &b);

/// Largest elementwise |m - m^dagger|.
double hermiticity_error(const Matrix &m);

void to_json(nlohmann::json &j, const PureState &psi);
PureState pure_state_from_json(const nlohmann::json &j);
void to_json(nlohmann::json &j, const DensityMatrix &rho);
DensityMatrix density_matrix_from_json(const nlohmann::json &j);

/// Nested arrays of [re, im] pairs.
nlohmann::json matrix_to_json(const Matrix &m);
Matrix matrix_from_json(const nlohmann::json &j);

}  // namespace iontomo::quantum

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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "iontomo/quantum.hpp"
#include "json.hpp"

namespace iontomo::measurement {

using quantum::Matrix;
using quantum::Rng;

/// Two-outcome readout with misidentification probabilities.
///   Lambda0 = diag(1 - p10, p01)   (reads "0")
///   Lambda1 = diag(p10, 1 - p01)   (reads "1")
struct FuzzyQubitPOVM {
    double p10 = 0.0;
    double p01 = 0.0;

    Matrix lambda0() const;
    Matrix lambda1() const;
    /// lambda0() for outcome 0, lambda1() otherwise.
    Matrix element(int outcome) const;
};

/// Throws std::domain_error unless 0 <= p10 < 1 and 0 <= p01 < 1.
FuzzyQubitPOVM build_fuzzy_povm(double p10, double p01);

inline FuzzyQubitPOVM ideal_povm() { return FuzzyQubitPOVM{0.0, 0.0}; }

enum class PauliBasis { X, Y, Z };

char basis_letter(PauliBasis b);
PauliBasis basis_from_letter(char c);

/// Single-qubit rotation taking the Pauli eigenbasis onto the computational one
/// (+1 eigenvector -> |0>, -1 eigenvector -> |1>):
///   Z: I
///   X: H = [[1, 1], [1, -1]] / sqrt(2)
///   Y: H S^dagger = [[1, -i], [1, i]] / sqrt(2)
Matrix basis_rotation(PauliBasis b);

struct ProtocolRow {
    std::string basis;                // one letter per qubit, qubit 0 first
    quantum::Unitary basis_unitary;   // tensor of per-qubit rotations
    std::vector<Matrix> operators;    // U^dag (tensor of per-qubit POVM elements) U, indexed by outcome bits
    int64_t shots = 0;
};

/// 3^n rows in lexicographic X < Y < Z order (qubit 0 varies slowest). Outcome
/// index b has qubit 0 as its most significant bit; bit value 0 means "read 0".
std::vector<ProtocolRow> pauli_protocol(int n_qubits, const FuzzyQubitPOVM &povm, int64_t shots_per_basis);

/// Per-qubit error models; `povms.size()` sets the qubit count.
std::vector<ProtocolRow> pauli_protocol(std::span<const FuzzyQubitPOVM> povms, int64_t shots_per_basis);

/// Same bases and shots, with operators rebuilt from per-qubit POVMs.
std::vector<ProtocolRow> with_povms(std::span<const ProtocolRow> rows, std::span<const FuzzyQubitPOVM> povms);

/// Largest elementwise deviation of sum(operators) from I.
double completeness_error(const ProtocolRow &row);

/// tr(rho Lambda_i) for each outcome, clipped to [0, 1].
std::vector<double> outcome_probabilities(const quantum::DensityMatrix &rho, const ProtocolRow &row);

/// Multinomial draw by sequential binomial conditioning.
std::vector<int64_t> sample_counts(std::span<const double> probabilities, int64_t shots, Rng &rng);

enum class ShotsMode { Total, PerBasis };

/// floor(shots / 3^n) under Total, `shots` under PerBasis.
int64_t shots_per_basis(int n_qubits, int64_t shots, ShotsMode mode);

struct RowCounts {
    std::string basis;
    std::vector<int64_t> counts;
};

struct CountRecord {
    std::vector<RowCounts> rows;
    int64_t shots_per_basis = 0;
    FuzzyQubitPOVM error_model;

    /// Throws std::domain_error unless the record matches the protocol shape and
    /// each row's counts sum to its shots.
    void check_against(std::span<const ProtocolRow> protocol) const;
    int64_t total_shots() const;
};

/// Samples every row of the protocol with one generator. `error_model` is only
/// recorded in the result; the operators already carry it.
CountRecord simulate_counts(const quantum::DensityMatrix &rho, std::span<const ProtocolRow> protocol, Rng &rng,
    const FuzzyQubitPOVM &error_model = {});

bool operator==(const CountRecord &a, const CountRecord &b);

void to_json(nlohmann::json &j, const CountRecord &r);
void from_json(const nlohmann::json &j, CountRecord &r);

}  // namespace iontomo::measurement

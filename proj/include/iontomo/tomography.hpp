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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iontomo/measurement.hpp"
#include "iontomo/quantum.hpp"
#include "json.hpp"

/// Maximum-likelihood state reconstruction in the square-root parameterization
/// rho = A A^dag / tr(A A^dag).
///
/// Each iteration applies the likelihood stationarity map A <- R A with
/// R = (1/N) sum_i (n_i / p_i) Lambda_i. When that full step would lower the
/// likelihood the step is diluted to A <- (I + eps R) A, halving eps until the
/// likelihood does not decrease. The diluted map is an ascent direction for
/// small eps, so the log-likelihood sequence is non-decreasing.
///
/// The fixed-point map alone converges sublinearly when the optimum is a pure
/// state, so each iteration also tries a damped Newton (Levenberg-Marquardt)
/// step on the real coordinates of A and keeps whichever candidate scores higher.
namespace iontomo::tomography {

using quantum::DensityMatrix;
using quantum::Matrix;

/// Fuzzy: reconstruct with the generating (noisy) operators.
/// Standard: reconstruct assuming ideal rotated projectors.
enum class Model { Fuzzy, Standard };

std::string model_name(Model m);
Model model_from_name(const std::string &name);

/// Probabilities below this are floored before taking logs.
inline constexpr double kProbabilityFloor = 1e-15;

inline constexpr int64_t kMaxNewtonCoordinates = 512;

struct ReconstructionConfig {
    Model model = Model::Fuzzy;
    int max_iterations = 5000;
    /// Stop once the log-likelihood gain per shot drops below this...
    double convergence_tol = 1e-10;
    /// ...and the trace distance between successive iterates is below this.
    double step_tol = 1e-9;
    /// Columns of A. 0 means full rank.
    int rank = 0;
    /// Keep the log-likelihood of every iterate in the result.
    bool record_history = false;
    /// Try damped Newton steps alongside the fixed-point map. Skipped when A has
    /// more than kMaxNewtonCoordinates real coordinates.
    bool second_order = true;

    void validate(int64_t dim) const;
};

struct ReconstructionResult {
    DensityMatrix rho_hat;
    double log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
    /// Outcomes with counts whose model probability sits at the floor.
    int64_t degenerate_outcomes = 0;
    std::vector<double> history;
};

/// Protocol rows whose operators correspond to `model`. Fuzzy keeps the rows;
/// Standard rebuilds them from ideal projectors in the same bases.
std::vector<measurement::ProtocolRow> model_operators(std::span<const measurement::ProtocolRow> protocol, Model model);

/// sum_rows sum_outcomes n_i log(max(tr(rho Lambda_i), 1e-15)).
double log_likelihood(
    const DensityMatrix &rho, const measurement::CountRecord &record, std::span<const measurement::ProtocolRow> rows);

/// Log-likelihood as a function of an unnormalized root A (dim x rank).
double log_likelihood_of_root(
    const Matrix &root, const measurement::CountRecord &record, std::span<const measurement::ProtocolRow> rows);

/// Gradient of log_likelihood_of_root: real part is dL/dRe(A), imaginary part dL/dIm(A).
Matrix likelihood_gradient(
    const Matrix &root, const measurement::CountRecord &record, std::span<const measurement::ProtocolRow> rows);

/// Hessian of log_likelihood_of_root in the real coordinates [Re vec(A); Im vec(A)]
/// (column-major vec).
Eigen::MatrixXd likelihood_hessian(
    const Matrix &root, const measurement::CountRecord &record, std::span<const measurement::ProtocolRow> rows);

ReconstructionResult reconstruct(const measurement::CountRecord &record,
    std::span<const measurement::ProtocolRow> protocol, const ReconstructionConfig &config = {});

/// 1 - <psi|rho_hat|psi>, clamped to [0, 1].
double infidelity(const ReconstructionResult &result, const quantum::PureState &true_state);

/// Counts rounded from shots * p_i per row with largest-remainder rounding, so
/// each row still sums to its shots.
measurement::CountRecord expected_counts(const DensityMatrix &rho, std::span<const measurement::ProtocolRow> protocol);

void to_json(nlohmann::json &j, const ReconstructionResult &r);
ReconstructionResult reconstruction_result_from_json(const nlohmann::json &j);

}  // namespace iontomo::tomography

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

#include "iontomo/tomography.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace iontomo::tomography {

using measurement::CountRecord;
using measurement::ProtocolRow;
using quantum::Complex;

namespace {

// Flattened (count, operator) pairs over all rows.
struct Terms {
    std::vector<double> counts;
    std::vector<Matrix> ops;
    std::vector<Matrix> ops_t;  // transposes, for tr(rho A) = sum(rho .* A^T)
    double total = 0.0;
    int64_t dim = 0;
};

Terms flatten(const CountRecord &record, std::span<const ProtocolRow> rows) {
    if (rows.empty()) {
        throw std::domain_error("empty protocol");
    }
    record.check_against(rows);
    Terms terms;
    terms.dim = rows.front().basis_unitary.dim();
    for (size_t r = 0; r < rows.size(); ++r) {
        for (size_t i = 0; i < rows[r].operators.size(); ++i) {
            double n = static_cast<double>(record.rows[r].counts[i]);
            if (n == 0.0) {
                continue;
            }
            terms.counts.push_back(n);
            terms.ops.push_back(rows[r].operators[i]);
            terms.ops_t.push_back(rows[r].operators[i].transpose());
            terms.total += n;
        }
    }
    return terms;
}

double probability(const Matrix &rho, const Matrix &op_t) { return (rho.cwiseProduct(op_t)).sum().real(); }

double evaluate(const Terms &terms, const Matrix &rho) {
    double l = 0.0;
    for (size_t i = 0; i < terms.counts.size(); ++i) {
        l += terms.counts[i] * std::log(std::max(probability(rho, terms.ops_t[i]), kProbabilityFloor));
    }
    return l;
}

// R = (1/N) sum_i n_i Lambda_i / p_i
Matrix stationarity_operator(const Terms &terms, const Matrix &rho) {
    Matrix r = Matrix::Zero(terms.dim, terms.dim);
    for (size_t i = 0; i < terms.counts.size(); ++i) {
        double p = std::max(probability(rho, terms.ops_t[i]), kProbabilityFloor);
        r += (terms.counts[i] / p) * terms.ops[i];
    }
    r /= terms.total;
    return 0.5 * (r + r.adjoint());
}

Matrix density_of_root(const Matrix &root) {
    Matrix rho = root * root.adjoint();
    rho /= rho.trace().real();
    return 0.5 * (rho + rho.adjoint());
}

Eigen::VectorXd to_real(const Matrix &m) {
    const Eigen::Index n = m.size();
    Eigen::VectorXd v(2 * n);
    for (Eigen::Index k = 0; k < n; ++k) {
        v(k) = m.data()[k].real();
        v(n + k) = m.data()[k].imag();
    }
    return v;
}

Matrix from_real(const Eigen::VectorXd &v, Eigen::Index rows, Eigen::Index cols) {
    const Eigen::Index n = rows * cols;
    Matrix m(rows, cols);
    for (Eigen::Index k = 0; k < n; ++k) {
        m.data()[k] = Complex(v(k), v(n + k));
    }
    return m;
}

// Real-coordinate Hessian of sum_i n_i log tr(A^dag L_i A) - N log tr(A^dag A).
Eigen::MatrixXd root_hessian(const Terms &terms, const Matrix &root) {
    const Eigen::Index d = root.rows();
    const Eigen::Index r = root.cols();
    const Eigen::Index n = d * r;
    const double s = root.squaredNorm();
    Matrix rho = root * root.adjoint() / s;

    Matrix k = Matrix::Zero(d, d);
    Eigen::MatrixXd outer(2 * n, static_cast<Eigen::Index>(terms.counts.size()));
    for (size_t i = 0; i < terms.counts.size(); ++i) {
        double q = std::max(probability(rho, terms.ops_t[i]), kProbabilityFloor) * s;
        k += (terms.counts[i] / q) * terms.ops[i];
        outer.col(static_cast<Eigen::Index>(i)) = std::sqrt(terms.counts[i]) / q * to_real(terms.ops[i] * root);
    }

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (Eigen::Index c = 0; c < r; ++c) {
        const Eigen::Index o = c * d;
        h.block(o, o, d, d) = 2.0 * k.real();
        h.block(o, n + o, d, d) = -2.0 * k.imag();
        h.block(n + o, o, d, d) = 2.0 * k.imag();
        h.block(n + o, n + o, d, d) = 2.0 * k.real();
    }
    h.noalias() -= 4.0 * outer * outer.transpose();
    Eigen::VectorXd a = to_real(root);
    h -= (2.0 * terms.total / s) * Eigen::MatrixXd::Identity(2 * n, 2 * n);
    h.noalias() += (4.0 * terms.total / (s * s)) * a * a.transpose();
    return 0.5 * (h + h.transpose());
}

Matrix root_gradient(const Terms &terms, const Matrix &root) {
    const double s = root.squaredNorm();
    Matrix r = stationarity_operator(terms, density_of_root(root)) * terms.total;
    return (2.0 / s) * (r - terms.total * Matrix::Identity(terms.dim, terms.dim)) * root;
}

Matrix initial_root(int64_t dim, int rank) {
    if (rank == dim) {
        return Matrix::Identity(dim, dim) / std::sqrt(static_cast<double>(dim));
    }
    Matrix full = Matrix::Identity(dim, dim) + Matrix::Constant(dim, dim, 1.0 / static_cast<double>(dim));
    Matrix root = full.leftCols(rank);
    return root / root.norm();
}

}  // namespace

std::string model_name(Model m) { return m == Model::Fuzzy ? "fuzzy" : "standard"; }

Model model_from_name(const std::string &name) {
    if (name == "fuzzy") {
        return Model::Fuzzy;
    }
    if (name == "standard") {
        return Model::Standard;
    }
    throw std::domain_error("unknown measurement model '" + name + "'");
}

void ReconstructionConfig::validate(int64_t dim) const {
    if (max_iterations < 1) {
        throw std::domain_error("max_iterations must be >= 1");
    }
    if (!(convergence_tol > 0.0)) {
        throw std::domain_error("convergence_tol must be > 0");
    }
    if (!(step_tol > 0.0)) {
        throw std::domain_error("step_tol must be > 0");
    }
    if (rank < 0 || rank > dim) {
        throw std::domain_error("rank must lie in [1, dim] (0 selects full rank)");
    }
}

std::vector<ProtocolRow> model_operators(std::span<const ProtocolRow> protocol, Model model) {
    if (model == Model::Fuzzy || protocol.empty()) {
        return {protocol.begin(), protocol.end()};
    }
    std::vector<measurement::FuzzyQubitPOVM> ideal(protocol.front().basis.size(), measurement::ideal_povm());
    return measurement::with_povms(protocol, ideal);
}

double log_likelihood(const DensityMatrix &rho, const CountRecord &record, std::span<const ProtocolRow> rows) {
    Terms terms = flatten(record, rows);
    if (rho.dim() != terms.dim) {
        throw std::domain_error("log_likelihood: dimension mismatch");
    }
    return evaluate(terms, rho.matrix());
}

double log_likelihood_of_root(const Matrix &root, const CountRecord &record, std::span<const ProtocolRow> rows) {
    Terms terms = flatten(record, rows);
    if (root.rows() != terms.dim) {
        throw std::domain_error("log_likelihood_of_root: dimension mismatch");
    }
    return evaluate(terms, density_of_root(root));
}

Matrix likelihood_gradient(const Matrix &root, const CountRecord &record, std::span<const ProtocolRow> rows) {
    Terms terms = flatten(record, rows);
    if (root.rows() != terms.dim) {
        throw std::domain_error("likelihood_gradient: dimension mismatch");
    }
    // L(A) = sum_i n_i log tr(A^dag Lambda_i A) - N log tr(A^dag A)
    // dL/dRe(A) + i dL/dIm(A) = 2 (sum_i n_i Lambda_i A / tr(A^dag Lambda_i A) - N A / tr(A^dag A))
    return root_gradient(terms, root);
}

Eigen::MatrixXd likelihood_hessian(const Matrix &root, const CountRecord &record, std::span<const ProtocolRow> rows) {
    Terms terms = flatten(record, rows);
    if (root.rows() != terms.dim) {
        throw std::domain_error("likelihood_hessian: dimension mismatch");
    }
    return root_hessian(terms, root);
}

ReconstructionResult reconstruct(
    const CountRecord &record, std::span<const ProtocolRow> protocol, const ReconstructionConfig &config) {
    if (protocol.empty()) {
        throw std::domain_error("reconstruct: empty protocol");
    }
    const int64_t dim = protocol.front().basis_unitary.dim();
    config.validate(dim);
    const int rank = config.rank == 0 ? static_cast<int>(dim) : config.rank;

    std::vector<ProtocolRow> rows = model_operators(protocol, config.model);
    Terms terms = flatten(record, rows);

    Matrix root = initial_root(dim, rank);
    Matrix rho = density_of_root(root);
    double l = evaluate(terms, rho);

    ReconstructionResult result{DensityMatrix(rho), l, 0, false, 0, {}};
    if (config.record_history) {
        result.history.push_back(l);
    }
    if (terms.total == 0.0) {
        result.converged = true;
        return result;
    }

    const Matrix eye = Matrix::Identity(dim, dim);
    const bool newton = config.second_order && 2 * dim * rank <= kMaxNewtonCoordinates;
    double damping = 1e-3;
    for (int it = 1; it <= config.max_iterations; ++it) {
        Matrix r = stationarity_operator(terms, rho);

        Matrix next_root = r * root;
        Matrix next_rho = density_of_root(next_root);
        double next_l = evaluate(terms, next_rho);

        if (newton) {
            // Solve (max(-H, 0) + damping) step = g in per-shot units.
            Eigen::VectorXd g = to_real(root_gradient(terms, root)) / terms.total;
            Eigen::MatrixXd neg_h = -root_hessian(terms, root) / terms.total;
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(neg_h);
            Eigen::VectorXd curvature = eig.eigenvalues().cwiseMax(0.0).array() + damping;
            Eigen::VectorXd step =
                eig.eigenvectors() * (eig.eigenvectors().transpose() * g).cwiseQuotient(curvature);
            Matrix newton_root = root + from_real(step, root.rows(), root.cols());
            Matrix newton_rho = density_of_root(newton_root);
            double newton_l = evaluate(terms, newton_rho);
            if (newton_l > l) {
                damping = std::max(damping / 3.0, 1e-15);
            } else {
                damping = std::min(damping * 4.0, 1e8);
            }
            if (newton_l > next_l || !std::isfinite(next_l)) {
                next_root = std::move(newton_root);
                next_rho = std::move(newton_rho);
                next_l = newton_l;
            }
        }

        double eps = 1.0;
        while (!(next_l >= l) && eps > 1e-14) {
            next_root = (eye + eps * r) * root;
            next_rho = density_of_root(next_root);
            next_l = evaluate(terms, next_rho);
            eps *= 0.5;
        }
        result.iterations = it;
        if (!(next_l >= l)) {
            // No ascent direction survives roundoff: stationary point.
            result.converged = true;
            break;
        }
        assert(next_l - l >= -1e-9);

        double gain = next_l - l;
        double step = quantum::trace_distance(next_rho, rho);
        root = next_root / next_root.norm();
        rho = next_rho;
        l = next_l;
        if (config.record_history) {
            result.history.push_back(l);
        }
        if (gain / terms.total < config.convergence_tol && step < config.step_tol) {
            result.converged = true;
            break;
        }
    }

    result.rho_hat = DensityMatrix(rho);
    result.log_likelihood = l;
    for (size_t i = 0; i < terms.counts.size(); ++i) {
        if (probability(rho, terms.ops_t[i]) <= kProbabilityFloor) {
            ++result.degenerate_outcomes;
        }
    }
    return result;
}

double infidelity(const ReconstructionResult &result, const quantum::PureState &true_state) {
    return std::clamp(1.0 - quantum::fidelity(result.rho_hat, true_state), 0.0, 1.0);
}

CountRecord expected_counts(const DensityMatrix &rho, std::span<const ProtocolRow> protocol) {
    CountRecord record;
    if (!protocol.empty()) {
        record.shots_per_basis = protocol.front().shots;
    }
    for (const auto &row : protocol) {
        auto p = measurement::outcome_probabilities(rho, row);
        double total = std::accumulate(p.begin(), p.end(), 0.0);
        std::vector<int64_t> counts(p.size());
        std::vector<std::pair<double, size_t>> remainders;
        int64_t assigned = 0;
        for (size_t i = 0; i < p.size(); ++i) {
            double exact = static_cast<double>(row.shots) * p[i] / total;
            counts[i] = static_cast<int64_t>(std::floor(exact));
            assigned += counts[i];
            remainders.emplace_back(exact - std::floor(exact), i);
        }
        std::stable_sort(remainders.begin(), remainders.end(),
            [](const auto &a, const auto &b) { return a.first > b.first; });
        for (size_t k = 0; assigned < row.shots; ++k, ++assigned) {
            ++counts[remainders[k % remainders.size()].second];
        }
        record.rows.push_back(measurement::RowCounts{row.basis, std::move(counts)});
    }
    return record;
}

void to_json(nlohmann::json &j, const ReconstructionResult &r) {
    j = nlohmann::json{{"rho_hat", r.rho_hat},
                       {"log_likelihood", r.log_likelihood},
                       {"iterations", r.iterations},
                       {"converged", r.converged},
                       {"degenerate_outcomes", r.degenerate_outcomes}};
}

ReconstructionResult reconstruction_result_from_json(const nlohmann::json &j) {
    return ReconstructionResult{quantum::density_matrix_from_json(j.at("rho_hat")),
        j.at("log_likelihood").get<double>(), j.at("iterations").get<int>(), j.at("converged").get<bool>(),
        j.value("degenerate_outcomes", int64_t{0}), {}};
}

}  // namespace iontomo::tomography

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

#include "iontomo/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace iontomo::quantum {

namespace {

int qubits_for_dim(int64_t dim) {
    if (dim < 2 || (dim & (dim - 1)) != 0) {
        std::ostringstream msg;
        msg << "dimension " << dim << " is not a power of two >= 2";
        throw std::domain_error(msg.str());
    }
    int n = 0;
    while ((int64_t{1} << n) < dim) {
        ++n;
    }
    return n;
}

Eigen::VectorXd hermitian_eigenvalues(const Matrix &m) {
    Matrix h = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
}

}  // namespace

int64_t dimension_for(int n_qubits) {
    if (n_qubits < 1 || n_qubits > 30) {
        throw std::domain_error("n_qubits must lie in [1, 30]");
    }
    return int64_t{1} << n_qubits;
}

PureState::PureState(Vector amplitudes) : amplitudes_(std::move(amplitudes)) {
    n_qubits_ = qubits_for_dim(amplitudes_.size());
    double norm2 = amplitudes_.squaredNorm();
    if (!(std::abs(norm2 - 1.0) <= 1e-12)) {
        std::ostringstream msg;
        msg << "pure state is not normalized (|psi|^2 = " << norm2 << ")";
        throw std::domain_error(msg.str());
    }
}

PureState PureState::normalized(Vector amplitudes) {
    double norm = amplitudes.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw std::domain_error("cannot normalize a zero or non-finite vector");
    }
    amplitudes /= norm;
    return PureState(std::move(amplitudes));
}

PureState PureState::basis(int n_qubits, int64_t index) {
    int64_t dim = dimension_for(n_qubits);
    if (index < 0 || index >= dim) {
        throw std::domain_error("basis index out of range");
    }
    Vector v = Vector::Zero(dim);
    v(index) = 1.0;
    return PureState(std::move(v));
}

Matrix PureState::projector() const { return amplitudes_ * amplitudes_.adjoint(); }

DensityMatrix::DensityMatrix(Matrix matrix) : matrix_(std::move(matrix)) {
    if (matrix_.rows() != matrix_.cols()) {
        throw std::domain_error("density matrix must be square");
    }
    n_qubits_ = qubits_for_dim(matrix_.rows());
    if (!matrix_.allFinite()) {
        throw std::domain_error("density matrix has non-finite entries");
    }
    double herm = hermiticity_error(matrix_);
    if (herm > kHermitianTol) {
        std::ostringstream msg;
        msg << "density matrix is not Hermitian (max deviation " << herm << ")";
        throw std::domain_error(msg.str());
    }
    Complex tr = matrix_.trace();
    if (std::abs(tr - 1.0) > kTraceTol) {
        std::ostringstream msg;
        msg << "density matrix trace " << tr.real() << " differs from 1";
        throw std::domain_error(msg.str());
    }
    double lo = min_eigenvalue();
    if (lo < kEigenFloor) {
        std::ostringstream msg;
        msg << "density matrix has negative eigenvalue " << lo;
        throw std::domain_error(msg.str());
    }
}

DensityMatrix DensityMatrix::from_pure(const PureState &psi) { return DensityMatrix(psi.projector()); }

DensityMatrix DensityMatrix::maximally_mixed(int n_qubits) {
    int64_t dim = dimension_for(n_qubits);
    return DensityMatrix(Matrix::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::repaired(const Matrix &matrix) {
    Matrix h = 0.5 * (matrix + matrix.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
    Eigen::VectorXd w = solver.eigenvalues().cwiseMax(0.0);
    double total = w.sum();
    if (!(total > 0.0)) {
        throw std::domain_error("cannot repair a matrix with no positive spectrum");
    }
    w /= total;
    Matrix v = solver.eigenvectors();
    Matrix out = v * w.cast<Complex>().asDiagonal() * v.adjoint();
    out = 0.5 * (out + out.adjoint());
    return DensityMatrix(std::move(out));
}

double DensityMatrix::min_eigenvalue() const { return hermitian_eigenvalues(matrix_).minCoeff(); }

double DensityMatrix::purity() const { return (matrix_ * matrix_).trace().real(); }

Unitary::Unitary(Matrix matrix) : matrix_(std::move(matrix)) {
    if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0) {
        throw std::domain_error("unitary must be a non-empty square matrix");
    }
    Matrix defect = matrix_.adjoint() * matrix_ - Matrix::Identity(matrix_.rows(), matrix_.cols());
    // Operator norm of a Hermitian defect is its largest |eigenvalue|.
    double err = hermitian_eigenvalues(defect).cwiseAbs().maxCoeff();
    if (!(err <= kTol)) {
        std::ostringstream msg;
        msg << "matrix is not unitary (||U^dag U - I|| = " << err << ")";
        throw std::domain_error(msg.str());
    }
}

Unitary Unitary::identity(int64_t dim) { return Unitary(Matrix::Identity(dim, dim)); }

PureState haar_random_pure_state(int n_qubits, Rng &rng) {
    int64_t dim = dimension_for(n_qubits);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(dim);
    for (int64_t i = 0; i < dim; ++i) {
        double re = normal(rng);
        double im = normal(rng);
        v(i) = Complex(re, im);
    }
    return PureState::normalized(std::move(v));
}

double fidelity(const DensityMatrix &rho, const PureState &psi) {
    if (rho.dim() != psi.dim()) {
        throw std::domain_error("fidelity: dimension mismatch");
    }
    const Vector &a = psi.amplitudes();
    double f = a.dot(rho.matrix() * a).real();
    return std::clamp(f, 0.0, 1.0);
}

Matrix tensor_product(std::span<const Matrix> ops) {
    if (ops.empty()) {
        throw std::domain_error("tensor_product: empty operand list");
    }
    Matrix acc = ops.front();
    for (size_t n = 0; n < ops.size(); ++n) {
        if (ops[n].rows() != ops[n].cols()) {
            throw std::domain_error("tensor_product: operands must be square");
        }
        if (n == 0) {
            continue;
        }
        const Matrix &b = ops[n];
        Matrix next(acc.rows() * b.rows(), acc.cols() * b.cols());
        for (Eigen::Index i = 0; i < acc.rows(); ++i) {
            for (Eigen::Index j = 0; j < acc.cols(); ++j) {
                next.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = acc(i, j) * b;
            }
        }
        acc = std::move(next);
    }
    return acc;
}

double trace_distance(const Matrix &a, const Matrix &b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::domain_error("trace_distance: dimension mismatch");
    }
    return 0.5 * hermitian_eigenvalues(a - b).cwiseAbs().sum();
}

double hermiticity_error(const Matrix &m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

nlohmann::json matrix_to_json(const Matrix &m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back({m(i, j).real(), m(i, j).imag()});
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json &j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.at(0).size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j.at(i).size()) != cols) {
            throw std::domain_error("matrix JSON rows have unequal length");
        }
        for (Eigen::Index k = 0; k < cols; ++k) {
            const auto &entry = j.at(i).at(k);
            m(i, k) = Complex(entry.at(0).get<double>(), entry.at(1).get<double>());
        }
    }
    return m;
}

void to_json(nlohmann::json &j, const PureState &psi) {
    nlohmann::json amps = nlohmann::json::array();
    for (Eigen::Index i = 0; i < psi.amplitudes().size(); ++i) {
        amps.push_back({psi.amplitudes()(i).real(), psi.amplitudes()(i).imag()});
    }
    j = nlohmann::json{{"n_qubits", psi.n_qubits()}, {"amplitudes", std::move(amps)}};
}

PureState pure_state_from_json(const nlohmann::json &j) {
    const auto &amps = j.at("amplitudes");
    Vector v(static_cast<Eigen::Index>(amps.size()));
    for (size_t i = 0; i < amps.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = Complex(amps.at(i).at(0).get<double>(), amps.at(i).at(1).get<double>());
    }
    PureState psi(std::move(v));
    if (psi.n_qubits() != j.at("n_qubits").get<int>()) {
        throw std::domain_error("pure state JSON: n_qubits does not match amplitude count");
    }
    return psi;
}

void to_json(nlohmann::json &j, const DensityMatrix &rho) {
    j = nlohmann::json{{"n_qubits", rho.n_qubits()}, {"matrix", matrix_to_json(rho.matrix())}};
}

DensityMatrix density_matrix_from_json(const nlohmann::json &j) {
    DensityMatrix rho(matrix_from_json(j.at("matrix")));
    if (rho.n_qubits() != j.at("n_qubits").get<int>()) {
        throw std::domain_error("density matrix JSON: n_qubits does not match matrix size");
    }
    return rho;
}

}  // namespace iontomo::quantum

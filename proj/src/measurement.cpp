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

#include "iontomo/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace iontomo::measurement {

using quantum::Complex;

Matrix FuzzyQubitPOVM::lambda0() const {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 1.0 - p10;
    m(1, 1) = p01;
    return m;
}

Matrix FuzzyQubitPOVM::lambda1() const {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = p10;
    m(1, 1) = 1.0 - p01;
    return m;
}

Matrix FuzzyQubitPOVM::element(int outcome) const { return outcome == 0 ? lambda0() : lambda1(); }

FuzzyQubitPOVM build_fuzzy_povm(double p10, double p01) {
    if (!(p10 >= 0.0 && p10 < 1.0)) {
        throw std::domain_error("p10 must lie in [0, 1)");
    }
    if (!(p01 >= 0.0 && p01 < 1.0)) {
        throw std::domain_error("p01 must lie in [0, 1)");
    }
    return FuzzyQubitPOVM{p10, p01};
}

char basis_letter(PauliBasis b) {
    switch (b) {
        case PauliBasis::X:
            return 'X';
        case PauliBasis::Y:
            return 'Y';
        case PauliBasis::Z:
            return 'Z';
    }
    return '?';
}

PauliBasis basis_from_letter(char c) {
    switch (c) {
        case 'X':
            return PauliBasis::X;
        case 'Y':
            return PauliBasis::Y;
        case 'Z':
            return PauliBasis::Z;
        default:
            throw std::domain_error(std::string("unknown Pauli basis letter '") + c + "'");
    }
}

Matrix basis_rotation(PauliBasis b) {
    const double s = 1.0 / std::sqrt(2.0);
    const Complex i(0.0, 1.0);
    Matrix u(2, 2);
    switch (b) {
        case PauliBasis::X:
            u << s, s, s, -s;
            break;
        case PauliBasis::Y:
            u << s, -i * s, s, i * s;
            break;
        case PauliBasis::Z:
            u = Matrix::Identity(2, 2);
            break;
    }
    return u;
}

namespace {

ProtocolRow make_row(const std::string &basis, std::span<const FuzzyQubitPOVM> povms, int64_t shots) {
    const int n = static_cast<int>(basis.size());
    std::vector<Matrix> rotations;
    rotations.reserve(n);
    for (char c : basis) {
        rotations.push_back(basis_rotation(basis_from_letter(c)));
    }
    quantum::Unitary u(quantum::tensor_product(rotations));
    const Matrix &um = u.matrix();

    const int64_t outcomes = quantum::dimension_for(n);
    std::vector<Matrix> operators;
    operators.reserve(outcomes);
    std::vector<Matrix> factors(n);
    for (int64_t b = 0; b < outcomes; ++b) {
        for (int q = 0; q < n; ++q) {
            int bit = static_cast<int>((b >> (n - 1 - q)) & 1);
            factors[q] = povms[q].element(bit);
        }
        Matrix op = um.adjoint() * quantum::tensor_product(factors) * um;
        operators.push_back(0.5 * (op + op.adjoint()));
    }
    return ProtocolRow{basis, std::move(u), std::move(operators), shots};
}

}  // namespace

std::vector<ProtocolRow> pauli_protocol(std::span<const FuzzyQubitPOVM> povms, int64_t shots_per_basis) {
    const int n = static_cast<int>(povms.size());
    quantum::dimension_for(n);
    if (shots_per_basis < 1) {
        throw std::domain_error("shots_per_basis must be >= 1");
    }
    for (const auto &p : povms) {
        build_fuzzy_povm(p.p10, p.p01);
    }
    int64_t rows = 1;
    for (int q = 0; q < n; ++q) {
        rows *= 3;
    }
    static constexpr char kLetters[3] = {'X', 'Y', 'Z'};
    std::vector<ProtocolRow> protocol;
    protocol.reserve(rows);
    for (int64_t r = 0; r < rows; ++r) {
        std::string basis(n, 'Z');
        int64_t rem = r;
        for (int q = n - 1; q >= 0; --q) {
            basis[q] = kLetters[rem % 3];
            rem /= 3;
        }
        protocol.push_back(make_row(basis, povms, shots_per_basis));
    }
    return protocol;
}

std::vector<ProtocolRow> pauli_protocol(int n_qubits, const FuzzyQubitPOVM &povm, int64_t shots_per_basis) {
    quantum::dimension_for(n_qubits);
    std::vector<FuzzyQubitPOVM> povms(n_qubits, povm);
    return pauli_protocol(povms, shots_per_basis);
}

std::vector<ProtocolRow> with_povms(std::span<const ProtocolRow> rows, std::span<const FuzzyQubitPOVM> povms) {
    std::vector<ProtocolRow> out;
    out.reserve(rows.size());
    for (const auto &row : rows) {
        if (row.basis.size() != povms.size()) {
            throw std::domain_error("with_povms: qubit count mismatch");
        }
        out.push_back(make_row(row.basis, povms, row.shots));
    }
    return out;
}

double completeness_error(const ProtocolRow &row) {
    Matrix sum = Matrix::Zero(row.basis_unitary.dim(), row.basis_unitary.dim());
    for (const auto &op : row.operators) {
        sum += op;
    }
    return (sum - Matrix::Identity(sum.rows(), sum.cols())).cwiseAbs().maxCoeff();
}

std::vector<double> outcome_probabilities(const quantum::DensityMatrix &rho, const ProtocolRow &row) {
    if (rho.dim() != row.basis_unitary.dim()) {
        throw std::domain_error("outcome_probabilities: dimension mismatch");
    }
    std::vector<double> p;
    p.reserve(row.operators.size());
    for (const auto &op : row.operators) {
        // tr(rho A) = sum_ij rho_ij A_ji
        double v = (rho.matrix().array() * op.transpose().array()).sum().real();
        p.push_back(std::clamp(v, 0.0, 1.0));
    }
    return p;
}

std::vector<int64_t> sample_counts(std::span<const double> probabilities, int64_t shots, Rng &rng) {
    if (shots < 0) {
        throw std::domain_error("sample_counts: negative shots");
    }
    if (probabilities.empty()) {
        throw std::domain_error("sample_counts: empty probability vector");
    }
    double total = 0.0;
    for (double p : probabilities) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::domain_error("sample_counts: probabilities must lie in [0, 1]");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::domain_error("sample_counts: probabilities do not sum to 1");
    }
    std::vector<int64_t> counts(probabilities.size(), 0);
    int64_t remaining = shots;
    double mass_left = total;
    for (size_t i = 0; i + 1 < probabilities.size() && remaining > 0; ++i) {
        double conditional = mass_left > 0.0 ? std::clamp(probabilities[i] / mass_left, 0.0, 1.0) : 0.0;
        std::binomial_distribution<int64_t> draw(remaining, conditional);
        counts[i] = draw(rng);
        remaining -= counts[i];
        mass_left -= probabilities[i];
    }
    counts.back() += remaining;
    return counts;
}

int64_t shots_per_basis(int n_qubits, int64_t shots, ShotsMode mode) {
    int64_t rows = 1;
    for (int q = 0; q < n_qubits; ++q) {
        rows *= 3;
    }
    if (mode == ShotsMode::PerBasis) {
        return shots;
    }
    if (shots < rows) {
        throw std::domain_error("total shots must cover at least one shot per basis");
    }
    return shots / rows;
}

void CountRecord::check_against(std::span<const ProtocolRow> protocol) const {
    if (rows.size() != protocol.size()) {
        throw std::domain_error("count record has a different number of rows than the protocol");
    }
    for (size_t r = 0; r < rows.size(); ++r) {
        const auto &row = rows[r];
        if (row.basis != protocol[r].basis) {
            throw std::domain_error("count record basis '" + row.basis + "' does not match protocol '" +
                                    protocol[r].basis + "'");
        }
        if (row.counts.size() != protocol[r].operators.size()) {
            throw std::domain_error("count record row has the wrong number of outcomes");
        }
        int64_t sum = 0;
        for (int64_t c : row.counts) {
            if (c < 0) {
                throw std::domain_error("count record has a negative count");
            }
            sum += c;
        }
        if (sum != protocol[r].shots) {
            std::ostringstream msg;
            msg << "row " << row.basis << " counts sum to " << sum << ", expected " << protocol[r].shots;
            throw std::domain_error(msg.str());
        }
    }
}

int64_t CountRecord::total_shots() const {
    int64_t total = 0;
    for (const auto &row : rows) {
        total = std::accumulate(row.counts.begin(), row.counts.end(), total);
    }
    return total;
}

CountRecord simulate_counts(
    const quantum::DensityMatrix &rho, std::span<const ProtocolRow> protocol, Rng &rng, const FuzzyQubitPOVM &error_model) {
    CountRecord record;
    record.error_model = error_model;
    if (!protocol.empty()) {
        record.shots_per_basis = protocol.front().shots;
    }
    for (const auto &row : protocol) {
        auto p = outcome_probabilities(rho, row);
        record.rows.push_back(RowCounts{row.basis, sample_counts(p, row.shots, rng)});
    }
    return record;
}

bool operator==(const CountRecord &a, const CountRecord &b) {
    if (a.shots_per_basis != b.shots_per_basis || a.error_model.p10 != b.error_model.p10 ||
        a.error_model.p01 != b.error_model.p01 || a.rows.size() != b.rows.size()) {
        return false;
    }
    for (size_t i = 0; i < a.rows.size(); ++i) {
        if (a.rows[i].basis != b.rows[i].basis || a.rows[i].counts != b.rows[i].counts) {
            return false;
        }
    }
    return true;
}

void to_json(nlohmann::json &j, const CountRecord &r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto &row : r.rows) {
        rows.push_back({{"basis", row.basis}, {"counts", row.counts}});
    }
    j = nlohmann::json{{"rows", std::move(rows)},
                       {"shots_per_basis", r.shots_per_basis},
                       {"error_model", {{"p10", r.error_model.p10}, {"p01", r.error_model.p01}}}};
}

void from_json(const nlohmann::json &j, CountRecord &r) {
    r.rows.clear();
    for (const auto &row : j.at("rows")) {
        r.rows.push_back(RowCounts{row.at("basis").get<std::string>(), row.at("counts").get<std::vector<int64_t>>()});
    }
    j.at("shots_per_basis").get_to(r.shots_per_basis);
    r.error_model.p10 = j.at("error_model").at("p10").get<double>();
    r.error_model.p01 = j.at("error_model").at("p01").get<double>();
}

}  // namespace iontomo::measurement

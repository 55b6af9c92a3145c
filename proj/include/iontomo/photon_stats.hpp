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

#include <cmath>
#include <cstdint>
#include <optional>
#include <type_traits>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

/// Photon-count statistics of fluorescence readout for a single ion qubit.
///
/// The bright level |0> fluoresces with Poisson intensity `lambda_b`. The dark
/// level |1> emits nothing until it decays (rate `lambda`) into |0>, after which
/// it fluoresces for the rest of the window. Detector dark/background counts
/// with intensity `lambda_d` are added on the dark channel (and optionally on
/// the bright one). A count k >= k0 is read as outcome "0" (bright), k < k0 as
/// outcome "1" (dark).
namespace iontomo::photon_stats {

/// Raised when no count threshold separates the bright and dark distributions.
class IndistinguishableError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

struct FluorescenceParams {
    double t = 1.0;            // detection window
    double lambda = 0.001;     // dark-level decay rate, 1/T1
    double lambda_b = 25.0;    // bright fluorescence intensity
    double lambda_d = 0.2;     // dark + background count intensity

    /// Throws std::domain_error unless t > 0, lambda >= 0, lambda_b > 0, lambda_d >= 0.
    /// lambda >= lambda_b is accepted (fast-decay limit) even though it is unphysical
    /// for a usable readout.
    void validate() const;
};

bool operator==(const FluorescenceParams &a, const FluorescenceParams &b);

struct KMaxPolicy {
    /// Truncate once the cumulative mass exceeds 1 - tail_tolerance.
    double tail_tolerance = 1e-12;
    /// Lower bound on k_max, used to align several distributions on one grid.
    int64_t min_k_max = 0;
};

/// Whether detector noise (lambda_d) is added to the bright channel.
enum class BrightNoise { Exclude, Include };

struct CountDistribution {
    std::vector<double> pmf;  // P(k) for k = 0..k_max
    double tail_mass = 0.0;   // 1 - sum(pmf)
    std::optional<FluorescenceParams> params;

    int64_t k_max() const { return static_cast<int64_t>(pmf.size()) - 1; }
    double mean() const;
    double variance() const;
    /// Smallest k attaining the largest pmf value.
    int64_t mode() const;
};

struct ReadoutErrorModel {
    int64_t k0 = 0;
    double p10 = 0.0;  // P(read "1" | true "0")
    double p01 = 0.0;  // P(read "0" | true "1")

    /// True when the fuzzy operators built from this model stay informative.
    bool informative() const { return p10 >= 0 && p01 >= 0 && p10 < 1 && p01 < 1 && p10 + p01 < 1; }
};

struct FactorialMoments {
    double mean = 0.0;
    double second_factorial = 0.0;  // M[k(k-1)]
    double variance = 0.0;
};

struct ThresholdChoice {
    int64_t k0 = 0;
    /// Every upward crossing (bright overtakes dark) found in the compared range.
    std::vector<int64_t> crossings;
    std::vector<std::string> warnings;
};

/// mean^k e^-mean / k!, evaluated through log-gamma.
double poisson_pmf(int64_t k, double mean);

/// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a), in [0, 1].
/// Argument order is (x, a). Throws std::domain_error for x < 0 or a <= 0.
double regularized_lower_incomplete_gamma(double x, double a);

/// Natural log of regularized_lower_incomplete_gamma; -inf at x == 0.
double log_regularized_lower_incomplete_gamma(double x, double a);

/// Below this |lambda_b - lambda| * t the decayed-dark pmf is integrated numerically.
inline constexpr double kNearDegenerateGap = 1e-6;

/// Count pmf of the dark level including in-window decay, without detector noise.
/// P(k) = lambda t e^{-lambda t} (lambda_b t)^k gamma_reg((lambda_b - lambda) t, k + 1)
///        / ((lambda_b - lambda) t)^{k+1}  +  e^{-lambda t} [k == 0]
double dark_decay_pmf(int64_t k, const FluorescenceParams &params);

/// Same quantity obtained by adaptive Gauss-Kronrod integration over the decay time.
double dark_decay_pmf_quadrature(int64_t k, const FluorescenceParams &params);

/// Poisson(lambda_b t), or Poisson((lambda_b + lambda_d) t) with BrightNoise::Include.
CountDistribution bright_distribution(
    const FluorescenceParams &params, const KMaxPolicy &policy = {}, BrightNoise noise = BrightNoise::Exclude);

/// Dark-channel pmf: decayed-dark pmf convolved with Poisson(lambda_d t) noise.
CountDistribution dark_distribution(const FluorescenceParams &params, const KMaxPolicy &policy = {});

/// Probability generating function of the dark channel at z in [0, 1].
/// With include_noise the Poisson noise factor exp(-lambda_d t (1 - z)) is applied.
double generating_function(double z, const FluorescenceParams &params, bool include_noise);

/// generating_function for any real type with exp (e.g. extended-precision
/// floats). No argument validation; G(1) is not special-cased.
template <typename Real>
Real generating_function_as(const Real &z, const FluorescenceParams &params, bool include_noise) {
    using std::exp;
    const Real t = params.t;
    const Real lambda = params.lambda;
    const Real undecayed = exp(-lambda * t);
    // Growth exponent of the integrand; the decay-time integral is (e^{c t} - 1) / c.
    const Real c = lambda - Real(params.lambda_b) * (Real(1) - z);
    Real integral;
    if (c == Real(0)) {
        integral = t;
    } else if constexpr (std::is_floating_point_v<Real>) {
        integral = std::expm1(c * t) / c;
    } else {
        integral = (exp(c * t) - Real(1)) / c;
    }
    Real g = undecayed + lambda * undecayed * integral;
    if (include_noise) {
        g *= exp(-Real(params.lambda_d) * t * (Real(1) - z));
    }
    return g;
}

/// Closed-form moments of the decayed-dark count (no detector noise).
FactorialMoments factorial_moments(const FluorescenceParams &params);

/// Picks k0 where the bright pmf overtakes the dark pmf.
///
/// Compares over the common k range. A tie P_B(k) == P_D(k) directly before an
/// overtake resolves to the smaller k. With several upward crossings the last one
/// at or below the bright mode wins and a warning is recorded. Throws
/// IndistinguishableError when the bright pmf never exceeds the dark pmf.
ThresholdChoice choose_threshold(const CountDistribution &bright, const CountDistribution &dark);

/// p10 = sum_{k<k0} P_B(k), p01 = 1 - sum_{k<k0} P_D(k).
ReadoutErrorModel error_rates(const CountDistribution &bright, const CountDistribution &dark, int64_t k0);

void to_json(nlohmann::json &j, const FluorescenceParams &p);
void from_json(const nlohmann::json &j, FluorescenceParams &p);
void to_json(nlohmann::json &j, const CountDistribution &d);
void from_json(const nlohmann::json &j, CountDistribution &d);
void to_json(nlohmann::json &j, const ReadoutErrorModel &m);
void from_json(const nlohmann::json &j, ReadoutErrorModel &m);

}  // namespace iontomo::photon_stats

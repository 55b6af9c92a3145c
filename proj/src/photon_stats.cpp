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

#include "iontomo/photon_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace iontomo::photon_stats {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == kNegInf) {
        return b;
    }
    if (b == kNegInf) {
        return a;
    }
    double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// P(a, x) by its power series; converges quickly for x < a + 1.
double log_gamma_p_series(double x, double a) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 100000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (term < sum * 1e-17) {
            break;
        }
    }
    return -x + a * std::log(x) - std::lgamma(a) + std::log(sum);
}

// Q(a, x) by the modified Lentz continued fraction; used for x >= a + 1.
double log_gamma_q_fraction(double x, double a) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 100000; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) {
            d = tiny;
        }
        c = b + an / c;
        if (std::abs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) {
            break;
        }
    }
    return -x + a * std::log(x) - std::lgamma(a) + std::log(h);
}

// log of gamma_reg(x, a) / x^a, which is entire in x. Only the x < 0 branch is
// needed here (decay faster than fluorescence); all series terms are positive.
double log_scaled_gamma_negative(double x, double a) {
    double ax = -x;
    double log_ax = std::log(ax);
    double acc = kNegInf;
    double peak = kNegInf;
    for (int64_t n = 0;; ++n) {
        double log_term = static_cast<double>(n) * log_ax - std::lgamma(static_cast<double>(n) + 1.0) -
                          std::log(a + static_cast<double>(n));
        acc = log_add(acc, log_term);
        peak = std::max(peak, log_term);
        if (static_cast<double>(n) > ax && log_term < peak - 50.0) {
            break;
        }
    }
    return acc - std::lgamma(a);
}

int64_t truncation_cap(double mean) {
    return std::max<int64_t>(200, static_cast<int64_t>(std::ceil(mean + 20.0 * std::sqrt(mean))));
}

// Fills pmf values from `next(k)` until the cumulative mass passes 1 - tolerance.
template <typename Next>
CountDistribution truncated(const KMaxPolicy &policy, double mean, Next &&next) {
    if (!(policy.tail_tolerance > 0.0 && policy.tail_tolerance < 1.0)) {
        throw std::domain_error("tail_tolerance must lie in (0, 1)");
    }
    int64_t cap = std::max(truncation_cap(mean), policy.min_k_max);
    CountDistribution out;
    double cumulative = 0.0;
    for (int64_t k = 0; k <= cap; ++k) {
        double p = next(k);
        out.pmf.push_back(p);
        cumulative += p;
        if (cumulative > 1.0 - policy.tail_tolerance && k >= policy.min_k_max) {
            break;
        }
    }
    out.tail_mass = std::max(0.0, 1.0 - cumulative);
    if (out.tail_mass > policy.tail_tolerance) {
        std::ostringstream msg;
        msg << "truncation cap k_max=" << cap << " leaves tail mass " << out.tail_mass;
        throw std::domain_error(msg.str());
    }
    return out;
}

// (u - 1 + e^-u) / u^2 and 1 - 2 (u - 1 + e^-u) / u^2, free of cancellation near 0.
double decay_shape_g(double u) {
    if (u >= 1.0) {
        return (u - 1.0 + std::exp(-u)) / (u * u);
    }
    double term = 0.5;
    double sum = term;
    for (int m = 1; m < 60; ++m) {
        term *= -u / (m + 2);
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) {
            break;
        }
    }
    return sum;
}

double decay_shape_f2(double u) {
    if (u >= 1.0) {
        return 1.0 - 2.0 * decay_shape_g(u);
    }
    double term = 2.0 * u / 6.0;
    double sum = term;
    for (int m = 2; m < 60; ++m) {
        term *= -u / (m + 2);
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) {
            break;
        }
    }
    return sum;
}

}  // namespace

void FluorescenceParams::validate() const {
    auto fail = [](const char *what) { throw std::domain_error(what); };
    if (!(std::isfinite(t) && t > 0.0)) {
        fail("detection time t must be > 0");
    }
    if (!(std::isfinite(lambda) && lambda >= 0.0)) {
        fail("decay rate lambda must be >= 0");
    }
    if (!(std::isfinite(lambda_b) && lambda_b > 0.0)) {
        fail("bright intensity lambda_b must be > 0");
    }
    if (!(std::isfinite(lambda_d) && lambda_d >= 0.0)) {
        fail("noise intensity lambda_d must be >= 0");
    }
}

bool operator==(const FluorescenceParams &a, const FluorescenceParams &b) {
    return a.t == b.t && a.lambda == b.lambda && a.lambda_b == b.lambda_b && a.lambda_d == b.lambda_d;
}

double CountDistribution::mean() const {
    double m = 0.0;
    for (size_t k = 0; k < pmf.size(); ++k) {
        m += static_cast<double>(k) * pmf[k];
    }
    return m;
}

double CountDistribution::variance() const {
    double m = mean();
    double v = 0.0;
    for (size_t k = 0; k < pmf.size(); ++k) {
        double d = static_cast<double>(k) - m;
        v += d * d * pmf[k];
    }
    return v;
}

int64_t CountDistribution::mode() const {
    return std::distance(pmf.begin(), std::max_element(pmf.begin(), pmf.end()));
}

double poisson_pmf(int64_t k, double mean) {
    if (k < 0) {
        throw std::domain_error("poisson_pmf: negative count");
    }
    if (!(mean >= 0.0) || !std::isfinite(mean)) {
        throw std::domain_error("poisson_pmf: mean must be finite and >= 0");
    }
    if (mean == 0.0) {
        return k == 0 ? 1.0 : 0.0;
    }
    double kd = static_cast<double>(k);
    return std::exp(kd * std::log(mean) - mean - std::lgamma(kd + 1.0));
}

double log_regularized_lower_incomplete_gamma(double x, double a) {
    if (!(a > 0.0) || !std::isfinite(a)) {
        throw std::domain_error("incomplete gamma: a must be > 0");
    }
    if (!(x >= 0.0)) {
        throw std::domain_error("incomplete gamma: x must be >= 0");
    }
    if (x == 0.0) {
        return kNegInf;
    }
    if (std::isinf(x)) {
        return 0.0;
    }
    if (x < a + 1.0) {
        return std::min(0.0, log_gamma_p_series(x, a));
    }
    double q = std::exp(log_gamma_q_fraction(x, a));
    return std::log1p(-std::min(q, 1.0));
}

double regularized_lower_incomplete_gamma(double x, double a) {
    return std::exp(log_regularized_lower_incomplete_gamma(x, a));
}

double dark_decay_pmf(int64_t k, const FluorescenceParams &params) {
    params.validate();
    if (k < 0) {
        throw std::domain_error("dark_decay_pmf: negative count");
    }
    double u = params.lambda * params.t;
    double undecayed = k == 0 ? std::exp(-u) : 0.0;
    if (params.lambda == 0.0) {
        return undecayed;
    }
    double x = (params.lambda_b - params.lambda) * params.t;
    if (std::abs(x) < kNearDegenerateGap) {
        return dark_decay_pmf_quadrature(k, params);
    }
    double a = static_cast<double>(k) + 1.0;
    double log_scaled = x > 0.0 ? log_regularized_lower_incomplete_gamma(x, a) - a * std::log(x)
                                : log_scaled_gamma_negative(x, a);
    double log_decayed =
        std::log(u) - u + static_cast<double>(k) * std::log(params.lambda_b * params.t) + log_scaled;
    return std::exp(log_decayed) + undecayed;
}

double dark_decay_pmf_quadrature(int64_t k, const FluorescenceParams &params) {
    params.validate();
    if (k < 0) {
        throw std::domain_error("dark_decay_pmf_quadrature: negative count");
    }
    const double t = params.t;
    double undecayed = k == 0 ? std::exp(-params.lambda * t) : 0.0;
    if (params.lambda == 0.0) {
        return undecayed;
    }
    auto integrand = [&](double t1) {
        double remaining = std::max(0.0, params.lambda_b * (t - t1));
        return params.lambda * std::exp(-params.lambda * t1) * poisson_pmf(k, remaining);
    };
    double decayed = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, t, 20, 1e-14);
    return decayed + undecayed;
}

CountDistribution bright_distribution(const FluorescenceParams &params, const KMaxPolicy &policy, BrightNoise noise) {
    params.validate();
    double mean = params.lambda_b * params.t;
    if (noise == BrightNoise::Include) {
        mean += params.lambda_d * params.t;
    }
    CountDistribution out = truncated(policy, mean, [&](int64_t k) { return poisson_pmf(k, mean); });
    out.params = params;
    return out;
}

CountDistribution dark_distribution(const FluorescenceParams &params, const KMaxPolicy &policy) {
    params.validate();
    const double noise_mean = params.lambda_d * params.t;
    std::vector<double> decay;
    std::vector<double> noise;
    // The decayed part spreads up to Poisson(lambda_b t), so the cap follows the
    // envelope mean rather than the (possibly tiny) dark mean.
    double envelope = (params.lambda_b + params.lambda_d) * params.t;
    CountDistribution out = truncated(policy, envelope, [&](int64_t k) {
        decay.push_back(dark_decay_pmf(k, params));
        noise.push_back(poisson_pmf(k, noise_mean));
        double p = 0.0;
        for (int64_t k1 = 0; k1 <= k; ++k1) {
            p += noise[k1] * decay[k - k1];
        }
        return p;
    });
    out.params = params;
    return out;
}

double generating_function(double z, const FluorescenceParams &params, bool include_noise) {
    params.validate();
    if (!(z >= 0.0 && z <= 1.0)) {
        throw std::domain_error("generating_function: z must lie in [0, 1]");
    }
    if (z == 1.0) {
        return 1.0;
    }
    return generating_function_as<double>(z, params, include_noise);
}

FactorialMoments factorial_moments(const FluorescenceParams &params) {
    params.validate();
    const double u = params.lambda * params.t;
    const double bright = params.lambda_b * params.t;
    FactorialMoments m;
    m.mean = bright * u * decay_shape_g(u);
    m.second_factorial = bright * bright * decay_shape_f2(u);
    m.variance = m.second_factorial + m.mean - m.mean * m.mean;
    return m;
}

ThresholdChoice choose_threshold(const CountDistribution &bright, const CountDistribution &dark) {
    if (bright.pmf.empty() || dark.pmf.empty()) {
        throw std::domain_error("choose_threshold: empty distribution");
    }
    const int64_t range = std::min(bright.k_max(), dark.k_max());
    auto dominant = [&](int64_t k) { return bright.pmf[k] > dark.pmf[k]; };

    ThresholdChoice choice;
    for (int64_t k = 1; k <= range; ++k) {
        if (dominant(k) && (k == 1 || !dominant(k - 1))) {
            int64_t c = k;
            if (c > 1 && bright.pmf[c - 1] == dark.pmf[c - 1]) {
                --c;
            }
            choice.crossings.push_back(c);
        }
    }
    if (choice.crossings.empty()) {
        throw IndistinguishableError("bright and dark count distributions never cross");
    }

    const int64_t bright_mode = bright.mode();
    choice.k0 = choice.crossings.front();
    for (int64_t c : choice.crossings) {
        if (c <= bright_mode) {
            choice.k0 = c;
        }
    }
    if (choice.crossings.size() > 1) {
        std::ostringstream msg;
        msg << "bright and dark distributions cross " << choice.crossings.size()
            << " times; using k0=" << choice.k0;
        choice.warnings.push_back(msg.str());
    }
    return choice;
}

ReadoutErrorModel error_rates(const CountDistribution &bright, const CountDistribution &dark, int64_t k0) {
    if (k0 < 0) {
        throw std::domain_error("error_rates: k0 must be >= 0");
    }
    if (k0 > bright.k_max() + 1 || k0 > dark.k_max() + 1) {
        throw std::domain_error("error_rates: k0 beyond the truncation range");
    }
    ReadoutErrorModel m;
    m.k0 = k0;
    double bright_below = std::accumulate(bright.pmf.begin(), bright.pmf.begin() + k0, 0.0);
    double dark_below = std::accumulate(dark.pmf.begin(), dark.pmf.begin() + k0, 0.0);
    m.p10 = std::clamp(bright_below, 0.0, 1.0);
    m.p01 = std::clamp(1.0 - dark_below, 0.0, 1.0);
    return m;
}

void to_json(nlohmann::json &j, const FluorescenceParams &p) {
    j = nlohmann::json{{"t", p.t}, {"lambda", p.lambda}, {"lambda_b", p.lambda_b}, {"lambda_d", p.lambda_d}};
}

void from_json(const nlohmann::json &j, FluorescenceParams &p) {
    j.at("t").get_to(p.t);
    j.at("lambda").get_to(p.lambda);
    j.at("lambda_b").get_to(p.lambda_b);
    j.at("lambda_d").get_to(p.lambda_d);
}

void to_json(nlohmann::json &j, const CountDistribution &d) {
    j = nlohmann::json{{"k_max", d.k_max()}, {"pmf", d.pmf}, {"tail_mass", d.tail_mass}};
    j["params"] = d.params ? nlohmann::json(*d.params) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json &j, CountDistribution &d) {
    j.at("pmf").get_to(d.pmf);
    j.at("tail_mass").get_to(d.tail_mass);
    if (j.at("k_max").get<int64_t>() != d.k_max()) {
        throw std::domain_error("CountDistribution: k_max does not match pmf length");
    }
    d.params.reset();
    if (j.contains("params") && !j.at("params").is_null()) {
        d.params = j.at("params").get<FluorescenceParams>();
    }
}

void to_json(nlohmann::json &j, const ReadoutErrorModel &m) {
    j = nlohmann::json{{"k0", m.k0}, {"p10", m.p10}, {"p01", m.p01}};
}

void from_json(const nlohmann::json &j, ReadoutErrorModel &m) {
    j.at("k0").get_to(m.k0);
    j.at("p10").get_to(m.p10);
    j.at("p01").get_to(m.p01);
}

}  // namespace iontomo::photon_stats

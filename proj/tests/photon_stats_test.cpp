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

#include <cmath>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_dec_float.hpp>
#include <gtest/gtest.h>

#include "oracles.hpp"

namespace ps = iontomo::photon_stats;

namespace {

ps::FluorescenceParams high_contrast() { return {1.0, 0.001, 25.0, 0.2}; }
ps::FluorescenceParams low_contrast() { return {1.0, 0.05, 3.0, 0.05}; }

double total(const ps::CountDistribution &d) { return std::accumulate(d.pmf.begin(), d.pmf.end(), 0.0); }

ps::CountDistribution from_pmf(std::vector<double> pmf) {
    ps::CountDistribution d;
    d.pmf = std::move(pmf);
    return d;
}

}  // namespace

TEST(Poisson, Examples) {
    EXPECT_DOUBLE_EQ(ps::poisson_pmf(0, 25.0), std::exp(-25.0));
    EXPECT_EQ(ps::poisson_pmf(0, 0.0), 1.0);
    EXPECT_EQ(ps::poisson_pmf(3, 0.0), 0.0);
    EXPECT_LT(oracle::rel_err(ps::poisson_pmf(25, 25.0), oracle::poisson_exact(25, 25)), 1e-13);
}

TEST(Poisson, MatchesExactArithmeticUpTo30) {
    for (int mean : {1, 3, 25}) {
        for (int k = 0; k <= 30; ++k) {
            EXPECT_LT(oracle::rel_err(ps::poisson_pmf(k, mean), oracle::poisson_exact(k, mean)), 1e-12)
                << "k=" << k << " mean=" << mean;
        }
    }
}

TEST(Poisson, LargeArgumentsStayFinite) {
    double p = ps::poisson_pmf(10000, 10000.0);
    EXPECT_NEAR(p, 1.0 / std::sqrt(2 * M_PI * 10000.0), 1e-6);
    EXPECT_EQ(ps::poisson_pmf(1000, 1.0), 0.0);
}

TEST(Poisson, RejectsNegativeInput) {
    EXPECT_THROW(ps::poisson_pmf(-1, 1.0), std::domain_error);
    EXPECT_THROW(ps::poisson_pmf(1, -1.0), std::domain_error);
    EXPECT_THROW(ps::poisson_pmf(1, NAN), std::domain_error);
}

TEST(IncompleteGamma, Examples) {
    EXPECT_EQ(ps::regularized_lower_incomplete_gamma(0.0, 2.5), 0.0);
    EXPECT_NEAR(ps::regularized_lower_incomplete_gamma(1e6, 3.0), 1.0, 1e-12);
    EXPECT_NEAR(ps::regularized_lower_incomplete_gamma(1.0, 1.0), 1.0 - std::exp(-1.0), 1e-15);
    EXPECT_THROW(ps::regularized_lower_incomplete_gamma(-1.0, 1.0), std::domain_error);
    EXPECT_THROW(ps::regularized_lower_incomplete_gamma(1.0, 0.0), std::domain_error);
}

TEST(IncompleteGamma, AgreesWithBoost) {
    for (double a : {0.5, 1.0, 2.0, 7.0, 26.0, 101.0, 201.0}) {
        for (double x : {1e-6, 0.01, 0.3, 1.0, 2.5, 6.0, 24.9, 25.0, 50.0, 150.0, 300.0}) {
            double want = boost::math::gamma_p(a, x);
            if (want < 1e-280) {
                continue;
            }
            EXPECT_LT(oracle::rel_err(ps::regularized_lower_incomplete_gamma(x, a), want), 1e-12)
                << "a=" << a << " x=" << x;
            EXPECT_NEAR(ps::log_regularized_lower_incomplete_gamma(x, a), std::log(want), 1e-12 * (1 + std::abs(std::log(want))));
        }
    }
}

TEST(DarkDecay, NoDecayIsPointMass) {
    ps::FluorescenceParams p{1.0, 0.0, 25.0, 0.2};
    EXPECT_EQ(ps::dark_decay_pmf(0, p), 1.0);
    EXPECT_EQ(ps::dark_decay_pmf(4, p), 0.0);
}

TEST(DarkDecay, BothSettingsAgainstQuadrature) {
    auto p2 = high_contrast();
    EXPECT_LT(oracle::rel_err(ps::dark_decay_pmf(0, p2), oracle::dark_decay_pmf(0, 1.0, 0.001, 25.0)), 1e-8);
    auto p3 = low_contrast();
    EXPECT_LT(oracle::rel_err(ps::dark_decay_pmf(5, p3), oracle::dark_decay_pmf(5, 1.0, 0.05, 3.0)), 1e-8);
}

TEST(DarkDecay, ClosedFormMatchesQuadratureOnGrid) {
    for (double lambda : {1e-4, 0.05, 1.0}) {
        for (double lambda_b : {3.0, 25.0}) {
            for (double t : {0.5, 1.0, 2.0}) {
                ps::FluorescenceParams p{t, lambda, lambda_b, 0.0};
                int checked = 0;
                for (int k = 0; k <= 200; ++k) {
                    double want = oracle::dark_decay_pmf(k, t, lambda, lambda_b);
                    if (want <= 1e-12) {
                        if (k > lambda_b * t) {
                            break;
                        }
                        continue;
                    }
                    ++checked;
                    EXPECT_LT(oracle::rel_err(ps::dark_decay_pmf(k, p), want), 1e-8)
                        << "k=" << k << " lambda=" << lambda << " lambda_b=" << lambda_b << " t=" << t;
                }
                EXPECT_GT(checked, 3);
            }
        }
    }
}

TEST(DarkDecay, FastDecayBranchMatchesQuadrature) {
    // lambda > lambda_b takes the negative-argument series.
    for (int k : {0, 1, 2, 5, 10, 20}) {
        ps::FluorescenceParams p{1.0, 40.0, 3.0, 0.0};
        EXPECT_LT(oracle::rel_err(ps::dark_decay_pmf(k, p), oracle::dark_decay_pmf(k, 1.0, 40.0, 3.0)), 1e-8) << k;
    }
}

TEST(DarkDecay, NearDegenerateUsesQuadrature) {
    // At lambda == lambda_b the pmf reduces to lambda t e^{-lambda t} (lambda t)^k / (k + 1)! for k >= 1.
    for (double gap : {0.0, 1e-9, 5e-7}) {
        ps::FluorescenceParams p{1.0, 3.0 + gap, 3.0, 0.0};
        for (int k = 1; k <= 12; ++k) {
            double u = 3.0;
            double want = u * std::exp(-u) * std::pow(u, k) / std::tgamma(k + 2.0);
            EXPECT_LT(oracle::rel_err(ps::dark_decay_pmf(k, p), want), 1e-6) << "gap=" << gap << " k=" << k;
            EXPECT_LT(oracle::rel_err(ps::dark_decay_pmf_quadrature(k, p), want), 1e-6);
        }
    }
}

TEST(Bright, HighContrastMeanAndNormalization) {
    auto b = ps::bright_distribution(high_contrast());
    EXPECT_NEAR(b.mean(), 25.0, 1e-9);
    EXPECT_NEAR(total(b) + b.tail_mass, 1.0, 1e-12);
    EXPECT_LE(b.tail_mass, 1e-12);
    ASSERT_TRUE(b.params.has_value());
    EXPECT_EQ(*b.params, high_contrast());
}

TEST(Bright, LowContrastNormalization) {
    auto b = ps::bright_distribution(low_contrast());
    EXPECT_NEAR(total(b), 1.0 - b.tail_mass, 1e-15);
}

TEST(Bright, NoiseFlagShiftsMean) {
    auto b = ps::bright_distribution(high_contrast(), {}, ps::BrightNoise::Include);
    EXPECT_NEAR(b.mean(), 25.2, 1e-9);
    EXPECT_DOUBLE_EQ(b.pmf[10], ps::poisson_pmf(10, 25.2));
}

TEST(Bright, MinKMaxExtendsGrid) {
    auto b = ps::bright_distribution(low_contrast(), {1e-12, 150});
    EXPECT_EQ(b.k_max(), 150);
}

TEST(Dark, NoDecayIsNoisePoisson) {
    auto d = ps::dark_distribution({1.0, 0.0, 25.0, 0.2});
    for (int k = 0; k <= d.k_max(); ++k) {
        EXPECT_NEAR(d.pmf[k], oracle::poisson(k, 0.2), 1e-16) << k;
    }
}

TEST(Dark, HighContrastModeIsZero) { EXPECT_EQ(ps::dark_distribution(high_contrast()).mode(), 0); }

TEST(Dark, FastDecayApproachesBrightPoisson) {
    auto d = ps::dark_distribution({1.0, 1e3, 25.0, 0.2});
    std::vector<double> ref;
    for (int k = 0; k <= d.k_max(); ++k) {
        ref.push_back(oracle::poisson(k, 25.2));
    }
    EXPECT_LT(oracle::total_variation(d.pmf, ref), 1e-2);
}

TEST(Dark, SlowDecayApproachesNoisePoisson) {
    auto d = ps::dark_distribution({1.0, 1e-7, 25.0, 0.2});
    std::vector<double> ref;
    for (int k = 0; k <= d.k_max(); ++k) {
        ref.push_back(oracle::poisson(k, 0.2));
    }
    EXPECT_LT(oracle::total_variation(d.pmf, ref), 1e-6);
}

TEST(Dark, ConvolutionMatchesDirectSum) {
    auto p = low_contrast();
    auto d = ps::dark_distribution(p);
    for (int k = 0; k <= 10; ++k) {
        double want = 0.0;
        for (int j = 0; j <= k; ++j) {
            want += oracle::dark_decay_pmf(j, 1.0, 0.05, 3.0) * oracle::poisson(k - j, 0.05);
        }
        EXPECT_LT(oracle::rel_err(d.pmf[k], want), 1e-8) << k;
    }
}

TEST(Distributions, NormalizationProperty) {
    for (double lambda : {0.0, 1e-4, 0.05, 1.0, 30.0}) {
        for (double lambda_b : {3.0, 25.0, 80.0}) {
            for (double t : {0.5, 1.0, 2.0}) {
                for (double lambda_d : {0.0, 0.2, 2.0}) {
                    ps::FluorescenceParams p{t, lambda, lambda_b, lambda_d};
                    auto d = ps::dark_distribution(p);
                    auto b = ps::bright_distribution(p);
                    EXPECT_NEAR(total(d) + d.tail_mass, 1.0, 1e-12);
                    EXPECT_NEAR(total(b) + b.tail_mass, 1.0, 1e-12);
                    EXPECT_LE(d.tail_mass, 1e-12);
                }
            }
        }
    }
}

TEST(Distributions, RejectInvalidParams) {
    EXPECT_THROW(ps::dark_distribution({0.0, 0.1, 25.0, 0.2}), std::domain_error);
    EXPECT_THROW(ps::dark_distribution({1.0, -0.1, 25.0, 0.2}), std::domain_error);
    EXPECT_THROW(ps::bright_distribution({1.0, 0.1, 0.0, 0.2}), std::domain_error);
    EXPECT_THROW(ps::dark_distribution({1.0, 0.1, 25.0, -1.0}), std::domain_error);
    EXPECT_THROW(ps::bright_distribution(high_contrast(), {0.0, 0}), std::domain_error);
}

TEST(GeneratingFunction, Examples) {
    EXPECT_EQ(ps::generating_function(1.0, high_contrast(), true), 1.0);
    EXPECT_EQ(ps::generating_function(1.0, low_contrast(), false), 1.0);
    auto d = ps::dark_distribution(low_contrast());
    EXPECT_LT(oracle::rel_err(ps::generating_function(0.0, low_contrast(), true), d.pmf[0]), 1e-12);
    EXPECT_EQ(ps::generating_function(0.0, {1.0, 0.0, 25.0, 0.2}, false), 1.0);
    EXPECT_THROW(ps::generating_function(-0.1, high_contrast(), true), std::domain_error);
    EXPECT_THROW(ps::generating_function(1.1, high_contrast(), true), std::domain_error);
}

TEST(GeneratingFunction, PowerSeriesMatchesPmf) {
    for (auto p : {high_contrast(), low_contrast()}) {
        auto d = ps::dark_distribution(p);
        for (double z : {0.0, 0.3, 0.7, 0.95}) {
            double series = 0.0;
            for (int k = d.k_max(); k >= 0; --k) {
                series = series * z + d.pmf[k];
            }
            EXPECT_LT(oracle::rel_err(ps::generating_function(z, p, true), series), 1e-11) << z;
        }
    }
}

// k-th forward difference at z = 0 in 100-digit arithmetic with step h = 1e-12.
// Truncation error is O(k h) and rounding about 2^k 1e-100 / h^k, both far below 1e-4.
TEST(GeneratingFunction, DerivativeIdentity) {
    using Big = boost::multiprecision::cpp_dec_float_100;
    const Big h("1e-12");
    for (auto p : {high_contrast(), low_contrast(), ps::FluorescenceParams{0.5, 1.0, 3.0, 0.2}}) {
        auto d = ps::dark_distribution(p);
        for (bool noise : {true, false}) {
            for (int k = 0; k <= 6; ++k) {
                Big diff = 0;
                Big binom = 1;
                for (int j = 0; j <= k; ++j) {
                    Big g = ps::generating_function_as<Big>(h * j, p, noise);
                    diff += ((k - j) % 2 ? -binom : binom) * g;
                    binom = binom * (k - j) / (j + 1);
                }
                Big kfact = boost::math::factorial<double>(k);
                double derived = (diff / boost::multiprecision::pow(h, k) / kfact).convert_to<double>();
                double want = noise ? d.pmf[k] : ps::dark_decay_pmf(k, p);
                EXPECT_LT(oracle::rel_err(derived, want), 1e-4) << "k=" << k << " noise=" << noise;
            }
        }
    }
}

TEST(GeneratingFunction, DoubleMatchesExtendedPrecision) {
    using Big = boost::multiprecision::cpp_dec_float_50;
    for (auto p : {high_contrast(), low_contrast()}) {
        for (double z : {0.0, 0.25, 0.5, 0.999}) {
            double want = ps::generating_function_as<Big>(Big(z), p, true).convert_to<double>();
            EXPECT_LT(oracle::rel_err(ps::generating_function(z, p, true), want), 1e-13);
        }
    }
}

TEST(Moments, Examples) {
    auto m = ps::factorial_moments({1.0, 1e3, 25.0, 0.0});
    EXPECT_NEAR(m.mean, 24.975, 1e-12);
    auto d = ps::dark_distribution({1.0, 1e3, 25.0, 0.0});
    EXPECT_LT(oracle::rel_err(m.mean, d.mean()), 1e-6);
    EXPECT_EQ(ps::factorial_moments({1.0, 0.0, 25.0, 0.2}).mean, 0.0);
    // mean = lambda_b t (u / 2 - u^2 / 6 + ...) for small u = lambda t.
    EXPECT_LT(oracle::rel_err(ps::factorial_moments({1.0, 1e-12, 25.0, 0.2}).mean, 0.5 * 25.0 * 1e-12), 1e-11);
}

TEST(Moments, MatchPmfSummation) {
    for (double lambda : {1e-4, 0.001, 0.05, 1.0, 10.0}) {
        for (double lambda_b : {3.0, 25.0}) {
            for (double t : {0.5, 1.0, 2.0}) {
                ps::FluorescenceParams p{t, lambda, lambda_b, 0.0};
                // When lambda t is tiny the moments are ~1e-5 and the default 1e-12 tail
                // alone shifts them by ~1e-6 relative, so carry the grid over the full
                // bright envelope.
                double envelope = lambda_b * t;
                auto d = ps::dark_distribution(p, {1e-12, int64_t(envelope + 20 * std::sqrt(envelope) + 20)});
                double m1 = 0.0;
                double m2 = 0.0;
                double fact2 = 0.0;
                for (int k = 0; k <= d.k_max(); ++k) {
                    m1 += k * d.pmf[k];
                    m2 += double(k) * k * d.pmf[k];
                    fact2 += double(k) * (k - 1) * d.pmf[k];
                }
                auto m = ps::factorial_moments(p);
                EXPECT_LT(oracle::rel_err(m.mean, m1), 1e-6) << lambda << " " << lambda_b << " " << t;
                EXPECT_LT(oracle::rel_err(m.second_factorial, fact2), 1e-6) << lambda << " " << lambda_b << " " << t;
                EXPECT_LT(oracle::rel_err(m.variance, m2 - m1 * m1), 1e-6);
            }
        }
    }
}

TEST(Threshold, ReferenceCases) {
    auto p2 = high_contrast();
    auto c2 = ps::choose_threshold(ps::bright_distribution(p2), ps::dark_distribution(p2));
    EXPECT_EQ(c2.k0, 8);
    EXPECT_TRUE(c2.warnings.empty());
    auto p3 = low_contrast();
    EXPECT_EQ(ps::choose_threshold(ps::bright_distribution(p3), ps::dark_distribution(p3)).k0, 1);
}

TEST(Threshold, IdenticalDistributionsAreIndistinguishable) {
    auto b = ps::bright_distribution(high_contrast());
    EXPECT_THROW(ps::choose_threshold(b, b), ps::IndistinguishableError);
}

TEST(Threshold, TieResolvesDown) {
    auto c = ps::choose_threshold(from_pmf({0.5, 0.2, 0.3}), from_pmf({0.6, 0.2, 0.2}));
    EXPECT_EQ(c.k0, 1);
}

TEST(Threshold, MultipleCrossingsWarn) {
    auto c = ps::choose_threshold(from_pmf({0.1, 0.3, 0.1, 0.1, 0.4}), from_pmf({0.2, 0.1, 0.3, 0.3, 0.1}));
    EXPECT_EQ(c.crossings, (std::vector<int64_t>{1, 4}));
    EXPECT_EQ(c.k0, 4);
    EXPECT_EQ(c.warnings.size(), 1u);
    // Second crossing past the bright mode is ignored.
    auto d = ps::choose_threshold(from_pmf({0.1, 0.5, 0.1, 0.05, 0.25}), from_pmf({0.2, 0.1, 0.3, 0.3, 0.1}));
    EXPECT_EQ(d.k0, 1);
}

TEST(ErrorRates, ReferenceValues) {
    auto p2 = high_contrast();
    auto m2 = ps::error_rates(ps::bright_distribution(p2), ps::dark_distribution(p2), 8);
    EXPECT_LT(oracle::rel_err(m2.p10, 2.292e-5), 5e-4);
    EXPECT_LT(oracle::rel_err(m2.p01, 6.878e-4), 5e-4);
    auto p3 = low_contrast();
    auto m3 = ps::error_rates(ps::bright_distribution(p3), ps::dark_distribution(p3), 1);
    EXPECT_NEAR(m3.p10, 0.0498, 5e-4);
    EXPECT_NEAR(m3.p01, 0.0806, 5e-4);
}

TEST(ErrorRates, ZeroThreshold) {
    auto m = ps::error_rates(ps::bright_distribution(high_contrast()), ps::dark_distribution(high_contrast()), 0);
    EXPECT_EQ(m.p10, 0.0);
    EXPECT_EQ(m.p01, 1.0);
    EXPECT_THROW(ps::error_rates(ps::bright_distribution(high_contrast()), ps::dark_distribution(high_contrast()), -1), std::domain_error);
}

TEST(ErrorRates, Monotone) {
    for (auto p : {high_contrast(), low_contrast()}) {
        auto b = ps::bright_distribution(p);
        auto d = ps::dark_distribution(p, {1e-12, b.k_max()});
        auto prev = ps::error_rates(b, d, 0);
        for (int64_t k0 = 1; k0 <= std::min(b.k_max(), d.k_max()); ++k0) {
            auto m = ps::error_rates(b, d, k0);
            EXPECT_GE(m.p10, prev.p10);
            EXPECT_LE(m.p01, prev.p01);
            prev = m;
        }
    }
}

TEST(Json, DistributionRoundTrip) {
    auto d = ps::dark_distribution(low_contrast());
    nlohmann::json j = d;
    EXPECT_EQ(j.at("k_max").get<int64_t>(), d.k_max());
    auto back = nlohmann::json::parse(j.dump()).get<ps::CountDistribution>();
    EXPECT_EQ(back.pmf, d.pmf);
    EXPECT_EQ(back.tail_mass, d.tail_mass);
    ASSERT_TRUE(back.params.has_value());
    EXPECT_EQ(*back.params, low_contrast());
    auto m = ps::error_rates(ps::bright_distribution(low_contrast()), d, 1);
    auto mb = nlohmann::json(m).get<ps::ReadoutErrorModel>();
    EXPECT_EQ(mb.k0, 1);
    EXPECT_EQ(mb.p10, m.p10);
    EXPECT_EQ(mb.p01, m.p01);
}

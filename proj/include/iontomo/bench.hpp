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
#include <string>
#include <vector>

#include "iontomo/measurement.hpp"
#include "iontomo/photon_stats.hpp"
#include "iontomo/tomography.hpp"
#include "json.hpp"

namespace iontomo::bench {

// ---------------------------------------------------------------------------
// Readout study: bright/dark count tables, threshold and error rates.
// ---------------------------------------------------------------------------

struct DistributionStudy {
    photon_stats::FluorescenceParams params;
    photon_stats::BrightNoise bright_noise = photon_stats::BrightNoise::Exclude;
    photon_stats::CountDistribution bright;  // both tables share one k range
    photon_stats::CountDistribution dark;
    photon_stats::ThresholdChoice threshold;
    photon_stats::ReadoutErrorModel error_model;
};

/// Throws photon_stats::IndistinguishableError when no threshold exists.
DistributionStudy run_distribution_study(const photon_stats::FluorescenceParams &params,
    photon_stats::BrightNoise bright_noise = photon_stats::BrightNoise::Exclude);

void to_json(nlohmann::json &j, const DistributionStudy &s);
void from_json(const nlohmann::json &j, DistributionStudy &s);

/// "k,bright,dark" rows.
std::string study_csv(const DistributionStudy &s, int precision);

// ---------------------------------------------------------------------------
// Tomography benchmark: Haar-random states, fuzzy vs standard reconstruction.
// ---------------------------------------------------------------------------

/// Seeds come from a SplitMix64 chain keyed by (master_seed, state index,
/// stream), so state i sees the same streams whatever n_states is and however
/// the work is scheduled.
inline constexpr uint64_t kStateStream = 0;
inline constexpr uint64_t kSamplingStream = 1;

uint64_t splitmix64(uint64_t x);
/// Base seed for state `index`.
uint64_t state_seed(uint64_t master_seed, uint64_t index);
/// Seed for one stream of a state.
uint64_t stream_seed(uint64_t state_seed, uint64_t stream);

struct BenchmarkConfig {
    int n_qubits = 2;
    int n_states = 200;
    int64_t shots = 1000000;
    measurement::ShotsMode shots_mode = measurement::ShotsMode::Total;
    double p10 = 0.1;
    double p01 = 0.1;
    /// When set, p10/p01 are replaced by the error rates of this readout.
    std::optional<photon_stats::FluorescenceParams> fluorescence;
    uint64_t master_seed = 7;
    /// Reconstruction rank. 1 fits a pure-state root, which is the natural model
    /// for a pure-state ensemble; 0 means full rank.
    int rank = 1;
    int max_iterations = 5000;
    bool exclude_nonconverged = false;
    /// 0 picks std::thread::hardware_concurrency().
    int threads = 0;
    /// Written as JSON (plus a sibling .csv) when non-empty.
    std::string output_path;

    void validate() const;
};

struct StateOutcome {
    int index = 0;
    uint64_t seed = 0;
    double infidelity_standard = 0.0;
    double infidelity_fuzzy = 0.0;
    bool converged_standard = false;
    bool converged_fuzzy = false;
    int iterations_standard = 0;
    int iterations_fuzzy = 0;
};

struct Summary {
    double mean = 0.0;
    double median = 0.0;
    double q05 = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    double q95 = 0.0;
    double min = 0.0;
    double max = 0.0;
    int used = 0;
    int excluded = 0;
};

struct BenchmarkReport {
    BenchmarkConfig config;
    double p10 = 0.0;  // error rates actually used
    double p01 = 0.0;
    int64_t shots_per_basis = 0;
    std::vector<StateOutcome> states;
    Summary standard;
    Summary fuzzy;
    /// mean standard infidelity / mean fuzzy infidelity
    double ratio = 0.0;
};

/// Linear-interpolated quantile of unsorted data, q in [0, 1].
double quantile(std::vector<double> values, double q);
Summary summarize(const std::vector<double> &values, const std::vector<bool> &keep);

BenchmarkReport run_tomography_benchmark(const BenchmarkConfig &config);

/// Runs one state of the benchmark; exposed for seed-independence checks.
StateOutcome run_benchmark_state(const BenchmarkConfig &config, const std::vector<measurement::ProtocolRow> &protocol,
    int index);

void write_report(const BenchmarkReport &report, const std::string &path);
/// "index,seed,infidelity_standard,infidelity_fuzzy" rows.
std::string report_csv(const BenchmarkReport &report, int precision = 17);

void to_json(nlohmann::json &j, const BenchmarkConfig &c);
void from_json(const nlohmann::json &j, BenchmarkConfig &c);
void to_json(nlohmann::json &j, const StateOutcome &s);
void from_json(const nlohmann::json &j, StateOutcome &s);
void to_json(nlohmann::json &j, const Summary &s);
void from_json(const nlohmann::json &j, Summary &s);
void to_json(nlohmann::json &j, const BenchmarkReport &r);
void from_json(const nlohmann::json &j, BenchmarkReport &r);

bool operator==(const StateOutcome &a, const StateOutcome &b);

std::string shots_mode_name(measurement::ShotsMode m);
measurement::ShotsMode shots_mode_from_name(const std::string &name);

}  // namespace iontomo::bench

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

#include "iontomo/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace iontomo::bench {

using measurement::ShotsMode;
using photon_stats::BrightNoise;
using photon_stats::CountDistribution;
using photon_stats::FluorescenceParams;

DistributionStudy run_distribution_study(const FluorescenceParams &params, BrightNoise bright_noise) {
    params.validate();
    CountDistribution bright = photon_stats::bright_distribution(params, {}, bright_noise);
    CountDistribution dark = photon_stats::dark_distribution(params, {});
    photon_stats::KMaxPolicy shared;
    shared.min_k_max = std::max(bright.k_max(), dark.k_max());
    if (bright.k_max() != shared.min_k_max) {
        bright = photon_stats::bright_distribution(params, shared, bright_noise);
    }
    if (dark.k_max() != shared.min_k_max) {
        dark = photon_stats::dark_distribution(params, shared);
    }

    DistributionStudy study;
    study.params = params;
    study.bright_noise = bright_noise;
    study.threshold = photon_stats::choose_threshold(bright, dark);
    study.error_model = photon_stats::error_rates(bright, dark, study.threshold.k0);
    study.bright = std::move(bright);
    study.dark = std::move(dark);
    return study;
}

void to_json(nlohmann::json &j, const DistributionStudy &s) {
    j = nlohmann::json{{"params", s.params},
                       {"bright_noise", s.bright_noise == BrightNoise::Include},
                       {"bright", s.bright},
                       {"dark", s.dark},
                       {"k0", s.threshold.k0},
                       {"crossings", s.threshold.crossings},
                       {"warnings", s.threshold.warnings},
                       {"error_model", s.error_model}};
}

void from_json(const nlohmann::json &j, DistributionStudy &s) {
    j.at("params").get_to(s.params);
    s.bright_noise = j.at("bright_noise").get<bool>() ? BrightNoise::Include : BrightNoise::Exclude;
    j.at("bright").get_to(s.bright);
    j.at("dark").get_to(s.dark);
    j.at("k0").get_to(s.threshold.k0);
    j.at("crossings").get_to(s.threshold.crossings);
    j.at("warnings").get_to(s.threshold.warnings);
    j.at("error_model").get_to(s.error_model);
}

std::string study_csv(const DistributionStudy &s, int precision) {
    std::ostringstream out;
    out.precision(precision);
    out << "k,bright,dark\n";
    const int64_t k_max = std::min(s.bright.k_max(), s.dark.k_max());
    for (int64_t k = 0; k <= k_max; ++k) {
        out << k << ',' << s.bright.pmf[k] << ',' << s.dark.pmf[k] << '\n';
    }
    return out.str();
}

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

uint64_t state_seed(uint64_t master_seed, uint64_t index) { return splitmix64(splitmix64(master_seed) ^ index); }

uint64_t stream_seed(uint64_t state_seed, uint64_t stream) { return splitmix64(state_seed + 0x632BE59BD9B4E019ULL * (stream + 1)); }

std::string shots_mode_name(ShotsMode m) { return m == ShotsMode::Total ? "total" : "per_basis"; }

ShotsMode shots_mode_from_name(const std::string &name) {
    if (name == "total") {
        return ShotsMode::Total;
    }
    if (name == "per_basis") {
        return ShotsMode::PerBasis;
    }
    throw std::domain_error("unknown shots mode '" + name + "' (expected total or per_basis)");
}

void BenchmarkConfig::validate() const {
    quantum::dimension_for(n_qubits);
    if (n_qubits > 6) {
        throw std::domain_error("benchmark supports at most 6 qubits");
    }
    if (n_states < 1) {
        throw std::domain_error("n_states must be >= 1");
    }
    if (shots < 1) {
        throw std::domain_error("shots must be >= 1");
    }
    measurement::shots_per_basis(n_qubits, shots, shots_mode);
    if (fluorescence) {
        fluorescence->validate();
    } else {
        measurement::build_fuzzy_povm(p10, p01);
    }
    if (rank < 0 || rank > quantum::dimension_for(n_qubits)) {
        throw std::domain_error("rank must lie in [0, 2^n_qubits]");
    }
    if (max_iterations < 1) {
        throw std::domain_error("max_iterations must be >= 1");
    }
    if (threads < 0) {
        throw std::domain_error("threads must be >= 0");
    }
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) {
        return std::nan("");
    }
    std::sort(values.begin(), values.end());
    double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
    auto lo = static_cast<size_t>(std::floor(pos));
    size_t hi = std::min(lo + 1, values.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

Summary summarize(const std::vector<double> &values, const std::vector<bool> &keep) {
    std::vector<double> used;
    Summary s;
    for (size_t i = 0; i < values.size(); ++i) {
        if (keep[i]) {
            used.push_back(values[i]);
        } else {
            ++s.excluded;
        }
    }
    s.used = static_cast<int>(used.size());
    if (used.empty()) {
        s.mean = s.median = s.q05 = s.q25 = s.q75 = s.q95 = s.min = s.max = std::nan("");
        return s;
    }
    s.mean = std::accumulate(used.begin(), used.end(), 0.0) / static_cast<double>(used.size());
    s.median = quantile(used, 0.5);
    s.q05 = quantile(used, 0.05);
    s.q25 = quantile(used, 0.25);
    s.q75 = quantile(used, 0.75);
    s.q95 = quantile(used, 0.95);
    s.min = *std::min_element(used.begin(), used.end());
    s.max = *std::max_element(used.begin(), used.end());
    return s;
}

StateOutcome run_benchmark_state(
    const BenchmarkConfig &config, const std::vector<measurement::ProtocolRow> &protocol, int index) {
    StateOutcome out;
    out.index = index;
    out.seed = state_seed(config.master_seed, static_cast<uint64_t>(index));

    quantum::Rng state_rng(stream_seed(out.seed, kStateStream));
    quantum::PureState psi = quantum::haar_random_pure_state(config.n_qubits, state_rng);
    quantum::Rng sampling_rng(stream_seed(out.seed, kSamplingStream));
    measurement::CountRecord record =
        measurement::simulate_counts(quantum::DensityMatrix::from_pure(psi), protocol, sampling_rng,
            measurement::FuzzyQubitPOVM{config.p10, config.p01});

    tomography::ReconstructionConfig rc;
    rc.rank = config.rank;
    rc.max_iterations = config.max_iterations;

    rc.model = tomography::Model::Fuzzy;
    auto fuzzy = tomography::reconstruct(record, protocol, rc);
    rc.model = tomography::Model::Standard;
    auto standard = tomography::reconstruct(record, protocol, rc);

    out.infidelity_fuzzy = tomography::infidelity(fuzzy, psi);
    out.infidelity_standard = tomography::infidelity(standard, psi);
    out.converged_fuzzy = fuzzy.converged;
    out.converged_standard = standard.converged;
    out.iterations_fuzzy = fuzzy.iterations;
    out.iterations_standard = standard.iterations;
    return out;
}

BenchmarkReport run_tomography_benchmark(const BenchmarkConfig &config) {
    config.validate();
    BenchmarkReport report;
    report.config = config;
    report.p10 = config.p10;
    report.p01 = config.p01;
    if (config.fluorescence) {
        DistributionStudy study = run_distribution_study(*config.fluorescence);
        report.p10 = study.error_model.p10;
        report.p01 = study.error_model.p01;
    }
    measurement::FuzzyQubitPOVM povm = measurement::build_fuzzy_povm(report.p10, report.p01);
    report.shots_per_basis = measurement::shots_per_basis(config.n_qubits, config.shots, config.shots_mode);
    const auto protocol = measurement::pauli_protocol(config.n_qubits, povm, report.shots_per_basis);

    BenchmarkConfig effective = config;
    effective.p10 = report.p10;
    effective.p01 = report.p01;

    report.states.resize(config.n_states);
    int workers = config.threads > 0 ? config.threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, config.n_states);
    std::atomic<int> next{0};
    auto work = [&] {
        for (int i = next++; i < config.n_states; i = next++) {
            report.states[i] = run_benchmark_state(effective, protocol, i);
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
    }

    std::vector<double> standard;
    std::vector<double> fuzzy;
    std::vector<bool> keep;
    for (const auto &s : report.states) {
        standard.push_back(s.infidelity_standard);
        fuzzy.push_back(s.infidelity_fuzzy);
        keep.push_back(!config.exclude_nonconverged || (s.converged_fuzzy && s.converged_standard));
    }
    report.standard = summarize(standard, keep);
    report.fuzzy = summarize(fuzzy, keep);
    report.ratio = report.standard.mean / report.fuzzy.mean;

    if (!config.output_path.empty()) {
        write_report(report, config.output_path);
    }
    return report;
}

void write_report(const BenchmarkReport &report, const std::string &path) {
    std::ofstream json_out(path);
    if (!json_out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    json_out << nlohmann::json(report).dump(2) << '\n';

    std::string csv_path = path;
    auto dot = csv_path.rfind('.');
    auto slash = csv_path.rfind('/');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
        csv_path.erase(dot);
    }
    csv_path += ".csv";
    std::ofstream csv_out(csv_path);
    if (!csv_out) {
        throw std::runtime_error("cannot open " + csv_path + " for writing");
    }
    csv_out << report_csv(report);
}

std::string report_csv(const BenchmarkReport &report, int precision) {
    std::ostringstream out;
    out.precision(precision);
    out << "index,seed,infidelity_standard,infidelity_fuzzy\n";
    for (const auto &s : report.states) {
        out << s.index << ',' << s.seed << ',' << s.infidelity_standard << ',' << s.infidelity_fuzzy << '\n';
    }
    return out.str();
}

void to_json(nlohmann::json &j, const BenchmarkConfig &c) {
    j = nlohmann::json{{"n_qubits", c.n_qubits},
                       {"n_states", c.n_states},
                       {"shots", c.shots},
                       {"shots_mode", shots_mode_name(c.shots_mode)},
                       {"p10", c.p10},
                       {"p01", c.p01},
                       {"master_seed", c.master_seed},
                       {"rank", c.rank},
                       {"max_iterations", c.max_iterations},
                       {"exclude_nonconverged", c.exclude_nonconverged},
                       {"threads", c.threads},
                       {"output_path", c.output_path}};
    j["fluorescence"] = c.fluorescence ? nlohmann::json(*c.fluorescence) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json &j, BenchmarkConfig &c) {
    j.at("n_qubits").get_to(c.n_qubits);
    j.at("n_states").get_to(c.n_states);
    j.at("shots").get_to(c.shots);
    c.shots_mode = shots_mode_from_name(j.at("shots_mode").get<std::string>());
    j.at("p10").get_to(c.p10);
    j.at("p01").get_to(c.p01);
    j.at("master_seed").get_to(c.master_seed);
    j.at("rank").get_to(c.rank);
    j.at("max_iterations").get_to(c.max_iterations);
    j.at("exclude_nonconverged").get_to(c.exclude_nonconverged);
    c.threads = j.value("threads", 0);
    j.at("output_path").get_to(c.output_path);
    c.fluorescence.reset();
    if (j.contains("fluorescence") && !j.at("fluorescence").is_null()) {
        c.fluorescence = j.at("fluorescence").get<FluorescenceParams>();
    }
}

void to_json(nlohmann::json &j, const StateOutcome &s) {
    j = nlohmann::json{{"index", s.index},
                       {"seed", s.seed},
                       {"infidelity_standard", s.infidelity_standard},
                       {"infidelity_fuzzy", s.infidelity_fuzzy},
                       {"converged_standard", s.converged_standard},
                       {"converged_fuzzy", s.converged_fuzzy},
                       {"iterations_standard", s.iterations_standard},
                       {"iterations_fuzzy", s.iterations_fuzzy}};
}

void from_json(const nlohmann::json &j, StateOutcome &s) {
    j.at("index").get_to(s.index);
    j.at("seed").get_to(s.seed);
    j.at("infidelity_standard").get_to(s.infidelity_standard);
    j.at("infidelity_fuzzy").get_to(s.infidelity_fuzzy);
    j.at("converged_standard").get_to(s.converged_standard);
    j.at("converged_fuzzy").get_to(s.converged_fuzzy);
    j.at("iterations_standard").get_to(s.iterations_standard);
    j.at("iterations_fuzzy").get_to(s.iterations_fuzzy);
}

void to_json(nlohmann::json &j, const Summary &s) {
    j = nlohmann::json{{"mean", s.mean}, {"median", s.median}, {"q05", s.q05}, {"q25", s.q25}, {"q75", s.q75},
        {"q95", s.q95}, {"min", s.min}, {"max", s.max}, {"used", s.used}, {"excluded", s.excluded}};
}

void from_json(const nlohmann::json &j, Summary &s) {
    // Empty summaries serialize their NaN statistics as null.
    auto number = [&](const char *key) {
        const auto &v = j.at(key);
        return v.is_null() ? std::nan("") : v.get<double>();
    };
    s.mean = number("mean");
    s.median = number("median");
    s.q05 = number("q05");
    s.q25 = number("q25");
    s.q75 = number("q75");
    s.q95 = number("q95");
    s.min = number("min");
    s.max = number("max");
    j.at("used").get_to(s.used);
    j.at("excluded").get_to(s.excluded);
}

void to_json(nlohmann::json &j, const BenchmarkReport &r) {
    j = nlohmann::json{{"config", r.config},
                       {"p10", r.p10},
                       {"p01", r.p01},
                       {"shots_per_basis", r.shots_per_basis},
                       {"states", r.states},
                       {"standard", r.standard},
                       {"fuzzy", r.fuzzy},
                       {"ratio", r.ratio}};
}

void from_json(const nlohmann::json &j, BenchmarkReport &r) {
    j.at("config").get_to(r.config);
    j.at("p10").get_to(r.p10);
    j.at("p01").get_to(r.p01);
    j.at("shots_per_basis").get_to(r.shots_per_basis);
    j.at("states").get_to(r.states);
    j.at("standard").get_to(r.standard);
    j.at("fuzzy").get_to(r.fuzzy);
    r.ratio = j.at("ratio").is_null() ? std::nan("") : j.at("ratio").get<double>();
}

bool operator==(const StateOutcome &a, const StateOutcome &b) {
    return a.index == b.index && a.seed == b.seed && a.infidelity_standard == b.infidelity_standard &&
           a.infidelity_fuzzy == b.infidelity_fuzzy && a.converged_standard == b.converged_standard &&
           a.converged_fuzzy == b.converged_fuzzy && a.iterations_standard == b.iterations_standard &&
           a.iterations_fuzzy == b.iterations_fuzzy;
}

}  // namespace iontomo::bench

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

#include "iontomo/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "iontomo/bench.hpp"
#include "iontomo/photon_stats.hpp"

namespace iontomo::cli {

namespace {

constexpr const char *kSymbolTable =
    "Readout symbols:\n"
    "  --t         t      detection window\n"
    "  --lambda    lambda decay rate of the dark level, 1/T1\n"
    "  --lambda-b  lambda_B bright fluorescence intensity (counts/time)\n"
    "  --lambda-d  lambda_D dark + background count intensity (counts/time)\n"
    "  --p10       P(read 1 | state 0)    --p01  P(read 0 | state 1)\n"
    "Counts k >= k0 read as \"0\" (bright), k < k0 as \"1\" (dark).\n";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void print_error(std::ostream &err, const std::string &kind, const std::string &message) {
    err << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
}

struct Common {
    photon_stats::FluorescenceParams params;
    bool bright_noise = false;
    std::string format = "json";
    std::string output;
    int precision = 6;
};

void add_readout_flags(CLI::App *cmd, Common &c) {
    cmd->add_option("--t", c.params.t, "Detection window t")->capture_default_str();
    cmd->add_option("--lambda", c.params.lambda, "Dark-level decay rate lambda = 1/T1")->capture_default_str();
    cmd->add_option("--lambda-b", c.params.lambda_b, "Bright fluorescence intensity lambda_B")->capture_default_str();
    cmd->add_option("--lambda-d", c.params.lambda_d, "Dark/background count intensity lambda_D")->capture_default_str();
    cmd->add_flag("--bright-noise", c.bright_noise, "Add lambda_D to the bright channel as well");
}

void add_output_flags(CLI::App *cmd, Common &c) {
    cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    cmd->add_option("--output,-o", c.output, "Output file (default: $" + std::string(kOutputDirEnv) + "/<command>.<ext>, else stdout)");
    cmd->add_option("--precision", c.precision, "Significant digits for printed numbers (0 = round-trip)")
        ->check(CLI::Range(0, 17))
        ->capture_default_str();
}

// Explicit --output wins, then the environment directory, else stdout.
std::optional<std::string> destination(const Common &c, const std::string &command) {
    if (!c.output.empty()) {
        return c.output;
    }
    if (const char *dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0') {
        std::string path = dir;
        if (path.back() != '/') {
            path += '/';
        }
        return path + command + "." + c.format;
    }
    return std::nullopt;
}

void write_file(const std::string &path, const std::string &content) {
    std::ofstream f(path);
    if (!f) {
        throw IoError("cannot open " + path + " for writing");
    }
    f << content;
    if (!f) {
        throw IoError("failed writing " + path);
    }
}

// Files hold full-precision JSON so they re-parse exactly; stdout is rounded.
void emit_json(const nlohmann::json &j, const Common &c, const std::string &command, std::ostream &out) {
    if (auto path = destination(c, command)) {
        write_file(*path, j.dump(2) + "\n");
        out << nlohmann::json{{"output", *path}}.dump() << '\n';
    } else {
        out << round_numbers(j, c.precision).dump(2) << '\n';
    }
}

void emit_text(const std::string &text, const Common &c, const std::string &command, std::ostream &out) {
    if (auto path = destination(c, command)) {
        write_file(*path, text);
        out << nlohmann::json{{"output", *path}}.dump() << '\n';
    } else {
        out << text;
    }
}

int csv_digits(int precision) { return precision == 0 ? 17 : precision; }

std::string sibling_path(const std::string &path, const std::string &suffix) {
    auto dot = path.rfind('.');
    auto slash = path.rfind('/');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
        return path.substr(0, dot) + suffix + path.substr(dot);
    }
    return path + suffix;
}

nlohmann::json benchmark_summary(const bench::BenchmarkReport &r) {
    return nlohmann::json{{"shots_mode", bench::shots_mode_name(r.config.shots_mode)},
                          {"shots_per_basis", r.shots_per_basis},
                          {"n_states", r.config.n_states},
                          {"p10", r.p10},
                          {"p01", r.p01},
                          {"mean_infidelity_standard", r.standard.mean},
                          {"mean_infidelity_fuzzy", r.fuzzy.mean},
                          {"median_infidelity_standard", r.standard.median},
                          {"median_infidelity_fuzzy", r.fuzzy.median},
                          {"nonconverged_standard", std::count_if(r.states.begin(), r.states.end(),
                                                        [](const auto &s) { return !s.converged_standard; })},
                          {"nonconverged_fuzzy", std::count_if(r.states.begin(), r.states.end(),
                                                     [](const auto &s) { return !s.converged_fuzzy; })},
                          {"excluded", r.fuzzy.excluded},
                          {"ratio", r.ratio}};
}

}  // namespace

nlohmann::json round_numbers(const nlohmann::json &j, int digits) {
    if (digits <= 0) {
        return j;
    }
    if (j.is_number_float()) {
        double v = j.get<double>();
        if (!std::isfinite(v)) {
            return j;
        }
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
        return std::strtod(buf, nullptr);
    }
    if (j.is_array() || j.is_object()) {
        nlohmann::json copy = j;
        for (auto &item : copy) {
            item = round_numbers(item, digits);
        }
        return copy;
    }
    return j;
}

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Fluorescence readout statistics and fuzzy-measurement tomography"};
    app.footer(kSymbolTable);
    app.require_subcommand(1);

    Common dist_opts;
    auto *dist = app.add_subcommand("distributions", "Bright/dark count distributions, threshold and error rates");
    add_readout_flags(dist, dist_opts);
    add_output_flags(dist, dist_opts);

    Common err_opts;
    auto *errs = app.add_subcommand("errors", "Threshold k0 and readout error rates p10, p01");
    add_readout_flags(errs, err_opts);
    add_output_flags(errs, err_opts);

    Common bench_opts;
    bench::BenchmarkConfig config;
    std::string shots_mode = "total";
    bool from_fluorescence = false;
    auto *bm = app.add_subcommand("benchmark", "Haar-ensemble tomography: fuzzy vs standard reconstruction");
    bm->add_option("--qubits", config.n_qubits, "Number of qubits")->capture_default_str();
    bm->add_option("--states", config.n_states, "Number of Haar-random states")->capture_default_str();
    bm->add_option("--shots", config.shots, "Sample size N")->capture_default_str();
    bm->add_option("--shots-mode", shots_mode, "N is split over all bases (total) or used per basis")
        ->check(CLI::IsMember({"total", "per_basis", "both"}))
        ->capture_default_str();
    bm->add_option("--p10", config.p10, "P(read 1 | state 0)")->capture_default_str();
    bm->add_option("--p01", config.p01, "P(read 0 | state 1)")->capture_default_str();
    bm->add_flag("--from-fluorescence", from_fluorescence, "Derive p10/p01 from the readout flags instead");
    add_readout_flags(bm, bench_opts);
    bm->add_option("--seed", config.master_seed, "Master seed")->capture_default_str();
    bm->add_option("--rank", config.rank, "Reconstruction rank (0 = full)")->capture_default_str();
    bm->add_option("--max-iterations", config.max_iterations, "Solver iteration cap")->capture_default_str();
    bm->add_option("--threads", config.threads, "Worker threads (0 = hardware concurrency)")->capture_default_str();
    bm->add_flag("--exclude-nonconverged", config.exclude_nonconverged, "Drop non-converged states from the means");
    add_output_flags(bm, bench_opts);

    std::vector<const char *> argv;
    argv.reserve(args.size());
    for (const auto &a : args) {
        argv.push_back(a.c_str());
    }

    try {
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::CallForHelp &) {
            auto subs = app.get_subcommands();
            out << (subs.empty() ? app.help() : subs.front()->help());
            return kExitOk;
        } catch (const CLI::CallForAllHelp &) {
            out << app.help("", CLI::AppFormatMode::All);
            return kExitOk;
        } catch (const CLI::ParseError &e) {
            throw UsageError(e.what());
        }

        if (dist->parsed()) {
            auto noise = dist_opts.bright_noise ? photon_stats::BrightNoise::Include : photon_stats::BrightNoise::Exclude;
            bench::DistributionStudy study = bench::run_distribution_study(dist_opts.params, noise);
            if (dist_opts.format == "csv") {
                emit_text(bench::study_csv(study, csv_digits(dist_opts.precision)), dist_opts, "distributions", out);
            } else {
                emit_json(nlohmann::json(study), dist_opts, "distributions", out);
            }
        } else if (errs->parsed()) {
            auto noise = err_opts.bright_noise ? photon_stats::BrightNoise::Include : photon_stats::BrightNoise::Exclude;
            bench::DistributionStudy study = bench::run_distribution_study(err_opts.params, noise);
            const auto &m = study.error_model;
            if (err_opts.format == "csv") {
                std::ostringstream text;
                text.precision(csv_digits(err_opts.precision));
                text << "k0,p10,p01\n" << m.k0 << ',' << m.p10 << ',' << m.p01 << '\n';
                emit_text(text.str(), err_opts, "errors", out);
            } else {
                nlohmann::json j = m;
                j["warnings"] = study.threshold.warnings;
                emit_json(j, err_opts, "errors", out);
            }
        } else if (bm->parsed()) {
            if (from_fluorescence) {
                config.fluorescence = bench_opts.params;
            }
            std::vector<measurement::ShotsMode> modes;
            if (shots_mode == "both") {
                modes = {measurement::ShotsMode::Total, measurement::ShotsMode::PerBasis};
            } else {
                modes = {bench::shots_mode_from_name(shots_mode)};
            }
            // Validate every run before spending time on any of them.
            for (auto mode : modes) {
                bench::BenchmarkConfig c = config;
                c.shots_mode = mode;
                c.validate();
            }
            auto path = destination(bench_opts, "benchmark");
            nlohmann::json summaries = nlohmann::json::array();
            std::string csv_text;
            for (auto mode : modes) {
                bench::BenchmarkConfig c = config;
                c.shots_mode = mode;
                bench::BenchmarkReport report = bench::run_tomography_benchmark(c);
                nlohmann::json summary = benchmark_summary(report);
                if (path) {
                    std::string p = modes.size() > 1 ? sibling_path(*path, "_" + bench::shots_mode_name(mode)) : *path;
                    if (bench_opts.format == "csv") {
                        write_file(p, bench::report_csv(report, csv_digits(bench_opts.precision)));
                    } else {
                        try {
                            bench::write_report(report, p);
                        } catch (const std::runtime_error &e) {
                            throw IoError(e.what());
                        }
                    }
                    summary["output"] = p;
                } else if (bench_opts.format == "csv") {
                    csv_text += bench::report_csv(report, csv_digits(bench_opts.precision));
                } else {
                    summary["report"] = report;
                }
                summaries.push_back(std::move(summary));
            }
            if (!path && bench_opts.format == "csv") {
                out << csv_text;
            } else {
                nlohmann::json result = summaries.size() == 1 ? summaries.front() : summaries;
                out << round_numbers(result, bench_opts.precision).dump(2) << '\n';
            }
        }
        return kExitOk;
    } catch (const UsageError &e) {
        print_error(err, "usage", e.what());
        return kExitUsage;
    } catch (const photon_stats::IndistinguishableError &e) {
        print_error(err, "indistinguishable", e.what());
        return kExitUsage;
    } catch (const std::domain_error &e) {
        print_error(err, "invalid_argument", e.what());
        return kExitUsage;
    } catch (const IoError &e) {
        print_error(err, "io", e.what());
        return kExitRuntime;
    } catch (const std::exception &e) {
        print_error(err, "runtime", e.what());
        return kExitRuntime;
    }
}

}  // namespace iontomo::cli

// dafc: experiment runner, property suites, spectrum reports and seed sweeps.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 numeric fault,
// 3 property failure.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "dafc/config.hpp"
#include "dafc/error.hpp"
#include "dafc/phase.hpp"
#include "dafc/simulator.hpp"
#include "dafc/trace_io.hpp"
#include "dafc/verify.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kNumeric = 2;
constexpr int kProperty = 3;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::int64_t> decimate;
    std::optional<std::int64_t> freeze_at;
};

dafc::ExperimentConfig load_with(const std::string& path, const Overrides& o) {
    auto cfg = dafc::load_config(path);
    if (o.seed) cfg.run.seed = *o.seed;
    if (o.out) cfg.run.out_dir = *o.out;
    if (o.decimate) cfg.run.decimate = *o.decimate;
    if (o.freeze_at) cfg.run.freeze_at = *o.freeze_at;
    if (auto v = cfg.violations(); !v.empty()) throw dafc::ConfigError(std::move(v));
    return cfg;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::vector<dafc::io::SpectrumRow> spectrum_rows(const dafc::RunSummary& s) {
    std::vector<dafc::io::SpectrumRow> rows;
    for (std::size_t i = 0; i < s.harmonics.size(); ++i) {
        const auto& h = s.harmonics[i];
        rows.push_back({i + 1, h.freq_hz, h.before, h.after.value_or(std::numeric_limits<double>::quiet_NaN())});
    }
    return rows;
}

// Runs one experiment and writes every artifact into cfg.run.out_dir.
dafc::RunSummary execute(const dafc::ExperimentConfig& cfg) {
    fs::create_directories(cfg.run.out_dir);
    auto trace_out = open_out(cfg.run.out_dir / cfg.run.trace_file);
    dafc::io::TraceWriter writer(trace_out, cfg.estimator.n_a, cfg.disturbance.harmonics.size());
    dafc::RunHooks hooks;
    hooks.on_record = [&](const dafc::TraceRecord& r) { writer.write(r); };
    const auto trace = dafc::run_experiment(cfg, hooks);
    const auto& s = trace.summary;

    auto summary_out = open_out(cfg.run.out_dir / cfg.run.summary_file);
    summary_out << dafc::io::summary_json(s);
    const auto dist = cfg.disturbance.spec();
    if (dist.period()) {
        auto ff = open_out(cfg.run.out_dir / cfg.run.feedforward_file);
        dafc::io::write_feedforward(ff, s.theta_D, dist);
    }
    auto fr = open_out(cfg.run.out_dir / cfg.run.freqresp_file);
    dafc::io::write_freqresp(fr, s.truth, s.estimator.a_poly(), s.estimator.b_poly(), dist);
    auto sp = open_out(cfg.run.out_dir / "spectrum.csv");
    dafc::io::write_spectrum(sp, spectrum_rows(s));
    return s;
}

int cmd_run(const std::string& config, const Overrides& o) {
    const auto cfg = load_with(config, o);
    const auto s = execute(cfg);
    std::cout << "run '" << s.name << "': " << s.steps << " steps in " << s.runtime_s << " s (" << s.backend
              << " kernels)\n";
    for (std::size_t i = 0; i < s.harmonics.size(); ++i) {
        const auto& h = s.harmonics[i];
        std::cout << "  harmonic " << i + 1 << " (" << h.freq_hz << " Hz): before " << h.before;
        if (h.after) std::cout << ", after " << *h.after << " (" << 20.0 * std::log10(*h.after / h.before) << " dB)";
        if (h.replay) std::cout << ", replay " << *h.replay;
        std::cout << '\n';
    }
    std::cout << "  outputs in " << cfg.run.out_dir.string() << '\n';
    return kOk;
}

int cmd_verify(const std::vector<std::string>& suites, std::optional<std::uint64_t> seed) {
    const std::uint64_t base = seed ? *seed : (std::uint64_t{std::random_device{}()} << 32) ^ std::random_device{}();
    std::vector<std::string> failed;
    for (const auto& name : suites) {
        const auto r = dafc::verify::run_suite(name, base);
        std::cout << "suite " << r.suite << " (seed " << r.seed << ")\n";
        for (const auto& p : r.properties) {
            std::cout << "  [" << (p.passed ? "PASS" : "FAIL") << "] " << p.name << ": " << p.detail << '\n';
            if (!p.passed) failed.push_back(r.suite + ": " + p.name);
        }
    }
    if (failed.empty()) return kOk;
    std::cerr << "failed properties:\n";
    for (const auto& f : failed) std::cerr << "  " << f << '\n';
    return kProperty;
}

int cmd_spectrum(const std::string& trace_path, const std::string& config, std::int64_t before, std::int64_t after,
                 std::int64_t window, const std::string& out_path) {
    const auto cfg = dafc::load_config(config);
    const auto dist = cfg.disturbance.spec();
    std::ifstream in(trace_path);
    if (!in) throw dafc::ParseError("cannot open trace " + trace_path, -1);
    const auto records = dafc::io::read_trace(in);

    auto window_of = [&](std::int64_t start) {
        std::vector<double> e;
        for (const auto& r : records)
            if (r.k >= start && r.k < start + window) e.push_back(r.e);
        if (static_cast<std::int64_t>(e.size()) != window)
            throw dafc::WindowingError("trace does not hold every sample of the window starting at " +
                                       std::to_string(start) + " (decimated trace or window past the end)");
        std::vector<double> amps;
        for (double w : dist.omegas())
            amps.push_back(dafc::harmonic_amplitude(e, w, dist.sample_period(), start).amplitude);
        return amps;
    };
    const auto b = window_of(before);
    const auto a = window_of(after);
    std::vector<dafc::io::SpectrumRow> rows;
    for (std::size_t i = 0; i < dist.size(); ++i) rows.push_back({i + 1, dist.omegas()[i] / dafc::kTwoPi, b[i], a[i]});
    if (out_path.empty()) {
        dafc::io::write_spectrum(std::cout, rows);
    } else {
        auto out = open_out(out_path);
        dafc::io::write_spectrum(out, rows);
    }
    return kOk;
}

int cmd_sweep(const std::string& config, const Overrides& o, std::vector<std::uint64_t> seeds, std::size_t count,
              std::size_t threads) {
    auto base = load_with(config, o);
    if (seeds.empty())
        for (std::size_t i = 0; i < count; ++i) seeds.push_back(base.run.seed + i);
    if (seeds.empty()) throw CLI::ValidationError("sweep", "no seeds given");
    const fs::path root = base.run.out_dir;

    struct Outcome {
        std::optional<dafc::RunSummary> summary;
        std::string error;
        bool numeric = false;
    };
    std::vector<Outcome> outcomes(seeds.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < seeds.size(); i = next++) {
            auto cfg = base;
            cfg.run.seed = seeds[i];
            cfg.run.out_dir = root / ("seed_" + std::to_string(seeds[i]));
            try {
                outcomes[i].summary = execute(cfg);
            } catch (const dafc::NumericFault& e) {
                outcomes[i].error = e.what();
                outcomes[i].numeric = true;
            } catch (const std::exception& e) {
                outcomes[i].error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::clamp<std::size_t>(threads, 1, seeds.size()); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    // reducer
    fs::create_directories(root);
    auto out = open_out(root / "sweep.csv");
    out << "seed,status,plant_relative_error,theta_M_ratio,residue_target,worst_attenuation_db,runtime_s\n";
    int status = kOk;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const auto& oc = outcomes[i];
        if (!oc.summary) {
            out << seeds[i] << ",error,,,,,\n";
            std::cerr << "seed " << seeds[i] << ": " << oc.error << '\n';
            status = std::max(status, oc.numeric ? kNumeric : kUsage);
            continue;
        }
        const auto& s = *oc.summary;
        double worst = -std::numeric_limits<double>::infinity();
        for (const auto& h : s.harmonics)
            if (h.after && h.before > 0.0) worst = std::max(worst, 20.0 * std::log10(*h.after / h.before));
        out << seeds[i] << ",ok," << dafc::io::format_double(s.plant_relative_error) << ','
            << dafc::io::format_double(s.theta_R_norm > 0.0 ? s.theta_M_norm / s.theta_R_norm : 0.0) << ','
            << dafc::io::format_double(s.residue_factor) << ',' << (std::isfinite(worst) ? dafc::io::format_double(worst) : "")
            << ',' << dafc::io::format_double(s.runtime_s) << '\n';
    }
    std::cout << "sweep of " << seeds.size() << " runs written to " << (root / "sweep.csv").string() << '\n';
    return status;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Direct adaptive feedforward compensation of known-frequency disturbances"};
    app.require_subcommand(1);

    Overrides o;
    std::string config;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "experiment configuration (YAML)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "override run.seed");
        sub->add_option("--out", o.out, "override run.out_dir");
        sub->add_option("--decimate", o.decimate, "log every m-th step")->check(CLI::PositiveNumber);
        sub->add_option("--freeze-at", o.freeze_at, "freeze theta_D and replay from this step");
    };

    auto* run = app.add_subcommand("run", "run one experiment and write trace, summary and exports");
    add_common(run);

    std::vector<std::string> suites;
    std::optional<std::uint64_t> verify_seed;
    auto* verify = app.add_subcommand("verify", "run property suites");
    verify->add_option("suite", suites, "lemma1, excitation, pe, projections, equilibrium, residue or all")
        ->required()
        ->check(CLI::IsMember([] {
            auto v = dafc::verify::suite_names();
            v.push_back("all");
            return v;
        }()));
    verify->add_option("--seed", verify_seed, "seed (default: fresh random)");

    std::string trace_path, spectrum_out;
    std::int64_t before = 0, after = 0, window = 0;
    auto* spectrum = app.add_subcommand("spectrum", "per-harmonic before/after amplitudes from a trace");
    spectrum->add_option("--trace", trace_path, "undecimated trace CSV")->required()->check(CLI::ExistingFile);
    spectrum->add_option("--config", config, "configuration the trace was produced with")->required()->check(CLI::ExistingFile);
    spectrum->add_option("--before", before, "first step of the before window")->required();
    spectrum->add_option("--after", after, "first step of the after window")->required();
    spectrum->add_option("--window", window, "window length in samples (whole periods)")->required()->check(CLI::PositiveNumber);
    spectrum->add_option("--out", spectrum_out, "output CSV (default: stdout)");

    std::vector<std::uint64_t> seeds;
    std::size_t count = 4;
    std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
    auto* sweep = app.add_subcommand("sweep", "run the configuration over several seeds in parallel");
    add_common(sweep);
    sweep->add_option("--seeds", seeds, "explicit seed list")->delimiter(',');
    sweep->add_option("--count", count, "number of consecutive seeds from run.seed");
    sweep->add_option("--threads", threads, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (*run) return cmd_run(config, o);
        if (*verify) {
            if (std::find(suites.begin(), suites.end(), "all") != suites.end()) suites = dafc::verify::suite_names();
            return cmd_verify(suites, verify_seed);
        }
        if (*spectrum) return cmd_spectrum(trace_path, config, before, after, window, spectrum_out);
        if (*sweep) return cmd_sweep(config, o, seeds, count, threads);
    } catch (const dafc::NumericFault& e) {
        std::cerr << "numeric fault: " << e.what() << '\n';
        return kNumeric;
    } catch (const dafc::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

#pragma once

// Experiment configuration: plain data mirroring the module layout, loaded
// from a YAML document (schema in docs/config_schema.md) and validated as a
// whole so that every violated constraint is reported at once.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dafc/adaptation.hpp"
#include "dafc/excitation.hpp"
#include "dafc/lti.hpp"
#include "dafc/regressor.hpp"
#include "dafc/synthesis.hpp"

namespace dafc {

struct RandomPlantSpec {
    std::size_t order = 5;
    std::uint64_t seed = 1;
    double pole_min = 0.3;
    double pole_max = 0.9;
    double b_min_magnitude = 0.1;
};

struct PlantSection {
    lti::TransferFunction tf;
    std::optional<RandomPlantSpec> random;  ///< provenance when tf was generated
    double noise_sigma = 0.0;
};

struct HarmonicSpec {
    double freq_hz = 0.0;
    double amp = 0.0;
    double phase_rad = 0.0;
};

struct DisturbanceSection {
    double sample_period = 0.0;
    std::vector<HarmonicSpec> harmonics;

    std::vector<double> omegas() const;
    /// Throws SpecValidationError on invalid frequencies.
    DisturbanceSpec spec() const;
};

struct RunSection {
    std::int64_t steps = 0;
    std::optional<std::int64_t> freeze_at;
    std::int64_t decimate = 1;
    std::uint64_t seed = 1;
    /// Analysis window in samples; derived from the tone periods when unset.
    std::optional<std::int64_t> window;
    bool adapt = true;
    std::filesystem::path out_dir = ".";
    std::string trace_file = "trace.csv";
    std::string summary_file = "summary.json";
    std::string feedforward_file = "feedforward.csv";
    std::string freqresp_file = "freqresp.csv";
};

struct ExperimentConfig {
    std::string name = "experiment";
    PlantSection plant;
    DisturbanceSection disturbance;
    ExcitationSpec excitation;
    EstimatorConfig estimator;
    SynthesisConfig synthesis;
    RunSection run;

    /// Noise and PRBS streams derive from run.seed.
    std::uint64_t noise_seed() const { return run.seed * 0x9E3779B97F4A7C15ull + 1; }
    std::uint64_t prbs_seed() const { return run.seed * 0xBF58476D1CE4E5B9ull + 2; }

    /// Every violated cross-field constraint; empty when the config is usable.
    std::vector<std::string> violations() const;
};

/// Parses and validates. Throws ParseError (with line) on malformed input
/// and ConfigError listing every violated constraint.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Reference setup used by the acceptance suite and the shipped example
/// config: 5th-order random plant, four harmonics of 120 Hz at 41.76 kHz.
ExperimentConfig table1_analog_config();

} // namespace dafc

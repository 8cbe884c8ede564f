#include "dafc/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "dafc/error.hpp"
#include "dafc/phase.hpp"
#include "dafc/simulator.hpp"

namespace dafc {

namespace {

// Typed reads that report the offending line; unknown keys are collected so a
// misspelt option never silently falls back to its default.
class Reader {
public:
    explicit Reader(std::vector<std::string>& problems) : problems_(problems) {}

    void check_keys(const YAML::Node& node, const std::string& section, std::set<std::string> allowed) {
        if (!node) return;
        if (!node.IsMap()) throw ParseError(section + " must be a mapping", node.Mark().line);
        for (const auto& kv : node) {
            const auto key = kv.first.as<std::string>();
            if (!allowed.count(key))
                problems_.push_back("unknown key '" + (section.empty() ? key : section + "." + key) + "' (line " +
                                    std::to_string(kv.first.Mark().line + 1) + ")");
        }
    }

    template <class T>
    T get(const YAML::Node& node, const std::string& what) {
        try {
            return node.as<T>();
        } catch (const YAML::Exception&) {
            throw ParseError(what + ": expected " + type_name<T>(), node.Mark().line);
        }
    }

    template <class T>
    void read(const YAML::Node& parent, const char* key, T& out, const std::string& section) {
        if (const auto n = parent[key]) out = get<T>(n, section + "." + key);
    }

    template <class T>
    void read(const YAML::Node& parent, const char* key, std::optional<T>& out, const std::string& section) {
        if (const auto n = parent[key]; n && !n.IsNull()) out = get<T>(n, section + "." + key);
    }

    std::vector<double> list(const YAML::Node& node, const std::string& what) {
        if (!node.IsSequence()) throw ParseError(what + ": expected a list of numbers", node.Mark().line);
        std::vector<double> out;
        for (const auto& v : node) out.push_back(get<double>(v, what));
        return out;
    }

private:
    template <class T>
    static std::string type_name() {
        if constexpr (std::is_same_v<T, bool>) return "true/false";
        else if constexpr (std::is_integral_v<T>) return "an integer";
        else if constexpr (std::is_floating_point_v<T>) return "a number";
        else return "a string";
    }

    std::vector<std::string>& problems_;
};

GainSchedule read_schedule(Reader& r, const YAML::Node& node, const std::string& section, GainSchedule g) {
    if (!node) return g;
    if (node.IsScalar()) {
        g.c = r.get<double>(node, section);
        return g;
    }
    r.check_keys(node, section, {"c", "p", "floor", "offset"});
    r.read(node, "c", g.c, section);
    r.read(node, "p", g.p, section);
    r.read(node, "floor", g.floor, section);
    r.read(node, "offset", g.offset, section);
    return g;
}

ExcitationMode parse_mode(const std::string& s, int line) {
    if (s == "off") return ExcitationMode::Off;
    if (s == "shaped") return ExcitationMode::Shaped;
    if (s == "prbs") return ExcitationMode::Prbs;
    throw ParseError("excitation.mode must be one of off, shaped, prbs (got '" + s + "')", line);
}

std::string describe(const std::exception& e) { return e.what(); }

} // namespace

std::vector<double> DisturbanceSection::omegas() const {
    std::vector<double> out;
    for (const auto& h : harmonics) out.push_back(kTwoPi * h.freq_hz);
    return out;
}

DisturbanceSpec DisturbanceSection::spec() const {
    std::vector<double> amps, phases;
    for (const auto& h : harmonics) {
        amps.push_back(h.amp);
        phases.push_back(h.phase_rad);
    }
    return DisturbanceSpec(omegas(), std::move(amps), std::move(phases), sample_period);
}

std::vector<std::string> ExperimentConfig::violations() const {
    std::vector<std::string> out;
    std::optional<DisturbanceSpec> dist;
    if (disturbance.harmonics.empty()) out.push_back("disturbance.harmonics must list at least one harmonic");
    else if (!(disturbance.sample_period > 0.0)) out.push_back("disturbance.sample_rate_hz must be positive");
    else {
        try {
            dist = disturbance.spec();
        } catch (const std::exception& e) {
            out.push_back("disturbance: " + describe(e) + " (frequencies must be distinct and below Nyquist)");
        }
    }

    if (!lti::is_schur_stable(plant.tf.a, 0.0))
        out.push_back("plant.a is not Schur-stable: the plant must have all roots of A(q^-1) strictly outside the "
                      "unit circle");
    if (!(plant.noise_sigma >= 0.0)) out.push_back("plant.noise_sigma must be >= 0");

    if (estimator.n_a == 0) out.push_back("adaptation.n_a must be >= 1");
    for (auto [name, g] : {std::pair{"adaptation.gamma1", estimator.gamma1}, std::pair{"adaptation.gamma2", estimator.gamma2}}) {
        try {
            g.validate();
        } catch (const std::exception& e) {
            out.push_back(std::string(name) + ": " + describe(e) + " (decreasing gains, sum of gains diverging)");
        }
    }
    try {
        estimator.projection.validate(disturbance.harmonics.size());
    } catch (const std::exception& e) {
        out.push_back("adaptation." + describe(e));
    }
    if (!(estimator.f0 > 0.0)) out.push_back("adaptation.f0 must be positive");
    if (!(estimator.regularization > 0.0)) out.push_back("adaptation.regularization must be positive");

    for (auto& v : synthesis.violations()) out.push_back(std::move(v));

    if (dist) {
        for (auto& v : excitation.violations(*dist)) out.push_back(std::move(v));
        if (run.adapt) {
            const std::size_t need = 2 * estimator.n_a;
            const std::size_t have = excitation.pe_order_bound(*dist);
            if (have < need)
                out.push_back("excitation guarantees persistency of excitation of order " + std::to_string(have) +
                              " but identifying n_a = " + std::to_string(estimator.n_a) + " needs order " +
                              std::to_string(need) + " (2n per frequency shift): add shifts to delta_u_hz or use prbs");
        }
    }

    if (run.steps < 0) out.push_back("run.steps must be >= 0");
    if (run.decimate < 1) out.push_back("run.decimate must be >= 1");
    if (run.freeze_at && (*run.freeze_at < 0 || *run.freeze_at > run.steps))
        out.push_back("run.freeze_at must lie in [0, run.steps]");
    if (run.window && *run.window <= 0) out.push_back("run.window must be positive");
    return out;
}

ExperimentConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ParseError(e.msg, e.mark.line);
    }
    if (!root.IsMap()) throw ParseError("configuration must be a mapping of sections", root.Mark().line);

    std::vector<std::string> problems;
    Reader r(problems);
    ExperimentConfig cfg;
    r.check_keys(root, "", {"name", "plant", "disturbance", "excitation", "adaptation", "synthesis", "run"});
    r.read(root, "name", cfg.name, "name");

    // disturbance first: plant generation needs the frequencies
    const auto dn = root["disturbance"];
    if (!dn) problems.push_back("missing section 'disturbance'");
    else {
        r.check_keys(dn, "disturbance", {"sample_rate_hz", "sample_period", "harmonics"});
        if (dn["sample_rate_hz"]) {
            const double fs = r.get<double>(dn["sample_rate_hz"], "disturbance.sample_rate_hz");
            if (fs > 0.0) cfg.disturbance.sample_period = 1.0 / fs;
            else problems.push_back("disturbance.sample_rate_hz must be positive");
        }
        r.read(dn, "sample_period", cfg.disturbance.sample_period, "disturbance");
        if (!dn["sample_rate_hz"] && !dn["sample_period"])
            problems.push_back("disturbance needs sample_rate_hz or sample_period");
        if (const auto hs = dn["harmonics"]) {
            if (!hs.IsSequence()) throw ParseError("disturbance.harmonics must be a list", hs.Mark().line);
            for (const auto& h : hs) {
                r.check_keys(h, "disturbance.harmonics[]", {"freq_hz", "amp", "phase"});
                HarmonicSpec spec;
                if (!h["freq_hz"]) problems.push_back("disturbance.harmonics entry on line " +
                                                      std::to_string(h.Mark().line + 1) + " lacks freq_hz");
                r.read(h, "freq_hz", spec.freq_hz, "disturbance.harmonics");
                r.read(h, "amp", spec.amp, "disturbance.harmonics");
                r.read(h, "phase", spec.phase_rad, "disturbance.harmonics");
                cfg.disturbance.harmonics.push_back(spec);
            }
        }
    }

    const auto pn = root["plant"];
    if (!pn) problems.push_back("missing section 'plant'");
    else {
        r.check_keys(pn, "plant", {"a", "b", "random", "noise_sigma"});
        r.read(pn, "noise_sigma", cfg.plant.noise_sigma, "plant");
        if (const auto rn = pn["random"]) {
            if (pn["a"] || pn["b"]) problems.push_back("plant: give either a/b coefficients or random, not both");
            r.check_keys(rn, "plant.random", {"order", "seed", "pole_min", "pole_max", "b_min"});
            RandomPlantSpec rs;
            r.read(rn, "order", rs.order, "plant.random");
            r.read(rn, "seed", rs.seed, "plant.random");
            r.read(rn, "pole_min", rs.pole_min, "plant.random");
            r.read(rn, "pole_max", rs.pole_max, "plant.random");
            r.read(rn, "b_min", rs.b_min_magnitude, "plant.random");
            cfg.plant.random = rs;
            try {
                cfg.plant.tf = random_stable_plant(rs, cfg.disturbance.omegas(), cfg.disturbance.sample_period);
            } catch (const std::exception& e) {
                problems.push_back("plant.random: " + describe(e));
            }
        } else if (pn["a"] && pn["b"]) {
            try {
                cfg.plant.tf = lti::TransferFunction::make(r.list(pn["a"], "plant.a"), r.list(pn["b"], "plant.b"));
            } catch (const ParseError&) {
                throw;
            } catch (const std::exception& e) {
                problems.push_back("plant: " + describe(e) +
                                   " (A monic, B with one sample of delay, equal degrees)");
            }
        } else {
            problems.push_back("plant needs both a and b coefficient lists, or a random section");
        }
    }

    if (const auto en = root["excitation"]) {
        r.check_keys(en, "excitation", {"mode", "amplitude", "amplitude_floor", "decay_steps", "delta_u_hz"});
        if (en["mode"]) cfg.excitation.mode = parse_mode(r.get<std::string>(en["mode"], "excitation.mode"), en["mode"].Mark().line);
        r.read(en, "amplitude", cfg.excitation.alpha_u.initial, "excitation");
        cfg.excitation.alpha_u.floor = cfg.excitation.alpha_u.initial;
        r.read(en, "amplitude_floor", cfg.excitation.alpha_u.floor, "excitation");
        r.read(en, "decay_steps", cfg.excitation.alpha_u.decay_steps, "excitation");
        if (en["delta_u_hz"]) {
            for (double hz : r.list(en["delta_u_hz"], "excitation.delta_u_hz")) cfg.excitation.delta_u.push_back(kTwoPi * hz);
        }
    } else {
        cfg.excitation.mode = ExcitationMode::Off;
    }
    if (cfg.excitation.mode == ExcitationMode::Shaped && cfg.excitation.delta_u.empty() &&
        !cfg.disturbance.harmonics.empty())
        cfg.excitation.delta_u = {0.02 * cfg.disturbance.omegas().front()};

    if (const auto an = root["adaptation"]) {
        r.check_keys(an, "adaptation", {"n_a", "gamma1", "gamma2", "f0", "regularization", "gain_timing", "projection"});
        r.read(an, "n_a", cfg.estimator.n_a, "adaptation");
        cfg.estimator.gamma1 = read_schedule(r, an["gamma1"], "adaptation.gamma1", cfg.estimator.gamma1);
        cfg.estimator.gamma2 = read_schedule(r, an["gamma2"], "adaptation.gamma2", cfg.estimator.gamma2);
        r.read(an, "f0", cfg.estimator.f0, "adaptation");
        r.read(an, "regularization", cfg.estimator.regularization, "adaptation");
        if (const auto t = an["gain_timing"]) {
            const auto s = r.get<std::string>(t, "adaptation.gain_timing");
            if (s == "updated") cfg.estimator.timing = GainTiming::Updated;
            else if (s == "lagged") cfg.estimator.timing = GainTiming::Lagged;
            else throw ParseError("adaptation.gain_timing must be 'updated' or 'lagged'", t.Mark().line);
        }
        if (const auto pj = an["projection"]) {
            r.check_keys(pj, "adaptation.projection", {"b_floor", "b_ceil_ratio", "schur_margin", "shrink_rho", "eta", "write_back"});
            auto& p = cfg.estimator.projection;
            r.read(pj, "b_floor", p.b_floor, "adaptation.projection");
            r.read(pj, "b_ceil_ratio", p.b_ceil_ratio, "adaptation.projection");
            r.read(pj, "schur_margin", p.schur_margin, "adaptation.projection");
            r.read(pj, "shrink_rho", p.shrink_rho, "adaptation.projection");
            r.read(pj, "eta", p.eta, "adaptation.projection");
            r.read(pj, "write_back", cfg.estimator.project_recursion, "adaptation.projection");
        }
    } else {
        cfg.estimator.n_a = cfg.plant.tf.order();
    }
    // the ceiling is relative to the nominal plant response
    if (cfg.estimator.projection.b_ceil_ratio && cfg.disturbance.sample_period > 0.0) {
        cfg.estimator.projection.nominal_magnitude.clear();
        for (double w : cfg.disturbance.omegas())
            cfg.estimator.projection.nominal_magnitude.push_back(std::abs(cfg.plant.tf.b.evaluate(w * cfg.disturbance.sample_period)));
    }

    if (const auto sn = root["synthesis"]) {
        r.check_keys(sn, "synthesis", {"alpha", "beta", "db_refresh_stride", "ratio_max", "alpha_beta_max"});
        r.read(sn, "alpha", cfg.synthesis.alpha, "synthesis");
        r.read(sn, "beta", cfg.synthesis.beta, "synthesis");
        r.read(sn, "db_refresh_stride", cfg.synthesis.db_refresh_stride, "synthesis");
        r.read(sn, "ratio_max", cfg.synthesis.ratio_max, "synthesis");
        r.read(sn, "alpha_beta_max", cfg.synthesis.alpha_beta_max, "synthesis");
    }

    if (const auto rn = root["run"]) {
        r.check_keys(rn, "run", {"steps", "freeze_at", "decimate", "seed", "window", "adapt", "out_dir", "trace_file",
                                 "summary_file", "feedforward_file", "freqresp_file"});
        r.read(rn, "steps", cfg.run.steps, "run");
        r.read(rn, "freeze_at", cfg.run.freeze_at, "run");
        r.read(rn, "decimate", cfg.run.decimate, "run");
        r.read(rn, "seed", cfg.run.seed, "run");
        r.read(rn, "window", cfg.run.window, "run");
        r.read(rn, "adapt", cfg.run.adapt, "run");
        if (rn["out_dir"]) cfg.run.out_dir = r.get<std::string>(rn["out_dir"], "run.out_dir");
        r.read(rn, "trace_file", cfg.run.trace_file, "run");
        r.read(rn, "summary_file", cfg.run.summary_file, "run");
        r.read(rn, "feedforward_file", cfg.run.feedforward_file, "run");
        r.read(rn, "freqresp_file", cfg.run.freqresp_file, "run");
    } else {
        problems.push_back("missing section 'run'");
    }

    if (problems.empty())
        for (auto& v : cfg.violations()) problems.push_back(std::move(v));
    if (!problems.empty()) throw ConfigError(std::move(problems));
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open configuration file " + path.string(), -1);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

ExperimentConfig table1_analog_config() {
    ExperimentConfig cfg;
    cfg.name = "table1_analog";
    cfg.disturbance.sample_period = 1.0 / 41760.0;
    cfg.disturbance.harmonics = {{120.0, 1.0, 0.3}, {240.0, 0.6, -1.1}, {360.0, 0.4, 2.0}, {480.0, 0.25, 0.7}};

    RandomPlantSpec rs;
    rs.order = 5;
    rs.seed = 2024;
    cfg.plant.random = rs;
    cfg.plant.tf = random_stable_plant(rs, cfg.disturbance.omegas(), cfg.disturbance.sample_period);

    // broadband and large against the disturbance, gone before the
    // measurement windows
    cfg.excitation.mode = ExcitationMode::Prbs;
    cfg.excitation.alpha_u = {300.0, 0.0, 40000.0};

    cfg.estimator.n_a = 5;
    cfg.estimator.gamma1 = {1.0, 1.0, 0.0};
    cfg.estimator.gamma2 = {1.0, 0.75, 1e-2};

    cfg.synthesis.alpha = 4e-5;
    cfg.synthesis.beta = 1.0 - 2e-7;

    cfg.run.steps = 500000;
    cfg.run.decimate = 100;
    cfg.run.seed = 1;
    return cfg;
}

} // namespace dafc

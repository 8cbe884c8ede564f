#include "dafc/trace_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "dafc/error.hpp"
#include "dafc/phase.hpp"

namespace dafc::io {

namespace {

void append(std::string& line, double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    line.append(buf, res.ptr);
}

void append(std::string& line, std::int64_t x) {
    char buf[24];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    line.append(buf, res.ptr);
}

void append_vec(std::string& line, const Eigen::VectorXd& v, std::size_t expected) {
    if (static_cast<std::size_t>(v.size()) != expected) throw DimensionError("trace: parameter vector length mismatch");
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        line += ',';
        append(line, v[i]);
    }
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, int line) {
    double x = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ParseError("trace: bad number '" + s + "'", line);
    return x;
}

nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

nlohmann::json vec(const Eigen::VectorXd& v) {
    auto out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(num(v[i]));
    return out;
}

nlohmann::json vec(std::span<const double> v) {
    auto out = nlohmann::json::array();
    for (double x : v) out.push_back(num(x));
    return out;
}

} // namespace

std::vector<std::string> trace_columns(std::size_t n_a, std::size_t harmonics) {
    std::vector<std::string> cols{"k", "e", "u", "u_A", "eps0", "theta_M_norm", "proj_A", "proj_B"};
    for (const char* prefix : {"theta_A_", "theta_B_"})
        for (std::size_t i = 1; i <= n_a; ++i) cols.push_back(prefix + std::to_string(i));
    for (const char* prefix : {"theta_M_", "theta_D_"})
        for (std::size_t i = 1; i <= 2 * harmonics; ++i) cols.push_back(prefix + std::to_string(i));
    return cols;
}

std::string format_double(double x) {
    std::string s;
    append(s, x);
    return s;
}

TraceWriter::TraceWriter(std::ostream& out, std::size_t n_a, std::size_t harmonics)
    : out_(out), n_a_(n_a), harmonics_(harmonics) {
    const auto cols = trace_columns(n_a, harmonics);
    for (std::size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
    out_ << '\n';
}

void TraceWriter::write(const TraceRecord& r) {
    line_.clear();
    append(line_, r.k);
    for (double x : {r.e, r.u, r.u_A, r.epsilon0, r.theta_M_norm}) {
        line_ += ',';
        append(line_, x);
    }
    line_ += r.projected_A ? ",1" : ",0";
    line_ += r.projected_B ? ",1" : ",0";
    append_vec(line_, r.theta_A, n_a_);
    append_vec(line_, r.theta_B, n_a_);
    append_vec(line_, r.theta_M, 2 * harmonics_);
    append_vec(line_, r.theta_D, 2 * harmonics_);
    line_ += '\n';
    out_ << line_;
}

void write_trace(std::ostream& out, const std::vector<TraceRecord>& records, std::size_t n_a, std::size_t harmonics) {
    TraceWriter w(out, n_a, harmonics);
    for (const auto& r : records) w.write(r);
}

std::vector<TraceRecord> read_trace(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("trace: empty input, expected a header row", 0);
    const auto header = split(line);
    std::size_t n_a = 0, m = 0;
    for (const auto& c : header) {
        if (c.rfind("theta_A_", 0) == 0) ++n_a;
        if (c.rfind("theta_D_", 0) == 0) ++m;  // theta_M_norm shares the theta_M_ prefix
    }
    if (m % 2 != 0 || header != trace_columns(n_a, m / 2))
        throw ParseError("trace: header does not match the trace column layout", 0);

    std::vector<TraceRecord> out;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size())
            throw ParseError("trace: expected " + std::to_string(header.size()) + " columns, got " +
                                 std::to_string(cells.size()),
                             lineno);
        TraceRecord r;
        std::size_t c = 0;
        const double kd = parse_double(cells[c++], lineno);
        r.k = static_cast<std::int64_t>(kd);
        if (static_cast<double>(r.k) != kd) throw ParseError("trace: k must be an integer", lineno);
        r.e = parse_double(cells[c++], lineno);
        r.u = parse_double(cells[c++], lineno);
        r.u_A = parse_double(cells[c++], lineno);
        r.epsilon0 = parse_double(cells[c++], lineno);
        r.theta_M_norm = parse_double(cells[c++], lineno);
        r.projected_A = parse_double(cells[c++], lineno) != 0.0;
        r.projected_B = parse_double(cells[c++], lineno) != 0.0;
        auto fill = [&](Eigen::VectorXd& v, std::size_t len) {
            v.resize(static_cast<Eigen::Index>(len));
            for (std::size_t i = 0; i < len; ++i) v[static_cast<Eigen::Index>(i)] = parse_double(cells[c++], lineno);
        };
        fill(r.theta_A, n_a);
        fill(r.theta_B, n_a);
        fill(r.theta_M, m);
        fill(r.theta_D, m);
        out.push_back(std::move(r));
    }
    return out;
}

std::string summary_json(const RunSummary& s) {
    nlohmann::ordered_json j;
    j["name"] = s.name;
    j["steps"] = s.steps;
    j["freeze_at"] = s.freeze_at ? nlohmann::json(*s.freeze_at) : nlohmann::json(nullptr);
    j["window"] = s.window ? nlohmann::json(*s.window) : nlohmann::json(nullptr);
    j["replay_window"] = s.replay_window ? nlohmann::json(*s.replay_window) : nlohmann::json(nullptr);
    j["runtime_s"] = s.runtime_s;
    j["backend"] = s.backend;

    auto harmonics = nlohmann::ordered_json::array();
    for (const auto& h : s.harmonics) {
        nlohmann::ordered_json hj;
        hj["freq_hz"] = h.freq_hz;
        hj["omega"] = h.omega;
        hj["before"] = num(h.before);
        hj["after"] = h.after ? num(*h.after) : nlohmann::json(nullptr);
        hj["replay"] = h.replay ? num(*h.replay) : nlohmann::json(nullptr);
        hj["attenuation_db"] = (h.after && h.before > 0.0 && *h.after > 0.0)
                                   ? nlohmann::json(20.0 * std::log10(*h.after / h.before))
                                   : nlohmann::json(nullptr);
        harmonics.push_back(hj);
    }
    j["harmonics"] = harmonics;

    nlohmann::ordered_json errors;
    errors["plant_relative"] = num(s.plant_relative_error);
    errors["theta_A_relative"] = num(s.theta_A_error);
    errors["theta_B_relative"] = num(s.theta_B_error);
    j["errors"] = errors;

    nlohmann::ordered_json residue;
    residue["theta_M_norm"] = num(s.theta_M_norm);
    residue["theta_R_norm"] = num(s.theta_R_norm);
    residue["ratio"] = s.theta_R_norm > 0.0 ? num(s.theta_M_norm / s.theta_R_norm) : nlohmann::json(nullptr);
    residue["target"] = num(s.residue_factor);
    j["residue"] = residue;

    nlohmann::ordered_json proj;
    proj["A"] = s.projections_A;
    proj["B"] = s.projections_B;
    j["projections"] = proj;
    j["assumption_H"] = s.assumption_H;

    nlohmann::ordered_json params;
    params["theta_A"] = vec(s.estimator.theta_A);
    params["theta_B"] = vec(s.estimator.theta_B);
    params["theta_M"] = vec(s.estimator.theta_M);
    params["theta_D"] = vec(s.theta_D);
    params["theta_R"] = vec(s.theta_R);
    params["true_a"] = vec(s.truth.a.coeffs());
    params["true_b"] = vec(s.truth.b.coeffs());
    j["parameters"] = params;
    return j.dump(2) + "\n";
}

void write_spectrum(std::ostream& out, const std::vector<SpectrumRow>& rows) {
    out << "harmonic,freq_hz,before,after,attenuation_db\n";
    for (const auto& r : rows) {
        std::string line = std::to_string(r.harmonic) + ',' + format_double(r.freq_hz) + ',' + format_double(r.before) +
                           ',' + format_double(r.after) + ',';
        if (r.before > 0.0 && r.after > 0.0) line += format_double(20.0 * std::log10(r.after / r.before));
        out << line << '\n';
    }
}

void write_feedforward(std::ostream& out, const Eigen::VectorXd& theta_D, const DisturbanceSpec& dist) {
    if (!dist.period()) throw WindowingError("feedforward export: harmonics have no common period");
    out << "k,t_s,u_A\n";
    for (std::int64_t k = 0; k < *dist.period(); ++k) {
        const double uA = disturbance_value(theta_D, dist, k);
        out << k << ',' << format_double(static_cast<double>(k) * dist.sample_period()) << ',' << format_double(uA)
            << '\n';
    }
}

void write_freqresp(std::ostream& out, const lti::TransferFunction& truth, const lti::Polynomial& a_hat,
                    const lti::Polynomial& b_hat, const DisturbanceSpec& dist, std::size_t points, double f_min_hz) {
    const double T = dist.sample_period();
    const double f_max = 0.499 / T;
    std::vector<std::pair<double, bool>> freqs;
    for (std::size_t i = 0; i < points; ++i) {
        const double t = points > 1 ? static_cast<double>(i) / static_cast<double>(points - 1) : 0.0;
        freqs.emplace_back(f_min_hz * std::pow(f_max / f_min_hz, t), false);
    }
    for (double w : dist.omegas()) freqs.emplace_back(w / kTwoPi, true);
    std::stable_sort(freqs.begin(), freqs.end());

    out << "freq_hz,true_mag,true_phase,est_mag,est_phase,compensated\n";
    for (const auto& [f, comp] : freqs) {
        const double wT = kTwoPi * f * T;
        const auto g = truth.b.evaluate(wT) / truth.a.evaluate(wT);
        const auto h = b_hat.evaluate(wT) / a_hat.evaluate(wT);
        out << format_double(f) << ',' << format_double(std::abs(g)) << ',' << format_double(std::arg(g)) << ','
            << format_double(std::abs(h)) << ',' << format_double(std::arg(h)) << ',' << (comp ? 1 : 0) << '\n';
    }
}

} // namespace dafc::io

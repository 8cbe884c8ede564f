#pragma once

// On-disk formats consumed by the plotting scripts. Column order and JSON
// keys are fixed; docs/trace_format.md is the reference.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "dafc/lti.hpp"
#include "dafc/regressor.hpp"
#include "dafc/simulator.hpp"

namespace dafc::io {

/// k,e,u,u_A,eps0,theta_M_norm,proj_A,proj_B, then theta_A_1..n_A,
/// theta_B_1..n_A, theta_M_1..2n, theta_D_1..2n.
std::vector<std::string> trace_columns(std::size_t n_a, std::size_t harmonics);

/// Shortest representation that parses back to the same double.
std::string format_double(double x);

/// Streams records as CSV rows after writing the header.
class TraceWriter {
public:
    TraceWriter(std::ostream& out, std::size_t n_a, std::size_t harmonics);
    void write(const TraceRecord& r);

private:
    std::ostream& out_;
    std::size_t n_a_;
    std::size_t harmonics_;
    std::string line_;
};

void write_trace(std::ostream& out, const std::vector<TraceRecord>& records, std::size_t n_a, std::size_t harmonics);

/// Parses a trace written by TraceWriter. Throws ParseError (with line) on
/// a malformed header or row.
std::vector<TraceRecord> read_trace(std::istream& in);

/// JSON document with per-harmonic before/after/replay amplitudes, parameter
/// errors, projection counts and runtime. Non-finite numbers become null.
std::string summary_json(const RunSummary& s);

struct SpectrumRow {
    std::size_t harmonic = 0;  ///< 1-based
    double freq_hz = 0.0;
    double before = 0.0;
    double after = 0.0;
};

/// harmonic,freq_hz,before,after,attenuation_db
void write_spectrum(std::ostream& out, const std::vector<SpectrumRow>& rows);

/// One fundamental period of the learned feedforward u_A = theta_D^T phi_R(k):
/// k,t_s,u_A
void write_feedforward(std::ostream& out, const Eigen::VectorXd& theta_D, const DisturbanceSpec& dist);

/// Frequency responses of the true and identified B/A on a log grid from
/// f_min to just below Nyquist, plus one row at each compensation frequency:
/// freq_hz,true_mag,true_phase,est_mag,est_phase,compensated
void write_freqresp(std::ostream& out, const lti::TransferFunction& truth, const lti::Polynomial& a_hat,
                    const lti::Polynomial& b_hat, const DisturbanceSpec& dist, std::size_t points = 400,
                    double f_min_hz = 1.0);

} // namespace dafc::io

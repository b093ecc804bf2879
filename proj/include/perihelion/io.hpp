#ifndef PERIHELION_IO_HPP
#define PERIHELION_IO_HPP

#include "ephemeris.hpp"
#include "errors.hpp"
#include "gr_orbit.hpp"
#include "observation.hpp"
#include "types.hpp"
#include "validation.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#ifndef PERIHELION_VERSION
#define PERIHELION_VERSION "unknown"
#endif

namespace perihelion::io {

inline constexpr const char* trajectory_header = "t_s,x_m,y_m,z_m,vx,vy,vz,r_m,phi_rad";
inline constexpr const char* sweep_header = "phi1_0_rad,phi3_0_rad,alpha_deg";

/// Shortest text that reads back to the same double, so reruns produce identical files.
inline std::string num(double v) {
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

/// One row per sample; phi is the in-plane angle atan2(y, x) unwound along the rows.
inline void write_trajectory_csv(std::ostream& out, const std::vector<WorldlineSample>& samples) {
    out << trajectory_header << '\n';
    double prev = 0.0, turns = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const double raw = std::atan2(s.x.y(), s.x.x());
        if (i > 0) {
            if (raw - prev > pi) turns -= two_pi;
            if (raw - prev < -pi) turns += two_pi;
        }
        prev = raw;
        out << num(s.t) << ',' << num(s.x.x()) << ',' << num(s.x.y()) << ',' << num(s.x.z()) << ','
            << num(s.v.x()) << ',' << num(s.v.y()) << ',' << num(s.v.z()) << ',' << num(s.x.norm()) << ','
            << num(raw + turns) << '\n';
    }
}

struct SweepRow {
    double phi1_0 = 0.0;
    double phi3_0 = 0.0;
    double alpha_deg = 0.0;
};

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << sweep_header << '\n';
    for (const auto& r : rows) out << num(r.phi1_0) << ',' << num(r.phi3_0) << ',' << num(r.alpha_deg) << '\n';
}

inline nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

inline nlohmann::json to_json(const obs::AdvanceReport& r) {
    auto sighting = [](const obs::Sighting& s) {
        return nlohmann::json{
            {"mercury",
             {{"l", s.mercury.l},
              {"xi_rad", s.mercury.xi},
              {"t_s", s.mercury.t},
              {"r_m", s.mercury.r},
              {"phi_rad", s.mercury.phi},
              {"x_m", vec_json(s.mercury.x)}}},
            {"earth",
             {{"t_s", s.reception.earth.t},
              {"xi_rad", s.reception.earth.xi},
              {"r_m", s.reception.earth.r},
              {"phi_rad", s.reception.earth.phi},
              {"x_m", vec_json(s.reception.earth.x)}}},
            {"light_time",
             {{"delay_s", s.reception.delay_s},
              {"residual_m", s.reception.residual_m},
              {"iterations", s.reception.iterations}}},
            {"direction_m", vec_json(s.direction)}};
    };
    return {{"config",
             {{"phi1_0_rad", r.config.phi1_0},
              {"phi3_0_rad", r.config.phi3_0},
              {"l1", r.config.l1},
              {"l2", r.config.l2},
              {"mode", obs::to_string(r.config.mode)}}},
            {"inclination_rad", r.inclination},
            {"first", sighting(r.first)},
            {"second", sighting(r.second)},
            {"alpha_rad", r.alpha_rad},
            {"alpha_deg", r.alpha_deg()},
            {"alpha_arcsec", r.alpha_arcsec()},
            {"alpha_expanded_rad", r.alpha_expanded_rad},
            {"window_ok", r.window_ok},
            {"span_s", r.span_s},
            {"alpha_deg_per_century", r.alpha_deg_per_century}};
}

inline nlohmann::json to_json(const gr::PrecessionComparison& c) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : c.points) {
        pts.push_back({{"delta_rad", p.delta},
                       {"lhs", p.lhs},
                       {"rhs_first", p.rhs_first},
                       {"remainder", p.remainder},
                       {"residual", p.residual},
                       {"quadrature_error", p.quadrature_error}});
    }
    return {{"k", c.k},
            {"e", c.e},
            {"max_residual", c.max_residual},
            {"max_remainder", c.max_remainder},
            {"remainder_bound", c.remainder_bound},
            {"points", pts}};
}

inline nlohmann::json to_json(const validation::CheckResult& r) {
    return {{"id", r.id},         {"name", r.name},           {"passed", r.passed}, {"measured", r.measured},
            {"expected", r.expected}, {"tolerance", r.tolerance}, {"detail", r.detail}};
}

struct RunManifest {
    std::vector<std::string> command;
    nlohmann::json config; ///< resolved ephemeris and options
    std::string version = PERIHELION_VERSION;
    std::vector<std::string> outputs;
    double wall_clock_s = 0.0;
};

inline nlohmann::json to_json(const RunManifest& m) {
    return {{"command", m.command},
            {"config", m.config},
            {"tool_version", m.version},
            {"outputs", m.outputs},
            {"wall_clock_s", m.wall_clock_s}};
}

/// Writes text to `path`; throws Error when the file cannot be written.
inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write '" + path + "'");
    f << text;
    if (!f) throw Error("write failed for '" + path + "'");
}

} // namespace perihelion::io

#endif // PERIHELION_IO_HPP

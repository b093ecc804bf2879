#ifndef PERIHELION_EPHEMERIS_HPP
#define PERIHELION_EPHEMERIS_HPP

#include "errors.hpp"
#include "types.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace perihelion {

struct PhysicalConstants {
    double c = 299792458.0; ///< m/s
    double G = 6.673e-11;   ///< m^3 kg^-1 s^-2; documentation only, m10*G comes from Kepler's law

    bool operator==(const PhysicalConstants&) const = default;
};

/// Orbital elements of one body. Index 1..9 are the planets, 10 is the Sun.
struct PlanetElements {
    int index = 0;
    std::string name;
    double a = 0.0;                ///< semi-major axis, m
    double e = 0.0;                ///< eccentricity
    double gm_over_c2 = 0.0;       ///< omega^2 a^3 / c^2, m
    double inclination = 0.0;      ///< rad, relative to the Earth orbit plane
    double perihelion_angle = 0.0; ///< rad
    double mass_ratio = 0.0;       ///< m_k / m_sun
    std::optional<double> omega_over_c; ///< m^-1; overrides the value derived from gm_over_c2

    bool is_sun() const { return index == sun_index; }
    static constexpr int sun_index = 10;

    bool operator==(const PlanetElements&) const = default;
};

struct EphemerisTable {
    PhysicalConstants constants;
    std::vector<PlanetElements> bodies;

    const PlanetElements& body(int index) const {
        auto it = std::find_if(bodies.begin(), bodies.end(),
                               [&](const PlanetElements& p) { return p.index == index; });
        if (it == bodies.end()) throw DomainError("no body with index " + std::to_string(index));
        return *it;
    }

    /// Case-insensitive lookup by name ("mercury", "Earth", ...).
    const PlanetElements& body(const std::string& name) const {
        auto lower = [](std::string s) {
            std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
            return s;
        };
        const std::string key = lower(name);
        for (const auto& p : bodies) {
            if (lower(p.name) == key) return p;
        }
        throw DomainError("unknown body '" + name + "'");
    }

    bool operator==(const EphemerisTable&) const = default;
};

namespace body {
inline constexpr int mercury = 1, venus = 2, earth = 3, mars = 4, jupiter = 5, saturn = 6,
                     uranus = 7, neptune = 8, pluto = 9, sun = 10;
}

/// Mean angular frequency omega = c sqrt(gm_over_c2 / a^3), rad/s.
inline double angular_frequency(const PlanetElements& p, double c) {
    if (!(p.a > 0.0)) throw DomainError("angular_frequency: a must be positive for " + p.name);
    if (p.omega_over_c) return *p.omega_over_c * c;
    return c * std::sqrt(p.gm_over_c2 / (p.a * p.a * p.a));
}

inline double orbital_period(const PlanetElements& p, double c) {
    return two_pi / angular_frequency(p, c);
}

/// omega^2 a^2 / c^2, the small parameter of every relativistic correction.
inline double velocity_parameter(const PlanetElements& p, double c) {
    const double wa = angular_frequency(p, c) * p.a / c;
    return wa * wa;
}

/// Throws ConfigError naming the offending field.
inline void validate(const PlanetElements& p) {
    auto fail = [&](const std::string& field, const std::string& what) {
        throw ConfigError("body " + std::to_string(p.index) + " (" + p.name + "): field '" + field +
                          "' " + what);
    };
    if (p.index < 1) fail("index", "must be >= 1");
    if (!std::isfinite(p.e) || p.e < 0.0 || p.e >= 1.0) fail("e", "must satisfy 0 <= e < 1");
    if (!std::isfinite(p.gm_over_c2) || !(p.gm_over_c2 > 0.0)) fail("gm_over_c2_m", "must be > 0");
    if (!p.is_sun()) {
        if (!std::isfinite(p.a) || !(p.a > 0.0)) fail("a_m", "must be > 0");
        if (p.omega_over_c && !(*p.omega_over_c > 0.0)) fail("omega_over_c_per_m", "must be > 0");
    }
    if (!(p.mass_ratio >= 0.0)) fail("mass_ratio", "must be >= 0");
    if (p.is_sun() && p.mass_ratio != 1.0) fail("mass_ratio", "must be 1 for the Sun");
}

inline void validate(const EphemerisTable& t) {
    if (!(t.constants.c > 0.0)) throw ConfigError("constants: field 'c' must be > 0");
    if (!(t.constants.G > 0.0)) throw ConfigError("constants: field 'G' must be > 0");
    std::vector<int> seen;
    for (const auto& b : t.bodies) {
        if (std::find(seen.begin(), seen.end(), b.index) != seen.end()) {
            throw ConfigError("duplicate body index " + std::to_string(b.index));
        }
        seen.push_back(b.index);
        validate(b);
    }
}

/// Built-in planetary table (Misner, Thorne & Wheeler, "Gravitation"). Mass ratios other than
/// Jupiter's and the Earth's are standard IAU values; nothing here depends on them.
inline EphemerisTable load_default() {
    EphemerisTable t;
    auto add = [&](int k, const char* name, double a, double e, double gm, double mass_ratio) {
        PlanetElements p;
        p.index = k;
        p.name = name;
        p.a = a;
        p.e = e;
        p.gm_over_c2 = gm;
        p.mass_ratio = mass_ratio;
        t.bodies.push_back(p);
    };
    add(1, "Mercury", 0.5791e11, 0.21, 1477.0, 1.660e-7);
    add(2, "Venus", 1.0821e11, 0.007, 1477.0, 2.448e-6);
    add(3, "Earth", 1.4960e11, 0.017, 1477.0, 3.01e-6);
    add(4, "Mars", 2.2794e11, 0.093, 1477.0, 3.227e-7);
    add(5, "Jupiter", 7.783e11, 0.048, 1478.0, 0.95e-3);
    add(6, "Saturn", 14.27e11, 0.056, 1477.0, 2.858e-4);
    add(7, "Uranus", 28.69e11, 0.047, 1476.0, 4.366e-5);
    add(8, "Neptune", 44.98e11, 0.009, 1478.0, 5.151e-5);
    add(9, "Pluto", 59.00e11, 0.249, 1469.0, 6.6e-9);
    add(10, "Sun", 0.0, 0.0, 1477.0, 1.0);
    t.bodies[0].inclination = deg_to_rad(7.0);
    return t;
}

/// Copy of the table with c multiplied by `factor` while every omega and a stay fixed, so the
/// tabulated omega^2 a^3 / c^2 shrinks by factor^2. Used for classical-limit studies.
inline EphemerisTable with_c_scale(EphemerisTable t, double factor) {
    if (!(factor > 0.0)) throw DomainError("c scale must be positive");
    t.constants.c *= factor;
    for (auto& b : t.bodies) {
        b.gm_over_c2 /= factor * factor;
        if (b.omega_over_c) *b.omega_over_c /= factor;
    }
    return t;
}

// ---------------------------------------------------------------------------------------
// Config file (JSON). Schema:
//   { "constants": { "c": <m/s>, "G": <SI> },
//     "bodies": [ { "index": k, "name": "...", "a_m": ..., "e": ..., "gm_over_c2_m": ...,
//                   "inclination_rad": ..., "perihelion_angle_rad": ..., "mass_ratio": ...,
//                   "omega_over_c_per_m": ... (optional) }, ... ] }
// Bodies are matched by index; present fields override the defaults, unknown indices add a
// body (then name, a_m, e and gm_over_c2_m are required).
// ---------------------------------------------------------------------------------------

namespace detail {

inline int line_of_offset(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

inline double number_field(const nlohmann::json& obj, const char* key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + ": field '" + key + "' must be a number");
    return v.get<double>();
}

inline void merge_body(PlanetElements& p, const nlohmann::json& j, const std::string& where) {
    static const char* known[] = {"index", "name", "a_m", "e", "gm_over_c2_m", "inclination_rad",
                                  "perihelion_angle_rad", "mass_ratio", "omega_over_c_per_m"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find_if(std::begin(known), std::end(known),
                         [&](const char* k) { return it.key() == k; }) == std::end(known)) {
            throw ConfigError(where + ": unknown field '" + it.key() + "'");
        }
    }
    if (j.contains("name")) {
        if (!j["name"].is_string()) throw ConfigError(where + ": field 'name' must be a string");
        p.name = j["name"].get<std::string>();
    }
    if (j.contains("a_m")) p.a = number_field(j, "a_m", where);
    if (j.contains("e")) p.e = number_field(j, "e", where);
    if (j.contains("gm_over_c2_m")) p.gm_over_c2 = number_field(j, "gm_over_c2_m", where);
    if (j.contains("inclination_rad")) p.inclination = number_field(j, "inclination_rad", where);
    if (j.contains("perihelion_angle_rad")) p.perihelion_angle = number_field(j, "perihelion_angle_rad", where);
    if (j.contains("mass_ratio")) p.mass_ratio = number_field(j, "mass_ratio", where);
    if (j.contains("omega_over_c_per_m")) {
        if (j["omega_over_c_per_m"].is_null()) p.omega_over_c.reset();
        else p.omega_over_c = number_field(j, "omega_over_c_per_m", where);
    }
}

} // namespace detail

/// Parse config text and merge it over `base`. `source` names the input in diagnostics.
inline EphemerisTable parse_config(const std::string& text, EphemerisTable base = load_default(),
                                   const std::string& source = "<config>") {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& ex) {
        throw ConfigError(source + ":" + std::to_string(detail::line_of_offset(text, ex.byte)) +
                          ": parse error: " + ex.what());
    }
    if (!j.is_object()) throw ConfigError(source + ": top level must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() != "constants" && it.key() != "bodies") {
            throw ConfigError(source + ": unknown top-level field '" + it.key() + "'");
        }
    }
    if (j.contains("constants")) {
        const auto& c = j["constants"];
        const std::string where = source + ": constants";
        if (!c.is_object()) throw ConfigError(where + " must be an object");
        for (auto it = c.begin(); it != c.end(); ++it) {
            if (it.key() != "c" && it.key() != "G") throw ConfigError(where + ": unknown field '" + it.key() + "'");
        }
        if (c.contains("c")) base.constants.c = detail::number_field(c, "c", where);
        if (c.contains("G")) base.constants.G = detail::number_field(c, "G", where);
    }
    if (j.contains("bodies")) {
        const auto& list = j["bodies"];
        if (!list.is_array()) throw ConfigError(source + ": 'bodies' must be an array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto& b = list[i];
            const std::string where = source + ": bodies[" + std::to_string(i) + "]";
            if (!b.is_object()) throw ConfigError(where + " must be an object");
            if (!b.contains("index") || !b["index"].is_number_integer()) {
                throw ConfigError(where + ": field 'index' (integer) is required");
            }
            const int k = b["index"].get<int>();
            auto it = std::find_if(base.bodies.begin(), base.bodies.end(),
                                   [&](const PlanetElements& p) { return p.index == k; });
            if (it == base.bodies.end()) {
                for (const char* req : {"name", "a_m", "e", "gm_over_c2_m"}) {
                    if (!b.contains(req)) throw ConfigError(where + ": new body requires field '" + std::string(req) + "'");
                }
                PlanetElements p;
                p.index = k;
                detail::merge_body(p, b, where);
                base.bodies.push_back(p);
            } else {
                detail::merge_body(*it, b, where);
            }
        }
    }
    std::sort(base.bodies.begin(), base.bodies.end(),
              [](const PlanetElements& l, const PlanetElements& r) { return l.index < r.index; });
    validate(base);
    return base;
}

inline EphemerisTable load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open ephemeris file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), load_default(), path);
}

inline nlohmann::json to_json(const EphemerisTable& t) {
    nlohmann::json j;
    j["constants"] = {{"c", t.constants.c}, {"G", t.constants.G}};
    j["bodies"] = nlohmann::json::array();
    for (const auto& b : t.bodies) {
        nlohmann::json o = {{"index", b.index},
                            {"name", b.name},
                            {"a_m", b.a},
                            {"e", b.e},
                            {"gm_over_c2_m", b.gm_over_c2},
                            {"inclination_rad", b.inclination},
                            {"perihelion_angle_rad", b.perihelion_angle},
                            {"mass_ratio", b.mass_ratio}};
        if (b.omega_over_c) o["omega_over_c_per_m"] = *b.omega_over_c;
        j["bodies"].push_back(o);
    }
    return j;
}

inline std::string serialize(const EphemerisTable& t) { return to_json(t).dump(2) + "\n"; }

} // namespace perihelion

#endif // PERIHELION_EPHEMERIS_HPP

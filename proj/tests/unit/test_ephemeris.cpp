#include <perihelion/ephemeris.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace perihelion;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << text;
    return path.string();
}

} // namespace

TEST(Ephemeris, DefaultTableValues) {
    const auto t = load_default();
    ASSERT_EQ(t.bodies.size(), 10u);
    EXPECT_DOUBLE_EQ(t.body(body::mercury).a, 0.5791e11);
    EXPECT_DOUBLE_EQ(t.body(body::mercury).gm_over_c2, 1477.0);
    EXPECT_DOUBLE_EQ(t.body(body::venus).e, 0.007);
    EXPECT_DOUBLE_EQ(t.body(body::pluto).a, 59.00e11);
    EXPECT_DOUBLE_EQ(t.body(body::pluto).e, 0.249);
    EXPECT_DOUBLE_EQ(t.body(body::jupiter).mass_ratio, 0.95e-3);
    EXPECT_DOUBLE_EQ(t.body(body::earth).mass_ratio, 3.01e-6);
    EXPECT_DOUBLE_EQ(t.body(body::sun).mass_ratio, 1.0);
    EXPECT_NEAR(rad_to_deg(t.body("mercury").inclination), 7.0, 1e-12);
    for (const auto& b : t.bodies) EXPECT_EQ(b.perihelion_angle, 0.0);
    EXPECT_NO_THROW(validate(t));
}

TEST(Ephemeris, AngularFrequencies) {
    const auto t = load_default();
    const double c = t.constants.c;
    const double w1 = angular_frequency(t.body(body::mercury), c);
    const double w3 = angular_frequency(t.body(body::earth), c);
    EXPECT_NEAR(w1 / c, 275.8e-17, 0.05e-17);
    EXPECT_NEAR(w3 / c, 66.41e-17, 0.01e-17);
    EXPECT_NEAR(orbital_period(t.body(body::earth), c) / orbital_period(t.body(body::mercury), c), 4.15, 0.005);
    // one Earth period is close to a sidereal year
    EXPECT_NEAR(orbital_period(t.body(body::earth), c) / 86400.0, 365.25, 0.5);
}

TEST(Ephemeris, VelocityParametersMatchPrintedList) {
    // omega^2 a^2 / c^2 to the digits printed for each planet
    const double printed[] = {2.6e-8, 1.4e-8, 9.9e-9, 6.5e-9, 1.9e-9, 1.04e-9, 5.1e-10, 3.3e-10, 2.5e-10};
    const double digit[] = {1e-9, 1e-9, 1e-10, 1e-10, 1e-10, 1e-11, 1e-11, 1e-11, 1e-11};
    const auto t = load_default();
    for (int k = 1; k <= 9; ++k) {
        const double x = velocity_parameter(t.body(k), t.constants.c);
        EXPECT_LT(x, 3e-8);
        EXPECT_LE(std::abs(x - printed[k - 1]), 0.5 * digit[k - 1] * (1 + 1e-9)) << t.body(k).name;
    }
}

TEST(Ephemeris, SerializeRoundTrip) {
    const auto t = load_default();
    EXPECT_EQ(parse_config(serialize(t)), t);
    auto u = t;
    u.bodies[2].omega_over_c = 66.41e-17;
    EXPECT_EQ(parse_config(serialize(u)), u);
}

TEST(Ephemeris, IdempotentOverride) {
    const auto path = write_temp("perihelion_idem.json", R"({"bodies": [{"index": 1, "e": 0.21}]})");
    EXPECT_EQ(load_file(path), load_default());
}

TEST(Ephemeris, OverrideChangesOnlyNamedField) {
    const auto t = parse_config(R"({"constants": {"c": 3e8}, "bodies": [{"index": 4, "e": 0.1}]})");
    EXPECT_EQ(t.constants.c, 3e8);
    EXPECT_EQ(t.body(body::mars).e, 0.1);
    EXPECT_EQ(t.body(body::mars).a, load_default().body(body::mars).a);
}

TEST(Ephemeris, RejectsHyperbolicEccentricity) {
    try {
        parse_config(R"({"bodies": [{"index": 2, "e": 1.2}]})");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& ex) {
        EXPECT_NE(std::string(ex.what()).find("'e'"), std::string::npos);
    }
    EXPECT_THROW(parse_config(R"({"bodies": [{"index": 2, "a_m": -1}]})"), ConfigError);
}

TEST(Ephemeris, ParseErrorReportsLine) {
    try {
        parse_config("{\n  \"bodies\": [\n    {\"index\": 1,, }\n  ]\n}", load_default(), "bad.json");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& ex) {
        EXPECT_NE(std::string(ex.what()).find("bad.json:3"), std::string::npos) << ex.what();
    }
}

TEST(Ephemeris, UnknownFieldAndWrongTypeNamed) {
    try {
        parse_config(R"({"bodies": [{"index": 1, "eccentricity": 0.2}]})");
        FAIL();
    } catch (const ConfigError& ex) {
        EXPECT_NE(std::string(ex.what()).find("eccentricity"), std::string::npos);
    }
    try {
        parse_config(R"({"bodies": [{"index": 1, "a_m": "big"}]})");
        FAIL();
    } catch (const ConfigError& ex) {
        EXPECT_NE(std::string(ex.what()).find("a_m"), std::string::npos);
    }
}

TEST(Ephemeris, FictitiousCircularBodyAccepted) {
    const auto t = parse_config(
        R"({"bodies": [{"index": 11, "name": "Vulcan", "a_m": 1e11, "e": 0, "gm_over_c2_m": 1477}]})");
    const auto& v = t.body("vulcan");
    EXPECT_EQ(v.e, 0.0);
    EXPECT_NEAR(velocity_parameter(v, t.constants.c), 1477.0 / 1e11, 1e-20);
    EXPECT_THROW(parse_config(R"({"bodies": [{"index": 12, "a_m": 1e11}]})"), ConfigError);
}

TEST(Ephemeris, SunMassRatioMustBeOne) {
    EXPECT_THROW(parse_config(R"({"bodies": [{"index": 10, "mass_ratio": 0.5}]})"), ConfigError);
}

TEST(Ephemeris, CScaleKeepsFrequencies) {
    const auto t = load_default();
    const auto s = with_c_scale(t, 10.0);
    EXPECT_DOUBLE_EQ(s.constants.c, 10.0 * t.constants.c);
    for (int k = 1; k <= 9; ++k) {
        EXPECT_NEAR(angular_frequency(s.body(k), s.constants.c) / angular_frequency(t.body(k), t.constants.c),
                    1.0, 1e-14);
        EXPECT_NEAR(velocity_parameter(s.body(k), s.constants.c) / velocity_parameter(t.body(k), t.constants.c),
                    0.01, 1e-14);
    }
}

TEST(Ephemeris, ShippedConfigsLoad) {
    for (const char* name : {"default.json", "printed_frequencies.json"}) {
        const std::string path = std::string(PERIHELION_CONFIG_DIR) + "/" + name;
        EXPECT_NO_THROW(load_file(path)) << path;
    }
    EXPECT_EQ(load_file(std::string(PERIHELION_CONFIG_DIR) + "/default.json"), load_default());
}

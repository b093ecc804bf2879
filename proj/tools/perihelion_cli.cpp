// perihelion: command-line front end for the orbit, precession and observation pipelines.
//
// Exit codes: 0 ok, 1 failed check or runtime error, 2 usage or config error.

#include <perihelion/ephemeris.hpp>
#include <perihelion/gr_orbit.hpp>
#include <perihelion/io.hpp>
#include <perihelion/observation.hpp>
#include <perihelion/rcn_orbit.hpp>
#include <perihelion/validation.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

using namespace perihelion;
using nlohmann::json;

constexpr int exit_ok = 0;
constexpr int exit_failure = 1;
constexpr int exit_usage = 2;

struct Options {
    std::string ephemeris;
    double c_scale = 1.0;
    std::string manifest;
};

struct Context {
    EphemerisTable table;
    io::RunManifest manifest;
};

EphemerisTable resolve_table(const Options& o) {
    EphemerisTable t = o.ephemeris.empty() ? load_default() : load_file(o.ephemeris);
    return o.c_scale == 1.0 ? t : with_c_scale(std::move(t), o.c_scale);
}

void print_row(const char* label, double v, const char* unit = "") {
    std::printf("  %-28s %.10g %s\n", label, v, unit);
}

int cmd_precession(Context& ctx, const std::string& planet, const std::string& model, bool fractional) {
    const auto& p = ctx.table.body(planet);
    const auto& earth = ctx.table.body(body::earth);
    const double c = ctx.table.constants.c;
    const auto mode = fractional ? rcn::CenturyMode::earth_years : rcn::CenturyMode::whole_periods;
    const double periods = rcn::periods_per_century(p, earth, c, mode);
    double gamma = 0, omg = 0, per_rad = 0;
    if (model == "rcn") {
        const auto o = rcn::orbit_from_elements(p, c);
        gamma = o.gamma;
        omg = o.one_minus_gamma;
        per_rad = o.precession_per_radian();
    } else {
        const auto g = gr::gr_precession(p, earth, c, mode);
        gamma = g.gamma;
        omg = g.one_minus_gamma;
        per_rad = g.per_radian;
    }
    std::printf("%s, model %s\n", p.name.c_str(), model.c_str());
    print_row("gamma", gamma);
    print_row("1 - gamma", omg);
    print_row("advance per period", rcn::advance_arcsec(per_rad, 1.0), "arcsec");
    print_row("periods per century", periods);
    print_row("advance per century", rcn::advance_arcsec(per_rad, periods), "arcsec");
    ctx.manifest.config["options"] = {{"planet", p.name}, {"model", model}, {"fractional_periods", fractional}};
    return exit_ok;
}

std::vector<WorldlineSample> rcn_samples(const rcn::RcnOrbit& o, double t_end, int samples, bool integrate) {
    if (integrate) {
        ode::StepControl ctrl;
        ctrl.rtol = 1e-12;
        ctrl.atol = 1e-14;
        return rcn::integrate_orbit(o, rcn::state_at_time(o, 0.0), t_end, ctrl).samples;
    }
    std::vector<WorldlineSample> out;
    for (int i = 0; i <= samples; ++i) out.push_back(rcn::state_at_time(o, t_end * i / samples));
    return out;
}

std::vector<WorldlineSample> geodesic_samples(const gr::ProperKeplerOrbit& o, double c, double tau_end) {
    ode::StepControl ctrl;
    ctrl.rtol = 1e-12;
    ctrl.atol = 1e-14;
    const auto tr = gr::integrate_geodesic(o, c, tau_end, ctrl);
    std::vector<WorldlineSample> out;
    for (std::size_t i = 0; i < tr.tau.size(); ++i) out.push_back({tr.t[i], tr.x[i], tr.u[i] * (c / tr.u0[i])});
    return out;
}

std::vector<WorldlineSample> proper_kepler_samples(const gr::ProperKeplerOrbit& o, double c, double tau_end,
                                                   int samples) {
    std::vector<WorldlineSample> out;
    double t = 0.0, tau_prev = 0.0;
    for (int i = 0; i <= samples; ++i) {
        const double tau = tau_end * i / samples;
        const auto st = gr::state_at_tau(o, tau);
        // coordinate time accumulated panel by panel
        if (i > 0) t = gr::t_of_tau(o, c, tau, 0.0).value - gr::t_of_tau(o, c, tau_prev, 0.0).value + t;
        tau_prev = tau;
        const double T = gr::dt_dtau(st.x.norm(), st.w.squaredNorm(), o.m10G, c);
        out.push_back({t, st.x, st.w / T});
    }
    return out;
}

int cmd_orbit(Context& ctx, const std::string& planet, const std::string& model, double periods, int samples,
              bool integrate, const std::string& output) {
    if (!(periods > 0.0)) throw DomainError("--periods must be positive");
    const auto& p = ctx.table.body(planet);
    const double c = ctx.table.constants.c;
    std::vector<WorldlineSample> rows;
    if (model == "rcn") {
        const auto o = rcn::orbit_from_elements(p, c);
        rows = rcn_samples(o, periods * o.period(), samples, integrate);
    } else {
        const auto o = gr::proper_kepler_from_elements(p, c);
        rows = model == "gr-geodesic" ? geodesic_samples(o, c, periods * o.period())
                                      : proper_kepler_samples(o, c, periods * o.period(), samples);
    }
    std::ostringstream csv;
    io::write_trajectory_csv(csv, rows);
    io::write_file(output, csv.str());
    ctx.manifest.outputs.push_back(output);
    ctx.manifest.config["options"] = {{"planet", p.name},       {"model", model},        {"periods", periods},
                                      {"samples", samples},     {"integrate", integrate}, {"output", output}};
    std::printf("%zu samples of %s (%s) written to %s\n", rows.size(), p.name.c_str(), model.c_str(),
                output.c_str());
    return exit_ok;
}

std::vector<io::SweepRow> sweep(const Context& ctx, obs::ObservedAdvanceConfig cfg, int n, unsigned threads) {
    std::vector<io::SweepRow> rows(static_cast<std::size_t>(n) * n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k; (k = next.fetch_add(1)) < rows.size();) {
            obs::ObservedAdvanceConfig c = cfg;
            c.phi1_0 = two_pi * static_cast<double>(k / n) / n;
            c.phi3_0 = two_pi * static_cast<double>(k % n) / n;
            rows[k] = {c.phi1_0, c.phi3_0, obs::advance_angle(c, ctx.table).alpha_deg()};
        }
    };
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return rows;
}

int cmd_observe(Context& ctx, const obs::ObservedAdvanceConfig& cfg, const std::string& output, bool as_json,
                int sweep_n, const std::string& sweep_output, unsigned threads) {
    json opts = {{"phi1_0_rad", cfg.phi1_0}, {"phi3_0_rad", cfg.phi3_0}, {"l1", cfg.l1},
                 {"l2", cfg.l2},             {"mode", obs::to_string(cfg.mode)}};
    if (sweep_n > 0) {
        if (sweep_output.empty()) throw ConfigError("--sweep needs --sweep-output");
        const auto rows = sweep(ctx, cfg, sweep_n, std::max(1u, threads));
        std::ostringstream csv;
        io::write_sweep_csv(csv, rows);
        io::write_file(sweep_output, csv.str());
        ctx.manifest.outputs.push_back(sweep_output);
        opts["sweep"] = sweep_n;
        opts["sweep_output"] = sweep_output;
        ctx.manifest.config["options"] = opts;
        const auto [lo, hi] = std::minmax_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
            return a.alpha_deg < b.alpha_deg;
        });
        std::printf("%zu configurations written to %s; alpha ranges %.6f .. %.6f deg\n", rows.size(),
                    sweep_output.c_str(), lo->alpha_deg, hi->alpha_deg);
        return exit_ok;
    }
    const auto rep = obs::advance_angle(cfg, ctx.table);
    const json j = io::to_json(rep);
    if (!output.empty()) {
        io::write_file(output, j.dump(2) + "\n");
        ctx.manifest.outputs.push_back(output);
        opts["output"] = output;
    }
    ctx.manifest.config["options"] = opts;
    if (as_json) {
        std::cout << j.dump(2) << '\n';
        return exit_ok;
    }
    const double a3 = ctx.table.body(body::earth).a;
    std::printf("Mercury perihelia l = %ld and %ld, light time %s\n", cfg.l1, cfg.l2, obs::to_string(cfg.mode).c_str());
    std::printf("  %-10s %14s %14s %14s %14s\n", "l", "t_s", "xi3_rad", "r3/a3", "phi3-phi3_0");
    for (const auto* s : {&rep.first, &rep.second}) {
        const auto& e = s->reception.earth;
        std::printf("  %-10ld %14.6e %14.6f %14.6f %14.6f\n", s->mercury.l, s->mercury.t, e.xi, e.r / a3,
                    wrap_two_pi(e.phi - cfg.phi3_0));
    }
    print_row("alpha", rep.alpha_deg(), "deg");
    print_row("alpha (component formula)", rad_to_deg(rep.alpha_expanded_rad), "deg");
    print_row("alpha per century", rep.alpha_deg_per_century, "deg");
    std::printf("  %-28s %s\n", "century window", rep.window_ok ? "ok" : "not satisfied");
    return exit_ok;
}

int cmd_validate(Context& ctx, bool quick, const std::string& output) {
    const auto results = validation::run_all(ctx.table, quick);
    int failed = 0;
    json arr = json::array();
    for (const auto& r : results) {
        std::printf("%s\n", validation::format_line(r).c_str());
        failed += r.passed ? 0 : 1;
        arr.push_back(io::to_json(r));
    }
    std::printf("%d of %zu checks failed\n", failed, results.size());
    if (!output.empty()) {
        io::write_file(output, arr.dump(2) + "\n");
        ctx.manifest.outputs.push_back(output);
    }
    ctx.manifest.config["options"] = {{"quick", quick}, {"output", output}};
    return failed == 0 ? exit_ok : exit_failure;
}

void emit_manifest(const Options& opt, const io::RunManifest& m) {
    std::fflush(stdout);
    const json j = io::to_json(m);
    std::string path = opt.manifest;
    if (path.empty() && !m.outputs.empty()) path = m.outputs.front() + ".manifest.json";
    if (path.empty()) {
        std::fprintf(stderr, "manifest: %s\n", j.dump().c_str());
        return;
    }
    io::write_file(path, j.dump(2) + "\n");
}

} // namespace

int main(int argc, char** argv) {
    const auto started = std::chrono::steady_clock::now();
    CLI::App app{"Perihelion advance under a retarded two-body law and under general relativity", "perihelion"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(PERIHELION_VERSION));

    Options opt;
    if (const char* env = std::getenv("PERIHELION_EPHEMERIS")) opt.ephemeris = env;
    app.add_option("--ephemeris", opt.ephemeris, "Ephemeris JSON (default: built-in table or $PERIHELION_EPHEMERIS)");
    app.add_option("--c-scale", opt.c_scale, "Multiply c by this factor with omega and a held fixed")
        ->check(CLI::PositiveNumber);
    app.add_option("--manifest", opt.manifest, "Manifest path (default: <first output>.manifest.json, else stderr)");

    const std::map<std::string, std::string> precession_models{{"rcn", "rcn"}, {"gr", "gr"}};
    const std::map<std::string, std::string> orbit_models{
        {"rcn", "rcn"}, {"gr-geodesic", "gr-geodesic"}, {"proper-kepler", "proper-kepler"}};

    std::string planet = "mercury", model = "rcn", output, sweep_output;
    bool fractional = false, integrate = false, as_json = false, quick = false;
    double periods = 1.0;
    int samples = 1000, sweep_n = 0;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    obs::ObservedAdvanceConfig cfg;
    std::string mode = "approx";

    auto* prec = app.add_subcommand("precession", "Perihelion advance per period and per century");
    prec->add_option("planet", planet, "Body name")->capture_default_str();
    prec->add_option("--model", model, "rcn or gr")->transform(CLI::CheckedTransformer(precession_models))
        ->capture_default_str();
    prec->add_flag("--fractional", fractional, "Use exactly 100 Earth years instead of whole periods");

    auto* orbit = app.add_subcommand("orbit", "Write a trajectory CSV");
    orbit->add_option("planet", planet, "Body name")->capture_default_str();
    orbit->add_option("--model", model, "rcn, gr-geodesic or proper-kepler")
        ->transform(CLI::CheckedTransformer(orbit_models))
        ->capture_default_str();
    orbit->add_option("--periods", periods, "Span in orbital periods")->capture_default_str();
    orbit->add_option("--samples", samples, "Rows for closed-form models")->check(CLI::PositiveNumber)
        ->capture_default_str();
    orbit->add_flag("--integrate", integrate, "rcn: integrate the force law instead of the closed form");
    orbit->add_option("-o,--output", output, "CSV path")->required();

    auto* observe = app.add_subcommand("observe", "Advance angle of Mercury seen from the Earth");
    observe->add_option("--l1", cfg.l1, "First perihelion index")->capture_default_str();
    observe->add_option("--l2", cfg.l2, "Second perihelion index")->capture_default_str();
    observe->add_option("--phi1", cfg.phi1_0, "Mercury perihelion angle, rad")->capture_default_str();
    observe->add_option("--phi3", cfg.phi3_0, "Earth perihelion angle, rad")->capture_default_str();
    observe->add_option("--mode", mode, "Light time: approx or exact")
        ->check(CLI::IsMember({"approx", "exact"}))
        ->capture_default_str();
    observe->add_option("-o,--output", output, "Write the report JSON here");
    observe->add_flag("--json", as_json, "Print the report JSON instead of the table");
    observe->add_option("--sweep", sweep_n, "Sweep an N x N grid of both perihelion angles")
        ->check(CLI::PositiveNumber);
    observe->add_option("--sweep-output", sweep_output, "CSV path for --sweep");
    observe->add_option("--threads", threads, "Worker threads for --sweep")->check(CLI::PositiveNumber);

    auto* validate = app.add_subcommand("validate", "Run the acceptance checks");
    validate->add_flag("--quick", quick, "Fewer samples");
    validate->add_option("-o,--output", output, "Write the results JSON here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    Context ctx;
    try {
        ctx.table = resolve_table(opt);
        ctx.manifest.command.assign(argv, argv + argc);
        ctx.manifest.config = {{"ephemeris_path", opt.ephemeris},
                               {"c_scale", opt.c_scale},
                               {"ephemeris", to_json(ctx.table)}};
        // planet lookups are usage errors, not runtime failures
        if (prec->parsed() || orbit->parsed()) (void)ctx.table.body(planet);
    } catch (const Error& e) {
        std::fprintf(stderr, "perihelion: %s\n", e.what());
        return exit_usage;
    }

    int code = exit_ok;
    try {
        if (prec->parsed()) code = cmd_precession(ctx, planet, model, fractional);
        if (orbit->parsed()) code = cmd_orbit(ctx, planet, model, periods, samples, integrate, output);
        if (observe->parsed()) {
            cfg.mode = mode == "exact" ? obs::LightTimeMode::exact : obs::LightTimeMode::approx;
            code = cmd_observe(ctx, cfg, output, as_json, sweep_n, sweep_output, threads);
        }
        if (validate->parsed()) code = cmd_validate(ctx, quick, output);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "perihelion: %s\n", e.what());
        return exit_usage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "perihelion: %s\n", e.what());
        code = exit_failure;
    }

    ctx.manifest.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    try {
        emit_manifest(opt, ctx.manifest);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "perihelion: %s\n", e.what());
        return exit_failure;
    }
    return code;
}

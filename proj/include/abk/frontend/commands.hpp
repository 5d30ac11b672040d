#pragma once

// CLI subcommands. Each returns a process exit code:
//   0  every check passed
//   1  a verification check failed (or an integration went non-finite)
//   2  usage or load error

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "abk/frontend/spec_loader.hpp"

namespace abk::frontend {

inline constexpr int exit_pass = 0;
inline constexpr int exit_fail = 1;
inline constexpr int exit_usage = 2;

struct CheckResult {
    std::string name;
    Defect defect;
    double tol = 0.0;

    bool pass() const { return defect.value < tol; }  // false for NaN
};

inline std::string format_check(const CheckResult& c) {
    char value[32], tol[32];
    std::snprintf(value, sizeof value, "%.6e", c.defect.value);
    std::snprintf(tol, sizeof tol, "%.1e", c.tol);
    return "CHECK " + c.name + " max_defect=" + value + " tol=" + tol + " at=" + format_point(c.defect.at) + " " +
           (c.pass() ? "PASS" : "FAIL");
}

class Report {
public:
    void add(std::string name, Defect defect, double tol) { checks_.push_back({std::move(name), std::move(defect), tol}); }

    const std::vector<CheckResult>& checks() const noexcept { return checks_; }

    std::size_t failures() const {
        std::size_t n = 0;
        for (const auto& c : checks_) n += c.pass() ? 0 : 1;
        return n;
    }

    void print(std::ostream& os) const {
        for (const auto& c : checks_) os << format_check(c) << '\n';
        os << "SUMMARY checks=" << checks_.size() << " failed=" << failures() << '\n';
    }

private:
    std::vector<CheckResult> checks_;
};

struct VerifyOptions {
    std::optional<std::uint64_t> seed;
    std::size_t samples = 64;
    double tol_scale = 1.0;
};

namespace detail {

inline std::vector<Vector> base_samples(const LoadedSpec& spec, const std::string& chart, std::size_t count,
                                        std::mt19937_64& rng) {
    if (spec.bundle.base_dim == 0) return {Vector(0)};
    return spec.bundle.sample_domains.at(chart).samples(rng, count);
}

/// Scalar test function 1 + sum x_i + 1/2 sum x_i^2 (constant on a point base).
inline SmoothMap leibniz_test_function(Index m) {
    return scalar_map(m, [](const Vector& x) { return 1.0 + x.sum() + 0.5 * x.squaredNorm(); });
}

/// User sections on the chart, or the frame plus polynomially weighted frame sections.
inline std::vector<std::pair<std::string, SmoothMap>> test_sections(const LoadedSpec& spec, const std::string& chart) {
    std::vector<std::pair<std::string, SmoothMap>> out;
    for (const auto& s : spec.sections)
        if (s.section.defined_on(chart)) out.emplace_back(s.name, s.section.on(chart));
    if (!out.empty()) return out;
    const Index m = spec.bundle.base_dim, k = spec.bundle.fibre_dim;
    for (Index a = 0; a < k; ++a) out.emplace_back("e" + std::to_string(a + 1), frame_section(m, k, a));
    if (m > 0) {
        for (Index a = 0; a < k; ++a) {
            const Index coord = a % m;
            out.emplace_back("p" + std::to_string(a + 1), SmoothMap(m, k, [coord, k, a](const Vector& x) -> Vector {
                                 return (1.0 + x[coord] * x[coord]) * Vector::Unit(k, a);
                             }));
        }
    }
    return out;
}

inline std::vector<NamedForm> test_forms(const LoadedSpec& spec, const std::string& chart) {
    std::vector<NamedForm> out;
    for (const auto& f : spec.forms)
        if (f.form.components.count(chart)) out.push_back(f);
    if (!out.empty()) return out;
    const Index m = spec.bundle.base_dim, k = spec.bundle.fibre_dim;
    out.push_back({"f", function_form(k, chart, leibniz_test_function(m))});
    for (Index g = 0; g < k; ++g) out.push_back({"theta" + std::to_string(g + 1), dual_frame_form(m, k, chart, g)});
    return out;
}

inline void morphism_checks(const LoadedSpec& spec, Report& report, std::size_t count, std::mt19937_64& rng,
                            const ToleranceTiers& tol) {
    const MorphismSpec& ms = *spec.morphism;
    const MorphismLocal& phi = ms.morphism;
    std::vector<FormLocal> probes = dual_frame_probes(phi.target, phi.target_chart);
    for (const auto& f : ms.target_forms)
        if (f.form.components.count(phi.target_chart)) probes.push_back(f.form);
    std::vector<FormLocal> usable;
    for (auto& p : probes)
        if (p.degree + 1 <= phi.source.fibre_dim()) usable.push_back(std::move(p));
    const std::vector<Vector> xs = base_samples(spec, phi.source_chart, count, rng);
    const bool exact = phi.source.over_point() && phi.target.over_point();
    report.add("morphism", morphism_defect(phi, usable, xs), exact ? tol.exact : tol.nested);
}

} // namespace detail

/// Runs every check that applies to the spec; results are appended in a fixed order.
inline Report verify_spec(const LoadedSpec& spec, const VerifyOptions& opts) {
    const std::uint64_t seed = opts.seed.value_or(spec.seed);
    std::mt19937_64 rng(seed);
    ToleranceTiers tol = spec.tolerances;
    tol.exact *= opts.tol_scale;
    tol.single *= opts.tol_scale;
    tol.nested *= opts.tol_scale;

    const AnchoredBundleSpec& b = spec.bundle;
    const Index m = b.base_dim, k = b.fibre_dim;
    Report report;

    for (const auto& t : b.transitions) {
        const std::string tag = t.from.name + "->" + t.to.name;
        report.add("anchor_compat[" + tag + "]", anchor_compat_defect(b, t),
                   t.base_map.has_analytic_jacobian() ? tol.exact : tol.single);
        for (const auto& s : spec.sections) {
            if (!s.section.defined_on(t.from.name) || !s.section.defined_on(t.to.name)) continue;
            report.add("cocycle_section[" + s.name + ":" + tag + "]", cocycle_defect(b, s.section, t), tol.exact);
            report.add("cocycle_field[" + s.name + ":" + tag + "]", cocycle_defect(b, anchor_apply(b, s.section), t),
                       tol.single);
        }
        if (spec.semispray && spec.semispray->coefficients.count(t.from.name) &&
            spec.semispray->coefficients.count(t.to.name))
            report.add("transformation[" + tag + "]", transformation_defect(*spec.semispray, t), tol.single);
    }

    for (const auto& c : b.charts) {
        const std::string& chart = c.name;
        if (spec.semispray && spec.expect_spray && spec.semispray->coefficients.count(chart)) {
            const SemisprayLocal& s = *spec.semispray;
            const Box box = m > 0 ? b.sample_domains.at(chart) : Box{};
            const std::vector<Vector> pts = sample_total_space(box, k, opts.samples, rng);
            report.add("spray[" + chart + "]", spray_defect(s, chart, default_lambdas, pts), tol.exact);
            report.add("homothety[" + chart + "]", field_homothety_defect(s, chart, default_lambdas, pts), tol.exact);
            Defect euler;
            for (const auto& xu : pts) {
                const EulerReport r = euler_check(freeze_base(s.coefficient(chart), xu.head(m)), 2.0, {xu.tail(k)});
                euler.absorb(r.residual.value, xu);
            }
            report.add("euler[" + chart + "]", euler, tol.single);
        }

        if (spec.algebroid && spec.algebroid->structure.count(chart)) {
            const AlgebroidStructure& a = *spec.algebroid;
            const bool point = a.over_point();
            const std::vector<Vector> xs = detail::base_samples(spec, chart, opts.samples, rng);
            const auto sections = detail::test_sections(spec, chart);
            const SmoothMap f = detail::leibniz_test_function(m);

            Defect leibniz;
            for (std::size_t i = 0; i < sections.size(); ++i)
                for (std::size_t j = 0; j < sections.size(); ++j)
                    if (i != j) leibniz.absorb(leibniz_defect(a, chart, sections[i].second, sections[j].second, f, xs));
            report.add("leibniz[" + chart + "]", leibniz, point ? tol.exact : tol.single);

            if (sections.size() >= 3) {
                Defect jacobi;
                for (std::size_t i = 0; i < sections.size(); ++i)
                    for (std::size_t j = i + 1; j < sections.size(); ++j)
                        for (std::size_t l = j + 1; l < sections.size(); ++l)
                            jacobi.absorb(jacobi_defect(a, chart, sections[i].second, sections[j].second,
                                                        sections[l].second, xs));
                report.add("jacobi[" + chart + "]", jacobi, point ? tol.exact : tol.nested);
            }

            if (!point) {
                Defect hom;
                for (std::size_t i = 0; i < sections.size(); ++i)
                    for (std::size_t j = i + 1; j < sections.size(); ++j)
                        hom.absorb(anchor_hom_defect(a, chart, sections[i].second, sections[j].second, xs));
                report.add("anchor_hom[" + chart + "]", hom, tol.single);
            }

            for (const auto& w : detail::test_forms(spec, chart)) {
                if (w.form.degree + 2 > k) continue;
                report.add("d_squared[" + chart + ":" + w.name + "]", d_squared_defect(a, chart, w.form, xs),
                           point ? tol.exact : tol.nested);
            }
        }
    }

    if (spec.morphism) detail::morphism_checks(spec, report, opts.samples, rng, tol);
    return report;
}

inline int cmd_verify(const std::filesystem::path& path, const VerifyOptions& opts, std::ostream& out,
                      std::ostream& err) {
    LoadedSpec spec;
    try {
        spec = load_spec(path);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    try {
        out << "VERIFY spec=" << path.filename().string() << " seed=" << opts.seed.value_or(spec.seed)
            << " samples=" << opts.samples << '\n';
        const Report report = verify_spec(spec, opts);
        report.print(out);
        return report.failures() == 0 ? exit_pass : exit_fail;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_fail;
    }
}

struct IntegrateOptions {
    std::vector<double> start;
    double t0 = 0.0;
    double t1 = 1.0;
    int steps = 100;
    std::optional<std::filesystem::path> out_path;
    std::optional<std::string> chart;
};

/// CSV with header t,x1..xm,u1..uk and 17 significant digits.
inline void write_trajectory_csv(std::ostream& os, const BundleCurve& c) {
    os << 't';
    for (Index i = 0; i < c.base_dim; ++i) os << ",x" << i + 1;
    for (Index i = 0; i < c.fibre_dim; ++i) os << ",u" << i + 1;
    os << '\n';
    char buf[40];
    for (std::size_t n = 0; n < c.trajectory.size(); ++n) {
        std::snprintf(buf, sizeof buf, "%.17g", c.trajectory.times[n]);
        os << buf;
        const Vector& s = c.trajectory.states[n];
        for (Index i = 0; i < s.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", s[i]);
            os << ',' << buf;
        }
        os << '\n';
    }
}

inline int cmd_integrate(const std::filesystem::path& path, const IntegrateOptions& opts, std::ostream& out,
                         std::ostream& err) {
    LoadedSpec spec;
    try {
        spec = load_spec(path);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    if (!spec.semispray) {
        err << "error: spec has no semispray block\n";
        return exit_usage;
    }
    const Index m = spec.bundle.base_dim, k = spec.bundle.fibre_dim;
    if (static_cast<Index>(opts.start.size()) != m + k) {
        err << "error: --start needs " << m + k << " values (x1..x" << m << ", u1..u" << k << "), got "
            << opts.start.size() << '\n';
        return exit_usage;
    }
    if (opts.steps < 2 || !(opts.t1 > opts.t0)) {
        err << "error: need --steps >= 2 and --t1 > --t0\n";
        return exit_usage;
    }
    const std::string chart = opts.chart.value_or(spec.first_chart());
    if (!spec.semispray->coefficients.count(chart)) {
        err << "error: no semispray coefficients on chart '" << chart << "'\n";
        return exit_usage;
    }

    const Vector start = Eigen::Map<const Vector>(opts.start.data(), static_cast<Index>(opts.start.size()));
    const SemisprayFlow flow = integrate_semispray(*spec.semispray, chart, start, opts.t0, opts.t1, opts.steps);
    const SemisprayFlow fine = integrate_semispray(*spec.semispray, chart, start, opts.t0, opts.t1, 2 * opts.steps);

    std::ostream* report = &out;
    std::ofstream csv;
    if (opts.out_path) {
        csv.open(*opts.out_path);
        if (!csv) {
            err << "error: cannot write '" << opts.out_path->string() << "'\n";
            return exit_usage;
        }
        write_trajectory_csv(csv, flow.curve);
    } else {
        write_trajectory_csv(out, flow.curve);
        report = &err;
    }

    if (!flow.ok || !fine.ok) {
        *report << "error: integration failed: " << (flow.ok ? fine.error : flow.error) << '\n';
        return exit_fail;
    }
    const Defect coarse_defect = admissibility_defect(spec.bundle, chart, flow.curve);
    const Defect fine_defect = admissibility_defect(spec.bundle, chart, fine.curve);
    char buf[64];
    *report << "INTEGRATE spec=" << path.filename().string() << " chart=" << chart << " steps=" << opts.steps << '\n';
    *report << "endpoint=" << format_point(flow.curve.trajectory.back()) << '\n';
    std::snprintf(buf, sizeof buf, "%.6e", coarse_defect.value);
    *report << "admissibility_defect=" << buf << " at_t=" << format_point(coarse_defect.at) << '\n';
    std::snprintf(buf, sizeof buf, "%.6e", fine_defect.value);
    *report << "half_step_admissibility_defect=" << buf << '\n';
    if (fine_defect.value > 1e-12 && coarse_defect.value > 1e-12) {
        const double ratio = coarse_defect.value / fine_defect.value;
        std::snprintf(buf, sizeof buf, "convergence_ratio=%.4f observed_order=%.3f", ratio, std::log2(ratio));
        *report << buf << '\n';
    } else {
        *report << "convergence_ratio=undefined (defect at rounding level)\n";
    }
    return exit_pass;
}

inline int cmd_morphism(const std::filesystem::path& path, const VerifyOptions& opts, std::ostream& out,
                        std::ostream& err) {
    LoadedSpec spec;
    try {
        spec = load_spec(path);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    if (!spec.morphism) {
        err << "error: spec has no morphism block\n";
        return exit_usage;
    }
    try {
        std::mt19937_64 rng(opts.seed.value_or(spec.seed));
        ToleranceTiers tol = spec.tolerances;
        tol.exact *= opts.tol_scale;
        tol.nested *= opts.tol_scale;
        out << "MORPHISM spec=" << path.filename().string() << " seed=" << opts.seed.value_or(spec.seed) << '\n';
        Report report;
        detail::morphism_checks(spec, report, opts.samples, rng, tol);

        const MorphismLocal& phi = spec.morphism->morphism;
        const MorphismLocal left = compose(identity_morphism(phi.target, phi.target_chart), phi);
        const MorphismLocal right = compose(phi, identity_morphism(phi.source, phi.source_chart));
        Defect unit;
        for (const auto& x : detail::base_samples(spec, phi.source_chart, opts.samples, rng)) {
            unit.absorb(std::max(max_norm(Matrix(left.fibre_at(x) - phi.fibre_at(x))),
                                 max_norm(Matrix(right.fibre_at(x) - phi.fibre_at(x)))),
                        x);
            unit.absorb(std::max(max_norm(Vector(left.base_map(x) - phi.base_map(x))),
                                 max_norm(Vector(right.base_map(x) - phi.base_map(x)))),
                        x);
        }
        report.add("unit_laws", unit, tol.exact);
        report.print(out);
        return report.failures() == 0 ? exit_pass : exit_fail;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_fail;
    }
}

/// Parses argv and dispatches to a subcommand.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Verify anchored bundles, semisprays and Lie algebroids from JSON specs", "abk"};
    app.require_subcommand(1);

    std::string spec_path;
    VerifyOptions vopts;
    std::uint64_t seed = 0;

    auto* verify = app.add_subcommand("verify", "Run every applicable identity check on a spec");
    verify->add_option("spec", spec_path, "Spec file")->required();
    auto* vseed = verify->add_option("--seed", seed, "Sampling seed (overrides the spec)");
    verify->add_option("--samples", vopts.samples, "Sample points per chart")->check(CLI::PositiveNumber);
    verify->add_option("--tol-scale", vopts.tol_scale, "Multiply every tolerance")->check(CLI::PositiveNumber);

    IntegrateOptions iopts;
    std::string start;
    std::string out_path;
    std::string chart;
    auto* integrate = app.add_subcommand("integrate", "Integrate the semispray and check admissibility");
    integrate->add_option("spec", spec_path, "Spec file")->required();
    integrate->add_option("--start", start, "Initial point x1,..,xm,u1,..,uk")->required();
    integrate->add_option("--t0", iopts.t0, "Start time");
    integrate->add_option("--t1", iopts.t1, "End time");
    integrate->add_option("--steps", iopts.steps, "Number of RK4 steps");
    auto* out_opt = integrate->add_option("--out", out_path, "Trajectory CSV (default: stdout)");
    auto* chart_opt = integrate->add_option("--chart", chart, "Chart to integrate in (default: first)");

    auto* morphism = app.add_subcommand("morphism", "Check the morphism block of a spec");
    morphism->add_option("spec", spec_path, "Spec file")->required();
    auto* mseed = morphism->add_option("--seed", seed, "Sampling seed (overrides the spec)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_pass;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_pass;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }

    if (verify->parsed()) {
        if (vseed->count()) vopts.seed = seed;
        return cmd_verify(spec_path, vopts, out, err);
    }
    if (morphism->parsed()) {
        if (mseed->count()) vopts.seed = seed;
        return cmd_morphism(spec_path, vopts, out, err);
    }
    std::stringstream ss(start);
    for (std::string tok; std::getline(ss, tok, ',');) {
        try {
            std::size_t used = 0;
            iopts.start.push_back(std::stod(tok, &used));
            if (tok.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            err << "error: --start must be comma-separated numbers, got '" << tok << "'\n";
            return exit_usage;
        }
    }
    if (out_opt->count()) iopts.out_path = out_path;
    if (chart_opt->count()) iopts.chart = chart;
    return cmd_integrate(spec_path, iopts, out, err);
}

} // namespace abk::frontend

#pragma once

// Command-line front end: flat key=value configuration, subcommands and
// deterministic CSV/JSON emission.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "acceptance.hpp"
#include "backstepping.hpp"
#include "control.hpp"
#include "errors.hpp"
#include "feedback.hpp"
#include "finite_dim.hpp"
#include "model.hpp"
#include "simulate.hpp"
#include "spectral.hpp"

namespace wtank {

using ojson = nlohmann::ordered_json;

struct RunConfig {
    Params params;
    std::string output_dir = ".";
    std::string format = "csv";
    unsigned seed = 1;
    bool eigenfunctions = false;
    double lambda = -1.0;      // lyapunov rate; <= 0 means mu/2
    int target_mode = 1;       // steer
    std::vector<int> criteria; // report; empty means all
};

// ---------------------------------------------------------------------------
// Output helpers

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

inline std::filesystem::path out_path(const RunConfig& c, const std::string& stem) {
    std::filesystem::create_directories(c.output_dir);
    return std::filesystem::path(c.output_dir) / stem;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw UsageError("cannot open output file " + p.string());
    f << s;
}

// Writes stem.csv (17 significant digits) or stem.json (array of row objects).
inline std::string write_table(const RunConfig& c, const std::string& stem, const Table& t) {
    if (c.format == "json") {
        ojson arr = ojson::array();
        for (const auto& r : t.rows) {
            ojson o;
            for (std::size_t j = 0; j < t.columns.size(); ++j) o[t.columns[j]] = r[j];
            arr.push_back(o);
        }
        const auto p = out_path(c, stem + ".json");
        write_text(p, arr.dump(2) + "\n");
        return p.filename().string();
    }
    std::ostringstream os;
    for (std::size_t j = 0; j < t.columns.size(); ++j) os << (j ? "," : "") << t.columns[j];
    os << "\n";
    for (const auto& r : t.rows) {
        for (std::size_t j = 0; j < r.size(); ++j) os << (j ? "," : "") << num(r[j]);
        os << "\n";
    }
    const auto p = out_path(c, stem + ".csv");
    write_text(p, os.str());
    return p.filename().string();
}

inline ojson config_echo(const RunConfig& c) {
    const Params& p = c.params;
    ojson j;
    j["L"] = p.L;
    j["gamma"] = p.gamma;
    j["mu"] = p.mu;
    j["nu"] = p.nu;
    j["n_modes"] = p.n_modes;
    j["grid_points"] = p.grid_points;
    j["ode_tol"] = p.ode_tol;
    j["t_final"] = p.t_final;
    j["dt"] = p.dt;
    j["seed"] = c.seed;
    j["format"] = c.format;
    return j;
}

inline ojson summary_head(const RunConfig& c, const std::string& command) {
    ojson j;
    j["command"] = command;
    j["config"] = config_echo(c);
    return j;
}

inline void write_summary(const RunConfig& c, const std::string& stem, const ojson& j) {
    write_text(out_path(c, stem + ".json"), j.dump(2) + "\n");
}

inline void require_synthesis_regime(const Params& p) {
    if (!(p.gamma > 0.0)) throw RegimeError("synthesis requires gamma > 0 (got gamma = " + num(p.gamma) + ")");
    if (!(p.nu != 0.0 && std::abs(p.nu) < 1.0)) throw RegimeError("synthesis requires 0 < |nu| < 1 (got nu = " + num(p.nu) + ")");
    if (!(p.mu > 0.0)) throw RegimeError("synthesis requires mu > 0");
}

// ---------------------------------------------------------------------------
// Subcommands. Each returns the process exit code.

inline int cmd_spectrum(const RunConfig& c) {
    const Params& p = c.params;
    const Shooter s(p);
    const int N = p.n_modes;
    ojson sum = summary_head(c, "spectrum");
    sum["tolerances"] = {{"drift_bound", 1.0 / (4.0 * p.L)}};
    bool pass = true;
    for (const BcKind& bc : {BcKind::conservative(), BcKind::damped(p.mu)}) {
        const Basis B = build_basis(s, bc, N);
        Table t{{"n", "re", "im", "drift"}, {}};
        double drift = 0.0;
        for (int n = -N; n <= N; ++n) {
            const cplx ev = B.eigenvalue(n);
            const double d = std::abs(ev - bc.unperturbed(n, p.L));
            drift = std::max(drift, d);
            t.rows.push_back({double(n), ev.real(), ev.imag(), d});
        }
        const std::string tag = bc.damped() ? "Atilde" : "A";
        const bool ok = drift < 1.0 / (4.0 * p.L);
        pass = pass && ok;
        ojson e;
        e["table"] = write_table(c, "spectrum_" + tag, t);
        e["max_drift"] = drift;
        e["gram_deviation"] = B.gram_deviation;
        e["drift_check"] = ok ? "PASS" : "FAIL";
        if (c.eigenfunctions) {
            Table f{{"n", "x", "re_f1", "im_f1", "re_f2", "im_f2"}, {}};
            for (int n = -N; n <= N; ++n) {
                const auto& g = B.at(n).func;
                for (int i = 0; i < g.size(); ++i)
                    f.rows.push_back({double(n), g.x(i), g.f1[i].real(), g.f1[i].imag(), g.f2[i].real(), g.f2[i].imag()});
            }
            e["eigenfunctions"] = write_table(c, "eigenfunctions_" + tag, f);
        }
        sum[tag] = e;
    }
    sum["verdict"] = pass ? "PASS" : "FAIL";
    write_summary(c, "spectrum", sum);
    return pass ? 0 : 1;
}

inline int cmd_controllability(const RunConfig& c) {
    const Params& p = c.params;
    if (p.gamma < 0.0) throw RegimeError("controllability requires gamma >= 0 (synthesis regime is gamma > 0)");
    const Basis A = build_basis(p, BcKind::conservative(), p.n_modes);
    const MomentReport r = controllability_report(p, A);
    Table t{{"n", "re_b", "im_b", "re_a", "im_a", "re_inu", "im_inu", "re_mu", "im_mu", "abs_psi_chi"}, {}};
    for (const auto& row : r.rows)
        t.rows.push_back({double(row.n), row.b.real(), row.b.imag(), row.a.real(), row.a.imag(), row.inu.real(),
                          row.inu.imag(), row.mu.real(), row.mu.imag(), std::abs(row.psi_chi)});
    ojson sum = summary_head(c, "controllability");
    sum["tolerances"] = {{"uncontrollable_b", 1e-8}, {"psi_chi_range", {0.5, 2.0}}, {"drift_bound", 1.0 / (4.0 * p.L)},
                         {"inu0", 1e-8}};
    sum["table"] = write_table(c, "moments", t);
    auto flag = [](bool b) { return b ? "PASS" : "FAIL"; };
    sum["items"] = {{"riesz", flag(r.riesz_ok)}, {"psi_chi", flag(r.psi_chi_ok)}, {"drift", flag(r.drift_ok)},
                    {"moments", flag(r.moments_ok)}, {"missing_direction", flag(r.inu0_ok)}};
    sum["bounds"] = {{"c", r.c_lower}, {"C", r.C_upper}, {"m", r.m_lower}, {"M", r.M_upper}};
    sum["uncontrollable_modes"] = r.uncontrollable;
    bool ok;
    if (p.gamma == 0.0) {
        // expected pattern: exactly the nonzero even modes
        std::vector<int> even;
        for (int n = -p.n_modes; n <= p.n_modes; ++n)
            if (n != 0 && n % 2 == 0) even.push_back(n);
        ok = r.uncontrollable == even && r.riesz_ok && r.psi_chi_ok && r.drift_ok && r.inu0_ok;
        sum["expected_pattern"] = "even modes uncontrollable at gamma = 0";
    } else {
        ok = r.all_ok();
    }
    sum["verdict"] = ok ? "PASS" : "FAIL";
    write_summary(c, "controllability", sum);
    return ok ? 0 : 1;
}

inline int cmd_feedback(const RunConfig& c) {
    const Params& p = c.params;
    require_synthesis_regime(p);
    const Basis A = build_basis(p, BcKind::conservative(), p.n_modes);
    FeedbackLaw law = feedback_coefficients(p, A, virtual_profile(p, A));
    const SingularSplit sp = singular_split(p, law, A);
    Table t{{"n", "re_F", "im_F", "re_h", "im_h", "re_tau", "im_tau", "re_inu", "im_inu"}, {}};
    for (int n = -law.N; n <= law.N; ++n) {
        const int i = n + law.N;
        t.rows.push_back({double(n), law.coeffs[i].real(), law.coeffs[i].imag(), sp.h[i].real(), sp.h[i].imag(),
                          sp.tau[i].real(), sp.tau[i].imag(), law.inu[i].real(), law.inu[i].imag()});
    }
    double sym = 0.0;
    for (int n = 1; n <= law.N; ++n) sym = std::max(sym, std::abs(law.coeff(-n) - std::conj(law.coeff(n))));
    ojson sum = summary_head(c, "feedback");
    sum["tolerances"] = {{"moment_floor", 1e-10}, {"tau_floor", 1e-6}};
    sum["table"] = write_table(c, "feedback", t);
    sum["growth"] = {{"c", law.c_growth}, {"C", law.C_growth}};
    sum["tau_range"] = {sp.tau_min, sp.tau_max};
    sum["regular_tail_l2_sq"] = {{"K=N/4", sp.tail[law.N / 4]}, {"K=N/2", sp.tail[law.N / 2]}};
    sum["conjugate_symmetry"] = sym;
    const bool ok = law.c_growth > 0.0 && sym < 1e-10;
    sum["verdict"] = ok ? "PASS" : "FAIL";
    write_summary(c, "feedback", sum);
    return ok ? 0 : 1;
}

inline int cmd_simulate(const RunConfig& c) {
    const Params& p = c.params;
    require_synthesis_regime(p);
    const Basis A = build_basis(p, BcKind::conservative(), p.n_modes);
    const FeedbackLaw law = feedback_coefficients(p, A, virtual_profile(p, A));
    const auto init = random_real_modal_data(law.N, c.seed);
    const int every = std::max(1, static_cast<int>(std::lround(0.01 / std::min(p.dt, 0.5 / std::abs(law.mu.back())))));
    const Trajectory tr = integrate_closed_loop(p, law, init, 0.0, p.t_final, every);
    Table t{{"t", "l2", "da_norm", "re_zeta0", "im_zeta0", "mode0"}, {}};
    for (int n = -law.N; n <= law.N; ++n) t.columns.push_back("abs_c" + std::to_string(n));
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        std::vector<double> row{tr.times[k], tr.l2[k], tr.da[k], tr.zeta0[k].real(), tr.zeta0[k].imag(), std::abs(tr.mode0[k])};
        for (const auto& z : tr.modal_coeffs[k]) row.push_back(std::abs(z));
        t.rows.push_back(std::move(row));
    }
    double m0 = 0.0;
    for (const auto& v : tr.mode0) m0 = std::max(m0, std::abs(v));
    const double t0 = 5.0 / p.mu, t1 = std::min(15.0 / p.mu, p.t_final), need = 0.7 * 0.75 * p.mu;
    ojson sum = summary_head(c, "simulate");
    sum["tolerances"] = {{"rate_floor", need}, {"r2_floor", 0.98}, {"mode0", 1e-8}};
    sum["table"] = write_table(c, "trajectory", t);
    sum["dt"] = tr.dt;
    sum["step_halvings"] = tr.halvings;
    sum["max_mode0"] = m0;
    bool ok = m0 < 1e-8;
    if (t1 - t0 > 0.0) {
        const DecayFit f = decay_rate_estimate(tr.times, tr.da, t0, t1);
        sum["fit"] = {{"window", {t0, t1}}, {"rate", f.rate}, {"r2", f.r2}};
        ok = ok && f.rate >= need && f.r2 > 0.98;
    } else {
        sum["fit"] = "t_final shorter than 5/mu; no fit";
    }
    sum["verdict"] = ok ? "PASS" : "FAIL";
    write_summary(c, "simulate", sum);
    return ok ? 0 : 1;
}

inline int cmd_lyapunov(const RunConfig& c) {
    const Params& p = c.params;
    const double lambda = c.lambda > 0.0 ? c.lambda : p.mu / 2.0;
    if (!(lambda < p.mu)) throw RegimeError("lyapunov requires lambda < mu (got lambda = " + num(lambda) + ")");
    const double gs = gamma_s(p, lambda);
    if (!(p.gamma < gs))
        throw RegimeError("gamma < gamma_s(lambda) violated: gamma = " + num(p.gamma) + " >= gamma_s = " + num(gs));
    const LyapunovCertificate cert = lyapunov_certificate(p, lambda);
    Table t{{"x", "eta", "xi", "theta1", "theta2"}, {}};
    for (std::size_t i = 0; i < cert.x.size(); ++i)
        t.rows.push_back({cert.x[i], cert.eta[i], cert.xi[i], cert.theta1[i], cert.theta2[i]});
    double gap = 0.0;
    for (std::size_t i = 0; i < cert.eta.size(); ++i) gap = std::max(gap, cert.eta[i] - cert.xi[i]);
    ojson sum = summary_head(c, "lyapunov");
    sum["tolerances"] = {{"eta_L_max", 1.0}};
    sum["table"] = write_table(c, "lyapunov", t);
    sum["lambda"] = lambda;
    sum["gamma_s"] = gs;
    sum["feasible"] = cert.feasible;
    if (cert.blowup_at >= 0.0) sum["blowup_at"] = cert.blowup_at;
    sum["eta_L"] = cert.eta.empty() ? 0.0 : cert.eta.back();
    sum["max_eta_minus_xi"] = gap;
    const bool ok = cert.feasible && gap <= 1e-12;
    sum["verdict"] = ok ? "PASS" : "FAIL";
    write_summary(c, "lyapunov", sum);
    return ok ? 0 : 1;
}

inline int cmd_steer(const RunConfig& c) {
    const Params& p = c.params;
    if (!(p.gamma > 0.0)) throw RegimeError("steering requires gamma > 0");
    const int N = p.n_modes, k = c.target_mode;
    if (k == 0 || std::abs(k) > N) throw UsageError("target_mode must be nonzero with |target_mode| <= n_modes");
    const Shooter s(p);
    const Basis A = build_basis(s, BcKind::conservative(), N);
    const Basis A2 = build_basis(s, BcKind::conservative(), 2 * N);
    const WBases W = w_bases(p, A);
    const DualBasis d = dual_exponentials(p, A.eigenvalues());
    std::vector<cplx> tg(2 * N + 1, 0.0);
    tg[N + k] = 1.0;
    const ControlSignal sig = synthesize_open_loop(p, W, d, tg);
    const SteeringResult res = simulate_open_loop(p, A2, sig, tg);
    Table t{{"t", "re_u", "im_u"}, {}};
    for (std::size_t i = 0; i < sig.t.size(); i += 8) t.rows.push_back({sig.t[i], sig.u[i].real(), sig.u[i].imag()});
    ojson sum = summary_head(c, "steer");
    sum["tolerances"] = {{"terminal_relative_error", 5e-2}, {"mass_drift", 1e-6}, {"biorthogonality", 1e-6}};
    sum["table"] = write_table(c, "control", t);
    sum["target_mode"] = k;
    sum["gram_condition"] = d.condition;
    sum["biorthogonality_residual"] = d.biorth_residual;
    sum["control_l2"] = sig.l2;
    sum["terminal_relative_error"] = res.relative_error;
    sum["mass_drift"] = res.mass_drift;
    const bool ok = res.relative_error < 5e-2 && res.mass_drift < 1e-6 && d.biorth_residual < 1e-6;
    sum["verdict"] = ok ? "PASS" : "FAIL";
    write_summary(c, "steer", sum);
    return ok ? 0 : 1;
}

inline int cmd_finite_demo(const RunConfig& c) {
    LinearPair a{Eigen::MatrixXd(2, 2), Eigen::VectorXd(2)};
    a.A << 0, 1, 0, 0;
    a.B << 0, 1;
    LinearPair b = a;
    b.A << 0, 1, -1, -2;
    const Backstepping hand = backstep_pair(a, b);
    const CriterionResult r = accept::finite_oracle(c.seed);
    ojson sum = summary_head(c, "finite_demo");
    sum["tolerances"] = {{"residual", 1e-10}, {"eigenvalues", 1e-8}, {"paths", 1e-8}};
    sum["double_integrator"] = {{"K", {hand.K(0), hand.K(1)}},
                                {"T", {hand.T(0, 0), hand.T(0, 1), hand.T(1, 0), hand.T(1, 1)}},
                                {"residual", std::max(hand.residual_op, hand.residual_b)}};
    sum["random_pairs"] = {{"count", 100}, {"max_residual", r.value}, {"detail", r.detail}};
    sum["verdict"] = r.pass ? "PASS" : "FAIL";
    write_summary(c, "finite_demo", sum);
    return r.pass ? 0 : 1;
}

inline int cmd_report(const RunConfig& c) {
    std::vector<int> ids = c.criteria;
    if (ids.empty())
        for (int i = 1; i <= criterion_count; ++i) ids.push_back(i);
    ojson sum = summary_head(c, "report");
    ojson arr = ojson::array();
    bool all = true;
    for (int id : ids) {
        const CriterionResult r = run_criterion(id, c.params);
        all = all && r.pass;
        arr.push_back({{"id", r.id}, {"name", r.name}, {"verdict", r.pass ? "PASS" : "FAIL"}, {"value", r.value},
                       {"tolerance", r.tolerance}, {"detail", r.detail}});
        std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.id << "  " << r.name << ": " << r.detail << "\n";
    }
    sum["criteria"] = arr;
    sum["verdict"] = all ? "PASS" : "FAIL";
    write_summary(c, "report", sum);
    return all ? 0 : 1;
}

// ---------------------------------------------------------------------------

inline int run_cli(int argc, char** argv) {
    CLI::App app{"wtank: backstepping stabilization of a tank under constant acceleration"};
    app.set_config("--config", "", "flat key = value configuration file");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);
    app.fallthrough();

    RunConfig c;
    Params& p = c.params;
    app.add_option("--L", p.L, "tank length");
    app.add_option("--gamma", p.gamma, "steady acceleration");
    app.add_option("--mu", p.mu, "target damping parameter");
    app.add_option("--nu", p.nu, "virtual-control weight");
    app.add_option("--n_modes", p.n_modes, "truncation N (modes |n| <= N)");
    app.add_option("--grid_points", p.grid_points, "spatial samples (odd)");
    app.add_option("--ode_tol", p.ode_tol, "shooting error tolerance");
    app.add_option("--t_final", p.t_final, "simulation horizon");
    app.add_option("--dt", p.dt, "time step upper bound");
    app.add_option("--seed", c.seed, "seed for random test data");
    app.add_option("--output_dir", c.output_dir, "directory for output files");
    app.add_option("--format", c.format, "table format")->check(CLI::IsMember({"csv", "json"}));
    app.add_flag("--eigenfunctions", c.eigenfunctions, "also write eigenfunction samples (spectrum)");
    app.add_option("--lambda", c.lambda, "Lyapunov decay rate (default mu/2)");
    app.add_option("--target_mode", c.target_mode, "mode steered by `steer`");
    app.add_option("--criteria", c.criteria, "criterion ids for `report` (default all)")->delimiter(',');

    struct Sub {
        const char* name;
        const char* help;
        int (*fn)(const RunConfig&);
    };
    const Sub subs[] = {
        {"spectrum", "eigenvalue tables of A and A~", cmd_spectrum},
        {"controllability", "moment report", cmd_controllability},
        {"feedback", "feedback table and singular split", cmd_feedback},
        {"simulate", "closed-loop simulation and decay fit", cmd_simulate},
        {"lyapunov", "Lyapunov certificate", cmd_lyapunov},
        {"steer", "open-loop steering of one mode", cmd_steer},
        {"finite_demo", "finite-dimensional backstepping oracle", cmd_finite_demo},
        {"report", "all acceptance checks", cmd_report},
    };
    for (const auto& s : subs) app.add_subcommand(s.name, s.help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::config);
    }
    try {
        p.validate();
        for (const auto& s : subs)
            if (app.got_subcommand(s.name)) return s.fn(c);
    } catch (const Error& e) {
        std::cerr << "wtank: " << e.what() << "\n";
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "wtank: " << e.what() << "\n";
        return static_cast<int>(ExitCode::numerical);
    }
    return static_cast<int>(ExitCode::config);
}

}  // namespace wtank

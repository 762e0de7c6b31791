#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <thread>

#include <json.hpp>

#include "sbo/errors.hpp"
#include "sbo/sweep.hpp"

namespace sbo {

namespace {

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(int count, int workers, const std::function<void(int)>& body) {
    workers = std::max(1, std::min(workers, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) body(i);
        });
    for (auto& th : pool) th.join();
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return out + "\"";
}

SelfConsistentOptions misf_options(const RunConfig& c) {
    SelfConsistentOptions o;
    o.fixed_point = {c.solver.damping, c.solver.tolerance, c.solver.max_iterations};
    o.t_tolerance = c.solver.t_tolerance;
    o.search_iterations = c.solver.search_iterations;
    return o;
}

FixedPointOptions fixed_point_options(const RunConfig& c) {
    return {c.solver.damping, c.solver.tolerance, c.solver.max_iterations};
}

struct Collected {
    ResultTable table;
    int failures = 0;
    long long iterations = 0;
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();
};

Collected run_misf(const RunConfig& c) {
    Collected out;
    const bool field = c.scenario == RunScenario::misf_field_T;
    if (field) out.table.header.push_back("temperature_over_U0");
    for (const char* h : {"mu_over_U0", "lobe_n", "tc_over_U0", "phase_label", "classifier", "converged", "iterations"})
        out.table.header.push_back(h);
    const AxisSpec& a = c.axes.at("mu");
    const MuSweep axis{a.min, a.max, a.points};
    const KGrid grid(c.dim, c.L);
    const SelfConsistentOptions opts = misf_options(c);
    for (double T : c.temperatures) {
        ModelParams p;
        p.U0 = c.U0;
        p.U2 = c.U2;
        p.eta = field ? c.eta : 0.0;
        p.dim = c.dim;
        p.temperature = T * c.U0;
        const auto recs = sweep_diagram(axis, p, c.method, &grid, opts, field, resolve_workers(c.workers));
        for (const auto& r : recs) {
            std::vector<std::string> row;
            if (field) row.push_back(format_number(T));
            row.push_back(format_number(r.params.mu / c.U0));
            row.push_back(std::to_string(r.lobe_n));
            row.push_back(r.lobe_n == 0 || r.phase_label == "failed" ? "nan" : format_number(r.t_c / c.U0));
            row.push_back(r.phase_label);
            row.push_back(format_number(r.classifier));
            row.push_back(r.converged ? "1" : "0");
            row.push_back(std::to_string(r.iterations));
            out.table.rows.push_back(std::move(row));
            if (r.phase_label == "failed") {
                ++out.failures;
                out.extra["errors"].push_back({{"temperature_over_U0", T}, {"mu_over_U0", r.params.mu / c.U0}, {"error", r.error}});
            }
            out.iterations += r.iterations;
        }
    }
    return out;
}

SpinExchangeParams mott1_params(const RunConfig& c) {
    const int z = 2 * c.dim;
    if (c.spin.J1) {
        SpinExchangeParams p;
        p.J1 = *c.spin.J1;
        p.J2 = *c.spin.J2;
        p.z = z;
        return p;
    }
    if (c.spin.theta) return SpinExchangeParams::from_theta(*c.spin.theta * std::numbers::pi, *c.spin.J, 0.0, 0.0, z);
    return exchange_couplings(*c.spin.t, c.U0, c.U2, z);
}

Collected run_mott1(const RunConfig& c) {
    Collected out;
    out.table.header = {"lambda_over_zJ", "q_over_zJ", "phase_label"};
    const SpinExchangeParams base = mott1_params(c);
    base.validate();
    const double zJ = base.z * base.J();
    if (!(zJ > 0.0)) throw ConfigError("spin couplings vanish");
    const Axis la = c.axes.at("lambda").axis(), qa = c.axes.at("q").axis();
    std::vector<Spin1Point> pts(static_cast<std::size_t>(la.points) * qa.points);
    parallel_for(static_cast<int>(pts.size()), resolve_workers(c.workers), [&](int k) {
        SpinExchangeParams p = base;
        p.lambda = la.at(k / qa.points) * zJ;
        p.q = qa.at(k % qa.points) * zJ;
        pts[static_cast<std::size_t>(k)] = {p.lambda, p.q, classify_n1(p)};
    });
    for (const auto& pt : pts)
        out.table.rows.push_back({format_number(pt.lambda / zJ), format_number(pt.q / zJ), spin1_phase_name(pt.phase)});
    out.extra["J1"] = base.J1;
    out.extra["J2"] = base.J2;
    out.extra["z"] = base.z;
    out.extra["q0_over_zJ"] = std::abs(base.J2 - base.J1) / base.J();
    out.extra["q_c_frozen_over_zJ"] = base.J1 > base.J2 ? 2.0 * (base.J1 - base.J2) / base.J() : 0.0;
    return out;
}

Collected run_mott2(const RunConfig& c) {
    Collected out;
    out.table.header = {"lambda_over_U2", "t_over_t0", "phase_label", "t_singlet_over_t0", "t_ferro_over_t0"};
    const KGrid grid(c.dim, c.L);
    Spin2Options opts;
    opts.fixed_point = fixed_point_options(c);
    const Axis la = c.axes.at("lambda").axis(), ta = c.axes.at("t").axis();
    std::vector<Spin2Boundary> bounds(static_cast<std::size_t>(la.points));
    std::vector<std::string> errors(bounds.size());
    parallel_for(la.points, resolve_workers(c.workers), [&](int i) {
        const Axis one{la.at(i), la.at(i), 2};
        try {
            bounds[static_cast<std::size_t>(i)] =
                n2_boundaries(c.U0, c.U2, one, c.method == Method::self_consistent, grid, opts).front();
        } catch (const Error& e) {
            errors[static_cast<std::size_t>(i)] = e.what();
            bounds[static_cast<std::size_t>(i)].lambda = la.at(i);
        }
    });
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        const auto& b = bounds[i];
        out.iterations += b.iterations;
        if (!errors[i].empty()) ++out.failures;
        for (int j = 0; j < ta.points; ++j) {
            const double t = ta.at(j);
            const std::string label = errors[i].empty() ? spin2_phase_name(classify_n2(b, t)) : "failed";
            out.table.rows.push_back({format_number(b.lambda), format_number(t), label,
                                      errors[i].empty() ? format_number(b.t_singlet) : "nan",
                                      errors[i].empty() ? format_number(b.t_ferro) : "nan"});
        }
    }
    const double t0 = hopping_unit_n2(c.U0, c.U2, 2 * c.dim);
    out.extra["t0"] = t0;
    if (c.axes.at("t").max * t0 > 0.3 * c.U0) out.extra["warning"] = "t above 0.3 U0: outside the perturbative regime";
    nlohmann::ordered_json errs = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < errors.size(); ++i)
        if (!errors[i].empty()) errs.push_back({{"lambda_over_U2", bounds[i].lambda}, {"error", errors[i]}});
    if (!errs.empty()) out.extra["errors"] = errs;
    return out;
}

Collected run_qc(const RunConfig& c) {
    Collected out;
    out.table.header = {"theta_over_pi", "J1_over_J", "J2_over_J", "qc_frozen_over_J", "qc_over_J",
                        "D0",            "D1",        "converged", "iterations"};
    const KGrid grid(c.dim, c.L);
    const double J = c.spin.J.value_or(1.0);
    const Axis ta = c.axes.at("theta").axis();
    const double T = c.temperatures.front() * J;
    QcOptions opts;
    opts.fixed_point = fixed_point_options(c);
    opts.fluctuations = c.method == Method::self_consistent;
    std::vector<std::vector<std::string>> rows(static_cast<std::size_t>(ta.points));
    std::vector<int> its(rows.size(), 0);
    std::vector<char> failed(rows.size(), 0);
    parallel_for(ta.points, resolve_workers(c.workers), [&](int i) {
        const double th = ta.at(i);
        const SpinExchangeParams p = SpinExchangeParams::from_theta(th * std::numbers::pi, J, 0.0, 0.0, 2 * c.dim);
        std::vector<std::string> row{format_number(th), format_number(p.J1 / J), format_number(p.J2 / J)};
        if (!(p.J1 > p.J2)) {
            row.insert(row.end(), {"nan", "nan", "nan", "nan", "1", "0"});
        } else {
            row.push_back(format_number(2.0 * p.z * (p.J1 - p.J2) / J));
            try {
                const QcResult r = qc_self_consistent(p, grid, T, opts);
                row.insert(row.end(), {format_number(r.q_c / J), format_number(r.D0), format_number(r.D1), "1",
                                       std::to_string(r.iterations)});
                its[static_cast<std::size_t>(i)] = r.iterations;
            } catch (const Error& e) {
                const auto* ce = dynamic_cast<const ConvergenceError*>(&e);
                row.insert(row.end(), {"nan", "nan", "nan", "0", std::to_string(ce ? ce->iterations() : 0)});
                failed[static_cast<std::size_t>(i)] = 1;
            }
        }
        rows[static_cast<std::size_t>(i)] = std::move(row);
    });
    out.table.rows = std::move(rows);
    for (std::size_t i = 0; i < its.size(); ++i) {
        out.iterations += its[i];
        out.failures += failed[i];
    }
    return out;
}

} // namespace

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string ResultTable::to_csv() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out += ',';
            out += csv_field(fields[i]);
        }
        out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
}

RunResult execute(const RunConfig& config) {
    config.validate();
    Collected col;
    switch (config.scenario) {
    case RunScenario::misf_afm:
    case RunScenario::misf_fm:
    case RunScenario::misf_field_T: col = run_misf(config); break;
    case RunScenario::mott1_diagram: col = run_mott1(config); break;
    case RunScenario::mott2_diagram: col = run_mott2(config); break;
    case RunScenario::qc_curve: col = run_qc(config); break;
    }
    RunResult r;
    r.table = std::move(col.table);
    r.failures = col.failures;
    r.total_iterations = col.iterations;

    nlohmann::ordered_json meta;
    meta["version"] = SBO_VERSION;
    meta["scenario"] = run_scenario_name(config.scenario);
    meta["method"] = method_name(config.method);
    meta["resolved"] = {{"U0", config.U0},
                        {"U2", config.U2},
                        {"eta", config.eta},
                        {"dim", config.dim},
                        {"z", 2 * config.dim},
                        {"L", config.L},
                        {"temperatures", config.temperatures},
                        {"workers", resolve_workers(config.workers)},
                        {"seed", config.seed}};
    meta["solver"] = {{"damping", config.solver.damping},
                      {"tolerance", config.solver.tolerance},
                      {"max_iterations", config.solver.max_iterations},
                      {"t_tolerance", config.solver.t_tolerance},
                      {"search_iterations", config.solver.search_iterations}};
    meta["points"] = r.table.rows.size();
    meta["failures"] = r.failures;
    meta["total_iterations"] = r.total_iterations;
    meta["columns"] = r.table.header;
    if (!col.extra.empty()) meta["scenario_data"] = col.extra;
    meta["config"] = nlohmann::ordered_json::parse(config_to_json(config));
    r.metadata = meta.dump(2) + "\n";
    if (!config.output.plot.empty()) r.plot = emit_plot_script(config.scenario, config.output.table);
    return r;
}

std::string emit_plot_script(RunScenario scenario, const std::string& table_file) {
    std::string s = "# gnuplot script\nset datafile separator ','\nset key outside\n";
    const std::string f = "'" + table_file + "'";
    switch (scenario) {
    case RunScenario::misf_afm:
    case RunScenario::misf_fm:
        s += "set xlabel 'mu/U0'\nset ylabel 'zt/U0'\n";
        s += "plot " + f + " using 1:(4*$3) every ::1 with lines title 'MI-SF boundary'\n";
        break;
    case RunScenario::misf_field_T:
        s += "set xlabel 'mu/U0'\nset ylabel 'zt/U0'\n";
        s += "plot for [T in system(\"awk -F, 'NR>1{print $1}' " + table_file +
             " | sort -u\")] " + f + " using ($1==T+0 ? $2 : 1/0):(4*$4) with lines title 'T/U0='.T\n";
        break;
    case RunScenario::mott1_diagram:
        s += "set xlabel 'lambda/zJ'\nset ylabel 'q/zJ'\n";
        s += "plot " + f +
             " using 1:2:(strcol(3) eq 'nematic' ? 0 : strcol(3) eq 'partially-magnetic' ? 1 : "
             "strcol(3) eq 'ferromagnetic' ? 2 : 3) every ::1 with points pt 5 palette title 'phase'\n";
        break;
    case RunScenario::mott2_diagram:
        s += "set xlabel 'lambda/U2'\nset ylabel 't/t0'\n";
        s += "plot " + f + " using 1:4 every ::1 with lines title 'singlet edge', \\\n     " + f +
             " using 1:5 every ::1 with lines title 'ferromagnetic edge'\n";
        break;
    case RunScenario::qc_curve:
        s += "set xlabel 'theta/pi'\nset ylabel 'q_c/J'\n";
        s += "plot " + f + " using 1:4 every ::1 with lines title 'frozen', \\\n     " + f +
             " using 1:5 every ::1 with lines title 'self-consistent'\n";
        break;
    }
    return s;
}

void write_outputs(const RunConfig& config, const RunResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& text) {
        if (name.empty()) return;
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw Error("cannot write " + (dir / name).string());
        out << text;
    };
    write(config.output.table, result.table.to_csv());
    write(config.output.metadata, result.metadata);
    write(config.output.plot, result.plot);
}

} // namespace sbo

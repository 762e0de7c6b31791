#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "sbo/errors.hpp"
#include "sbo/sweep.hpp"

namespace sbo {

namespace {

constexpr std::array<std::pair<RunScenario, const char*>, 6> kScenarios{{
    {RunScenario::misf_afm, "misf-afm"},
    {RunScenario::misf_fm, "misf-fm"},
    {RunScenario::misf_field_T, "misf-field-T"},
    {RunScenario::mott1_diagram, "mott1-diagram"},
    {RunScenario::mott2_diagram, "mott2-diagram"},
    {RunScenario::qc_curve, "qc-curve"},
}};

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
        std::ostringstream out;
        out << source_;
        if (at.IsDefined() && at.Mark().line >= 0) out << ":" << at.Mark().line + 1;
        out << ": " << msg;
        throw ConfigError(out.str());
    }

    template <class T>
    T get(const YAML::Node& node, const std::string& key) const {
        if (!node.IsScalar() && !(std::is_same_v<T, std::vector<double>> && node.IsSequence()))
            fail(node, "key '" + key + "' needs a scalar value");
        try {
            return node.as<T>();
        } catch (const YAML::Exception&) {
            fail(node, "bad value for '" + key + "'");
        }
    }

    double number(const YAML::Node& node, const std::string& key) const {
        const double v = get<double>(node, key);
        if (!std::isfinite(v)) fail(node, "'" + key + "' must be finite");
        return v;
    }

    int integer(const YAML::Node& node, const std::string& key) const { return get<int>(node, key); }

    void require_map(const YAML::Node& node, const std::string& what) const {
        if (!node.IsMap()) fail(node, "'" + what + "' must be a mapping");
    }

private:
    std::string source_;
};

AxisSpec read_axis(const Reader& rd, const YAML::Node& node, const std::string& name) {
    rd.require_map(node, "axes." + name);
    AxisSpec a;
    bool has_min = false, has_max = false, has_points = false;
    for (const auto& kv : node) {
        const std::string key = kv.first.as<std::string>();
        if (key == "min") {
            a.min = rd.number(kv.second, key);
            has_min = true;
        } else if (key == "max") {
            a.max = rd.number(kv.second, key);
            has_max = true;
        } else if (key == "points") {
            a.points = rd.integer(kv.second, key);
            has_points = true;
        } else {
            rd.fail(kv.first, "unknown key '" + key + "' in axes." + name);
        }
    }
    if (!has_min || !has_max || !has_points) rd.fail(node, "axes." + name + " needs min, max and points");
    if (a.points < 2) rd.fail(node, "axes." + name + " needs at least 2 points");
    if (!(a.max >= a.min)) rd.fail(node, "axes." + name + " has max < min");
    return a;
}

} // namespace

const char* run_scenario_name(RunScenario s) {
    for (const auto& [k, name] : kScenarios)
        if (k == s) return name;
    return "?";
}

RunScenario parse_run_scenario(const std::string& name) {
    std::string all;
    for (const auto& [k, n] : kScenarios) {
        if (name == n) return k;
        all += all.empty() ? n : std::string(", ") + n;
    }
    throw ConfigError("unknown scenario '" + name + "' (supported: " + all + ")");
}

Method parse_method(const std::string& name) {
    if (name == "analytic") return Method::analytic;
    if (name == "self-consistent") return Method::self_consistent;
    throw ConfigError("unknown method '" + name + "' (supported: analytic, self-consistent)");
}

RunConfig parse_config(const std::string& text, const std::string& source) {
    const Reader rd(source);
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    if (root.IsNull()) throw ConfigError(source + ": empty config");
    rd.require_map(root, "config");

    RunConfig c;
    bool has_scenario = false;
    for (const auto& sec : root) {
        const std::string section = sec.first.as<std::string>();
        const YAML::Node& body = sec.second;
        if (section == "axes") {
            rd.require_map(body, section);
            for (const auto& kv : body) {
                const std::string name = kv.first.as<std::string>();
                static const std::set<std::string> known{"mu", "lambda", "q", "t", "theta"};
                if (!known.count(name)) rd.fail(kv.first, "unknown axis '" + name + "'");
                c.axes[name] = read_axis(rd, kv.second, name);
            }
            continue;
        }
        rd.require_map(body, section);
        for (const auto& kv : body) {
            const std::string key = kv.first.as<std::string>();
            const YAML::Node& v = kv.second;
            auto unknown = [&] { rd.fail(kv.first, "unknown key '" + key + "' in section '" + section + "'"); };
            try {
                if (section == "run") {
                    if (key == "scenario") {
                        c.scenario = parse_run_scenario(rd.get<std::string>(v, key));
                        has_scenario = true;
                    } else if (key == "method") {
                        c.method = parse_method(rd.get<std::string>(v, key));
                    } else if (key == "workers") {
                        c.workers = rd.integer(v, key);
                    } else if (key == "seed") {
                        c.seed = rd.get<std::uint64_t>(v, key);
                    } else {
                        unknown();
                    }
                } else if (section == "model") {
                    if (key == "U0") c.U0 = rd.number(v, key);
                    else if (key == "U2") c.U2 = rd.number(v, key);
                    else if (key == "eta") c.eta = rd.number(v, key);
                    else if (key == "dim") c.dim = rd.integer(v, key);
                    else if (key == "temperatures") {
                        c.temperatures = v.IsSequence() ? rd.get<std::vector<double>>(v, key)
                                                        : std::vector<double>{rd.number(v, key)};
                        if (c.temperatures.empty()) rd.fail(v, "'temperatures' is empty");
                    } else unknown();
                } else if (section == "spin") {
                    if (key == "J1") c.spin.J1 = rd.number(v, key);
                    else if (key == "J2") c.spin.J2 = rd.number(v, key);
                    else if (key == "theta") c.spin.theta = rd.number(v, key);
                    else if (key == "J") c.spin.J = rd.number(v, key);
                    else if (key == "t") c.spin.t = rd.number(v, key);
                    else if (key == "lambda") c.spin.lambda = rd.number(v, key);
                    else if (key == "q") c.spin.q = rd.number(v, key);
                    else unknown();
                } else if (section == "grid") {
                    if (key == "L") c.L = rd.integer(v, key);
                    else unknown();
                } else if (section == "solver") {
                    if (key == "damping") c.solver.damping = rd.number(v, key);
                    else if (key == "tolerance") c.solver.tolerance = rd.number(v, key);
                    else if (key == "max_iterations") c.solver.max_iterations = rd.integer(v, key);
                    else if (key == "t_tolerance") c.solver.t_tolerance = rd.number(v, key);
                    else if (key == "search_iterations") c.solver.search_iterations = rd.integer(v, key);
                    else unknown();
                } else if (section == "output") {
                    if (key == "table") c.output.table = v.IsNull() ? "" : rd.get<std::string>(v, key);
                    else if (key == "metadata") c.output.metadata = v.IsNull() ? "" : rd.get<std::string>(v, key);
                    else if (key == "plot") c.output.plot = v.IsNull() ? "" : rd.get<std::string>(v, key);
                    else unknown();
                } else {
                    rd.fail(sec.first, "unknown section '" + section + "'");
                }
            } catch (const ConfigError& e) {
                const std::string what = e.what();
                if (what.rfind(source, 0) == 0) throw;
                rd.fail(v, what);
            }
        }
    }
    if (!has_scenario) throw ConfigError(source + ": run.scenario is required");
    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

void RunConfig::validate() const {
    auto need_axes = [&](std::initializer_list<const char*> names) {
        for (const char* n : names)
            if (!axes.count(n))
                throw ConfigError(std::string("scenario ") + run_scenario_name(scenario) + " needs axes." + n);
        for (const auto& [name, a] : axes) {
            bool used = false;
            for (const char* n : names) used = used || name == n;
            if (!used)
                throw ConfigError("axes." + name + " is not used by scenario " + run_scenario_name(scenario));
            if (a.points < 2) throw ConfigError("axes." + name + " needs at least 2 points");
        }
    };
    if (!(U0 > 0.0)) throw ConfigError("model.U0 must be positive");
    if (dim < 1 || dim > 3) throw ConfigError("model.dim must be 1, 2 or 3");
    if (L < 2) throw ConfigError("grid.L must be >= 2");
    if (workers < 0) throw ConfigError("run.workers must be >= 0");
    for (double T : temperatures)
        if (!(T >= 0.0) || !std::isfinite(T)) throw ConfigError("model.temperatures must be >= 0");
    if (!(solver.damping > 0.0 && solver.damping <= 1.0)) throw ConfigError("solver.damping must be in (0, 1]");
    if (!(solver.tolerance > 0.0) || !(solver.t_tolerance > 0.0)) throw ConfigError("solver tolerances must be positive");
    if (solver.max_iterations < 1 || solver.search_iterations < 1)
        throw ConfigError("solver iteration limits must be positive");
    if (output.table.empty()) throw ConfigError("output.table must not be empty");

    const bool single_T = temperatures.size() == 1;
    switch (scenario) {
    case RunScenario::misf_afm:
        need_axes({"mu"});
        if (!(U2 > 0.0)) throw ConfigError("misf-afm needs model.U2 > 0");
        if (!single_T) throw ConfigError("misf-afm takes one temperature (use misf-field-T for a list)");
        break;
    case RunScenario::misf_fm:
        need_axes({"mu"});
        if (!(U2 <= 0.0)) throw ConfigError("misf-fm needs model.U2 <= 0");
        if (!single_T) throw ConfigError("misf-fm takes one temperature (use misf-field-T for a list)");
        break;
    case RunScenario::misf_field_T:
        need_axes({"mu"});
        if (!(U2 > 0.0)) throw ConfigError("misf-field-T needs model.U2 > 0");
        if (!(eta > 0.0)) throw ConfigError("misf-field-T needs model.eta > 0");
        break;
    case RunScenario::mott1_diagram: {
        need_axes({"lambda", "q"});
        const int forms = (spin.J1 || spin.J2 ? 1 : 0) + (spin.theta || spin.J ? 1 : 0) + (spin.t ? 1 : 0);
        if (forms != 1) throw ConfigError("spin needs exactly one of (J1, J2), (theta, J) or t");
        if ((spin.J1 || spin.J2) && !(spin.J1 && spin.J2)) throw ConfigError("spin needs both J1 and J2");
        if ((spin.theta || spin.J) && !(spin.theta && spin.J)) throw ConfigError("spin needs both theta and J");
        if (method != Method::analytic) throw ConfigError("mott1-diagram supports method analytic only");
        if (axes.at("q").min < 0.0) throw ConfigError("axes.q must be >= 0");
        break;
    }
    case RunScenario::mott2_diagram:
        need_axes({"lambda", "t"});
        if (!(U2 > 0.0)) throw ConfigError("mott2-diagram needs model.U2 > 0");
        break;
    case RunScenario::qc_curve:
        need_axes({"theta"});
        if (!single_T) throw ConfigError("qc-curve takes one temperature");
        if (spin.J && !(*spin.J > 0.0)) throw ConfigError("spin.J must be positive");
        break;
    }
}

std::string config_to_json(const RunConfig& c) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["run"] = {{"scenario", run_scenario_name(c.scenario)},
                {"method", method_name(c.method)},
                {"workers", c.workers},
                {"seed", c.seed}};
    j["model"] = {{"U0", c.U0}, {"U2", c.U2}, {"eta", c.eta}, {"dim", c.dim}, {"temperatures", c.temperatures}};
    ordered_json spin = ordered_json::object();
    if (c.spin.J1) spin["J1"] = *c.spin.J1;
    if (c.spin.J2) spin["J2"] = *c.spin.J2;
    if (c.spin.theta) spin["theta"] = *c.spin.theta;
    if (c.spin.J) spin["J"] = *c.spin.J;
    if (c.spin.t) spin["t"] = *c.spin.t;
    spin["lambda"] = c.spin.lambda;
    spin["q"] = c.spin.q;
    j["spin"] = spin;
    ordered_json axes = ordered_json::object();
    for (const auto& [name, a] : c.axes) axes[name] = {{"min", a.min}, {"max", a.max}, {"points", a.points}};
    j["axes"] = axes;
    j["grid"] = {{"L", c.L}};
    j["solver"] = {{"damping", c.solver.damping},
                   {"tolerance", c.solver.tolerance},
                   {"max_iterations", c.solver.max_iterations},
                   {"t_tolerance", c.solver.t_tolerance},
                   {"search_iterations", c.solver.search_iterations}};
    j["output"] = {{"table", c.output.table}, {"metadata", c.output.metadata}, {"plot", c.output.plot}};
    return j.dump(2);
}

} // namespace sbo

#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pdmpnet/audit.hpp"
#include "pdmpnet/hjb.hpp"
#include "pdmpnet/linearize.hpp"
#include "pdmpnet/projection.hpp"
#include "pdmpnet/simulate.hpp"

namespace pdmpnet::cli {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- configuration

json default_config() {
    const json point_o = {{"edge", -1}, {"coord", 0.0}, {"mode", 3}};
    return {
        {"model",
         {{"name", "traffic3"},
          {"params", {{"l0", 0.1}, {"lambda0", 1.0}, {"delta", 1.0}, {"q_self", 0.0}}},
          {"constants",
           {{"beta", nullptr},
            {"eta", nullptr},
            {"kappa", nullptr},
            {"f_bound", nullptr},
            {"lambda_bound", nullptr},
            {"l_bound", nullptr},
            {"c_a1", nullptr},
            {"lip_f", nullptr},
            {"lip_l", nullptr},
            {"lip_lambda", nullptr},
            {"lip_q", nullptr}}}}},
        {"grid", {{"dx", 0.025}, {"h", nullptr}, {"n_a", 9}, {"eps", 0.1}, {"rho", nullptr}, {"width", nullptr}}},
        {"seed", nullptr},
        {"audit", {{"n_samples", 2000}, {"require", json::array()}}},
        {"solve", {{"tol", 1e-8}, {"tol_outer", 1e-7}, {"polish", true}}},
        {"simulate",
         {{"start", point_o},
          {"policy", "greedy"},
          {"n_paths", 1000},
          {"horizon", 20.0},
          {"h", 1e-3},
          {"trajectory_jumps", 20}}},
        {"project",
         {{"edge", 0},
          {"mode", 0},
          {"radii", {1e-2, 3e-3, 1e-3}},
          {"n_pairs", 100},
          {"eps", 0.5},
          {"junction_fraction", 0.5},
          {"h", 1e-3}}},
        {"extend", {{"eps_ladder", {0.2, 0.1, 0.05}}, {"lags", {1, 2, 4}}}},
        {"linearize",
         {{"points",
           json::array({point_o,
                        {{"edge", 0}, {"coord", 0.5}, {"mode", 0}},
                        {{"edge", 1}, {"coord", 0.3}, {"mode", 1}},
                        {{"edge", 2}, {"coord", 0.8}, {"mode", 2}},
                        {{"edge", 0}, {"coord", 1.0}, {"mode", 3}}})},
          {"n_paths", 1000},
          {"horizon", 20.0},
          {"h_sim", 1e-3},
          {"tol_sub_factor", 1.0}}},
    };
}

namespace {

[[noreturn]] void config_error(const std::string& what) { throw ConfigError(what); }

bool same_kind(const json& def, const json& val) {
    if (def.is_null()) return val.is_null() || val.is_number();
    if (def.is_number()) return val.is_number();
    if (def.is_boolean()) return val.is_boolean();
    if (def.is_string()) return val.is_string();
    if (def.is_array()) return val.is_array();
    if (def.is_object()) return val.is_object();
    return false;
}

json merge(const json& def, const json& user, const std::string& path) {
    if (!same_kind(def, user)) config_error("key '" + path + "' has the wrong type");
    if (def.is_object()) {
        json out = def;
        for (auto it = user.begin(); it != user.end(); ++it) {
            const std::string sub = path.empty() ? it.key() : path + "." + it.key();
            if (!def.contains(it.key())) config_error("unknown key '" + sub + "'");
            out[it.key()] = merge(def.at(it.key()), it.value(), sub);
        }
        return out;
    }
    if (def.is_array() && !def.empty()) {
        json out = json::array();
        for (std::size_t i = 0; i < user.size(); ++i)
            out.push_back(merge(def.front(), user[i], path + "[" + std::to_string(i) + "]"));
        return out;
    }
    if (def.is_array()) {
        for (const auto& e : user)
            if (!e.is_string()) config_error("key '" + path + "' must be a list of strings");
    }
    return user;
}

void require(bool ok, const std::string& what) {
    if (!ok) config_error(what);
}

void check_point(const json& p, const std::string& where) {
    require(p.at("edge").is_number_integer(), where + ".edge must be an integer");
    require(p.at("mode").is_number_integer(), where + ".mode must be an integer");
}

}  // namespace

json validate_config(const json& user) {
    if (!user.is_object()) config_error("configuration must be a JSON object");
    json cfg = merge(default_config(), user, "");
    const auto& g = cfg["grid"];
    require(cfg["model"]["name"] == "traffic3", "unknown model '" + cfg["model"]["name"].get<std::string>() + "'");
    require(g["dx"].get<double>() > 0.0 && g["dx"].get<double>() <= 0.5, "grid.dx must lie in (0, 0.5]");
    require(g["h"].is_null() || g["h"].get<double>() > 0.0, "grid.h must be positive");
    require(g["n_a"].is_number_integer() && g["n_a"].get<int>() >= 1, "grid.n_a must be a positive integer");
    require(g["eps"].get<double>() > 0.0 && g["eps"].get<double>() < 1.0, "grid.eps must lie in (0, 1)");
    require(cfg["audit"]["n_samples"].get<int>() >= 1, "audit.n_samples must be positive");
    require(cfg["simulate"]["n_paths"].get<int>() >= 1, "simulate.n_paths must be positive");
    require(cfg["simulate"]["horizon"].get<double>() > 0.0, "simulate.horizon must be positive");
    const std::string pol = cfg["simulate"]["policy"];
    require(pol == "greedy" || pol == "canonical", "simulate.policy must be 'greedy' or 'canonical'");
    check_point(cfg["simulate"]["start"], "simulate.start");
    require(cfg["project"]["radii"].size() >= 3, "project.radii needs at least three values");
    require(cfg["project"]["n_pairs"].get<int>() >= 1, "project.n_pairs must be positive");
    require(!cfg["extend"]["eps_ladder"].empty(), "extend.eps_ladder must not be empty");
    require(!cfg["linearize"]["points"].empty(), "linearize.points must not be empty");
    for (std::size_t i = 0; i < cfg["linearize"]["points"].size(); ++i)
        check_point(cfg["linearize"]["points"][i], "linearize.points[" + std::to_string(i) + "]");
    require(cfg["linearize"]["n_paths"].get<int>() >= 2, "linearize.n_paths must be at least 2");
    return cfg;
}

json load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) config_error("cannot read config file '" + path.string() + "'");
    json user;
    try {
        user = json::parse(in);
    } catch (const json::exception& e) {
        config_error(std::string("malformed JSON: ") + e.what());
    }
    return validate_config(user);
}

std::string RunConfig::hash() const {
    const std::string s = doc.dump();
    std::uint64_t hv = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        hv ^= ch;
        hv *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hv));
    return buf;
}

std::shared_ptr<const PdmpModel> build_model(const RunConfig& cfg) {
    const auto& m = cfg.section("model");
    const auto& p = m.at("params");
    std::shared_ptr<const PdmpModel> model;
    try {
        model = traffic3_model(p.at("l0"), p.at("lambda0"), p.at("delta"), p.at("q_self"));
    } catch (const BadParameter& e) {
        config_error(e.what());
    }
    ModelConstants k = model->constants();
    const auto& c = m.at("constants");
    auto set = [&](const char* key, double& field) {
        if (!c.at(key).is_null()) field = c.at(key).get<double>();
    };
    set("beta", k.beta);
    set("eta", k.eta);
    set("kappa", k.kappa);
    set("f_bound", k.f_bound);
    set("lambda_bound", k.lambda_bound);
    set("l_bound", k.l_bound);
    set("c_a1", k.c_a1);
    set("lip_f", k.lip_f);
    set("lip_l", k.lip_l);
    set("lip_lambda", k.lip_lambda);
    set("lip_q", k.lip_q);
    return model->with_constants(k);
}

// ---------------------------------------------------------------- helpers

namespace {

struct Context {
    const RunConfig& cfg;
    std::shared_ptr<const PdmpModel> model;

    double dx() const { return cfg.section("grid").at("dx"); }
    double h() const {
        const auto& v = cfg.section("grid").at("h");
        return v.is_null() ? dx() / (2.0 * model->constants().f_bound) : v.get<double>();
    }
    int n_a() const { return cfg.section("grid").at("n_a"); }
    ValueSolveOptions solve_options() const {
        const auto& s = cfg.section("solve");
        ValueSolveOptions o;
        o.tol = s.at("tol");
        o.tol_outer = s.at("tol_outer");
        o.polish = s.at("polish");
        return o;
    }
    std::shared_ptr<const DiscreteControlSet> controls() const {
        auto grid = std::make_shared<Grid>(model->network_ptr(), dx());
        return std::make_shared<DiscreteControlSet>(model, grid, h(), n_a());
    }
};

std::string header(const RunConfig& cfg, const std::string& cmd) {
    return "# pdmpnet " + cmd + " config_hash=" + cfg.hash() + " seed=" + std::to_string(cfg.seed) + "\n";
}

void write_text(const RunConfig& cfg, const std::string& name, const std::string& body) {
    fs::create_directories(cfg.out);
    std::ofstream out(cfg.out / name, std::ios::binary);
    if (!out) throw Error("IoError", "cannot write " + (cfg.out / name).string());
    out << body;
}

void write_csv(const RunConfig& cfg, const std::string& cmd, const std::string& name, const std::string& csv) {
    write_text(cfg, name, header(cfg, cmd) + csv);
}

void write_json(const RunConfig& cfg, const std::string& cmd, const std::string& name, json body) {
    json doc = {{"command", cmd}, {"config_hash", cfg.hash()}, {"seed", cfg.seed}, {"result", std::move(body)}};
    write_text(cfg, name, doc.dump(2) + "\n");
}

void say(const RunConfig& cfg, const std::string& line) {
    if (!cfg.quiet) std::cout << line << "\n";
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

NetworkPoint point_of(const json& p) {
    const int edge = p.at("edge");
    return edge < 0 ? NetworkPoint::junction() : NetworkPoint::on(edge, p.at("coord").get<double>());
}

/// Assumptions each command relies on.
std::vector<std::string> required_assumptions(const std::string& cmd) {
    if (cmd == "simulate") return {"A2", "A3"};
    if (cmd == "solve") return {"A2", "A3", "Aa"};
    if (cmd == "project") return {"Aa", "Ab"};
    if (cmd == "extend") return {"A2", "A3", "Ab'", "B", "C"};
    if (cmd == "linearize") return {"A2", "A3", "Aa", "Ab'", "B", "C"};
    return {};
}

/// Runs the audit for a downstream command; returns false (after writing the
/// report) when a needed assumption fails.
bool audit_gate(const Context& ctx, const std::string& cmd) {
    const auto names = required_assumptions(cmd);
    if (names.empty()) return true;
    const AuditReport rep =
        audit_assumptions(*ctx.model, ctx.cfg.section("audit").at("n_samples"), ctx.cfg.seed);
    if (rep.passed_all_of(names)) return true;
    write_json(ctx.cfg, cmd, "audit.json", rep.to_json());
    std::cerr << json({{"error", "AuditFailed"}, {"command", cmd}, {"required", names}}).dump() << "\n";
    return false;
}

void validate_point(const Dynamics& dyn, const NetworkPoint& x, int mode, const std::string& where) {
    if (!dyn.network().contains(x)) config_error(where + " is not on the network");
    if (mode < 0 || mode >= dyn.num_modes()) config_error(where + " has an invalid mode");
}

}  // namespace

// ---------------------------------------------------------------- commands

int cmd_audit(const RunConfig& cfg) {
    Context ctx{cfg, build_model(cfg)};
    const AuditReport rep = audit_assumptions(*ctx.model, cfg.section("audit").at("n_samples"), cfg.seed);
    write_json(cfg, "audit", "audit.json", rep.to_json());
    std::vector<std::string> req = cfg.section("audit").at("require");
    const bool ok = req.empty() ? rep.all_passed() : rep.passed_all_of(req);
    for (const auto& e : rep.entries) say(cfg, (e.pass ? "pass " : "FAIL ") + e.name + (e.pass ? "" : ": " + e.detail));
    return ok ? 0 : 1;
}

int cmd_simulate(const RunConfig& cfg) {
    Context ctx{cfg, build_model(cfg)};
    if (!audit_gate(ctx, "simulate")) return 1;
    const auto& s = cfg.section("simulate");
    const NetworkPoint x = point_of(s.at("start"));
    const int mode = s.at("start").at("mode");
    validate_point(*ctx.model, x, mode, "simulate.start");
    const double h_sim = s.at("h");
    Policy policy;
    if (s.at("policy") == "greedy") {
        auto cs = ctx.controls();
        policy = greedy_policy(cs, solve_value(*cs, ctx.solve_options()));
    } else {
        auto model = ctx.model;
        policy = Policy::open_loop(
            [model, h_sim](const NetworkPoint& p, int g) { return canonical_policy(*model, g, p, h_sim); });
    }
    const double T = s.at("horizon");
    StopRule stop;
    stop.horizon = T;
    stop.max_jumps = s.at("trajectory_jumps");
    RngStream rng(cfg.seed, 0);
    const Trajectory traj = simulate(*ctx.model, x, mode, policy, stop, rng, h_sim);
    write_csv(cfg, "simulate", "trajectory.csv", traj.to_csv(*ctx.model));
    const McEstimate mc = mc_cost(*ctx.model, x, mode, policy, s.at("n_paths"), T, cfg.seed, h_sim);
    write_json(cfg, "simulate", "mc_cost.json",
               {{"estimate", mc.estimate},
                {"stderr", mc.stderr_},
                {"tail_bound", mc.tail_bound},
                {"n_paths", mc.n_paths},
                {"jumps_in_trajectory", traj.jump_times.size()}});
    say(cfg, "mc cost " + fmt("%.6f", mc.estimate) + " ± " + fmt("%.2e", mc.stderr_));
    return 0;
}

int cmd_solve(const RunConfig& cfg) {
    Context ctx{cfg, build_model(cfg)};
    if (!audit_gate(ctx, "solve")) return 1;
    auto cs = ctx.controls();
    const ValueField v = solve_value(*cs, ctx.solve_options());
    const HjbResidual res = hjb_residual(*cs, v);
    write_csv(cfg, "solve", "value.csv", v.to_csv());
    write_json(cfg, "solve", "iteration_log.json", iteration_log(v));
    write_json(cfg, "solve", "hjb_residual.json", res.to_json());
    say(cfg, "outer iterations " + std::to_string(v.scheme.outer_iterations) + ", interior residual " +
                 fmt("%.3e", res.interior_abs()));
    return 0;
}

int cmd_project(const RunConfig& cfg) {
    Context ctx{cfg, build_model(cfg)};
    if (!audit_gate(ctx, "project")) return 1;
    const auto& p = cfg.section("project");
    const int edge = p.at("edge"), mode = p.at("mode");
    if (edge < 0 || edge >= ctx.model->network().num_edges()) config_error("project.edge out of range");
    if (mode < 0 || mode >= ctx.model->num_modes()) config_error("project.mode out of range");
    ExponentOptions opt;
    opt.eps = p.at("eps");
    opt.junction_fraction = p.at("junction_fraction");
    opt.h = p.at("h");
    const std::vector<double> radii = p.at("radii");
    const ExponentReport rep = verify_projection_exponent(*ctx.model, edge, mode, radii, p.at("n_pairs"), cfg.seed, opt);
    write_csv(cfg, "project", "projection_exponent.csv", rep.to_csv());
    write_json(cfg, "project", "projection.json",
               {{"edge", edge},
                {"mode", mode},
                {"active", ctx.model->modes().is_active(edge, mode)},
                {"slope", rep.slope},
                {"residual", rep.residual},
                {"lemma_radius", rep.lemma_radius},
                {"junction_violations", rep.junction_violations}});
    say(cfg, "fitted exponent " + fmt("%.4f", rep.slope));
    return 0;
}

namespace {

struct LadderRung {
    double eps, rho, sup_gap, max_above;
    std::vector<double> modulus;
};

std::vector<LadderRung> shaking_ladder(const Context& ctx, const ValueField& v, std::vector<ExtendedSolve>* keep) {
    const auto& e = ctx.cfg.section("extend");
    const std::vector<double> ladder = e.at("eps_ladder");
    const std::vector<int> lags = e.at("lags");
    const auto& rho_cfg = ctx.cfg.section("grid").at("rho");
    std::vector<LadderRung> out;
    for (double eps : ladder) {
        const ShakingScales sc = shaking_scales(*ctx.model, eps);
        const double rho = rho_cfg.is_null() ? std::min(sc.rho_ext, eps) : std::min(rho_cfg.get<double>(), eps);
        auto shaken = shake(extend_dynamics(*ctx.model, extend(ctx.model->network_ptr(), eps)), rho);
        ExtendedSolve es;
        try {
            es = solve_value_extended(shaken, ctx.dx(), ctx.h(), ctx.n_a(), ctx.solve_options());
        } catch (const BadParameter& err) {
            config_error(std::string("grid.dx does not fit the extended network: ") + err.what());
        }
        LadderRung r{eps, rho, 0.0, -kInf, {}};
        for (std::size_t i = 0; i < v.data().size(); ++i) {
            r.sup_gap = std::max(r.sup_gap, std::abs(es.restricted.data()[i] - v.data()[i]));
            r.max_above = std::max(r.max_above, es.restricted.data()[i] - v.data()[i]);
        }
        for (int lag : lags) r.modulus.push_back(empirical_modulus(es.restricted, lag));
        out.push_back(r);
        if (keep) keep->push_back(std::move(es));
    }
    return out;
}

}  // namespace

int cmd_extend(const RunConfig& cfg) {
    Context ctx{cfg, build_model(cfg)};
    if (!audit_gate(ctx, "extend")) return 1;
    auto cs = ctx.controls();
    const ValueField v = solve_value(*cs, ctx.solve_options());
    const auto ladder = shaking_ladder(ctx, v, nullptr);
    const std::vector<int> lags = cfg.section("extend").at("lags");
    std::ostringstream csv;
    csv << "eps,rho,sup_gap,max_above";
    for (int lag : lags) csv << ",modulus_lag" << lag;
    csv << "\n";
    json rows = json::array();
    char buf[128];
    for (const auto& r : ladder) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g", r.eps, r.rho, r.sup_gap, r.max_above);
        csv << buf;
        for (double m : r.modulus) {
            std::snprintf(buf, sizeof buf, ",%.17g", m);
            csv << buf;
        }
        csv << "\n";
        rows.push_back({{"eps", r.eps}, {"rho", r.rho}, {"sup_gap", r.sup_gap}, {"max_above", r.max_above}, {"modulus", r.modulus}});
        say(cfg, "eps " + fmt("%.3f", r.eps) + " sup gap " + fmt("%.4e", r.sup_gap));
    }
    write_csv(cfg, "extend", "shaking_ladder.csv", csv.str());
    write_json(cfg, "extend", "shaking_ladder.json", rows);
    return 0;
}

int cmd_linearize(const RunConfig& cfg) {
    Context ctx{cfg, build_model(cfg)};
    if (!audit_gate(ctx, "linearize")) return 1;
    const auto& l = cfg.section("linearize");
    auto cs = ctx.controls();
    const ValueField v = solve_value(*cs, ctx.solve_options());
    std::vector<std::pair<NetworkPoint, int>> points;
    for (std::size_t i = 0; i < l.at("points").size(); ++i) {
        const auto& p = l.at("points")[i];
        points.emplace_back(point_of(p), p.at("mode").get<int>());
        validate_point(*ctx.model, points.back().first, points.back().second,
                       "linearize.points[" + std::to_string(i) + "]");
    }
    const DualityReport rep = duality_report(cs, v, points);
    write_csv(cfg, "linearize", "duality.csv", rep.to_csv());
    write_json(cfg, "linearize", "duality.json", rep.to_json());

    // Smooth subsolution at the configured ε and the Perron inequality.
    const auto& g = cfg.section("grid");
    const double eps = g.at("eps");
    const ShakingScales sc = shaking_scales(*ctx.model, eps);
    const double rho = g.at("rho").is_null() ? std::min(sc.rho_ext, eps) : g.at("rho").get<double>();
    const double width = g.at("width").is_null() ? rho : g.at("width").get<double>();
    auto shaken = shake(extend_dynamics(*ctx.model, extend(ctx.model->network_ptr(), eps)), rho);
    ExtendedSolve es;
    try {
        es = solve_value_extended(shaken, ctx.dx(), ctx.h(), ctx.n_a(), ctx.solve_options());
    } catch (const BadParameter& err) {
        config_error(std::string("grid.dx does not fit the extended network: ") + err.what());
    }
    const SubsolutionDiagnostics diag = subsolution_diagnostics(es.restricted, v, width);
    const SmoothSubsolution w =
        assemble_subsolution(mollify_edgewise(std::make_shared<ValueField>(es.extended), width), *ctx.model, diag);
    const SubsolutionCheck chk = check_subsolution(*cs, w);
    const double tol_sub = l.at("tol_sub_factor").get<double>() * (ctx.dx() + ctx.h() + width);
    json perron = json::array();
    for (const auto& r : rep.rows) {
        const double dw = ctx.model->discount() * w.value(r.x, r.mode);
        perron.push_back({{"edge", r.x.edge}, {"coord", r.x.coord}, {"mode", r.mode}, {"delta_w", dw}, {"dual", r.dual},
                          {"holds", dw <= r.dual + tol_sub}});
    }
    write_json(cfg, "linearize", "subsolution.json",
               {{"eps", eps},
                {"rho", rho},
                {"width", width},
                {"omega", diag.omega()},
                {"correction", w.correction()},
                {"tol_sub", tol_sub},
                {"check", chk.to_json()},
                {"perron", perron}});

    // Simulated occupation measure from the first point under the greedy policy.
    const auto& [x0, m0] = points.front();
    const OccupationMeasure mu =
        mc_occupation(cs, x0, m0, greedy_policy(cs, v), l.at("n_paths"), l.at("horizon"), cfg.seed, l.at("h_sim"));
    const FeasibilityReport fr = occupation_feasibility(build_occupation_lp(cs, x0, m0), mu);
    const ConstantTestFunction one(1.0);
    const auto adj = adjoint_identity_check(mu, {&w, &one}, {v.sup_abs() + w.correction() + diag.omega(), 1.0});
    json adj_j = json::array();
    for (const auto& a : adj)
        adj_j.push_back({{"residual", a.residual},
                         {"stderr", a.stderr_},
                         {"truncation", a.truncation},
                         {"binning", a.binning},
                         {"tolerance", a.tolerance()}});
    write_json(cfg, "linearize", "occupation.json",
               {{"measure", mu.to_json()},
                {"feasible", fr.feasible()},
                {"max_excess", fr.max_excess},
                {"worst_row", fr.worst_row},
                {"adjoint", adj_j}});
    double gap = 0.0;
    for (const auto& r : rep.rows) gap = std::max(gap, r.gap_primal_dual);
    say(cfg, "max primal-dual gap " + fmt("%.3e", gap) + ", subsolution violation " + fmt("%.3e", chk.max_violation));
    return 0;
}

int cmd_report(const RunConfig& cfg) {
    json summary = json::object();
    int worst = 0;
    for (const char* name : {"audit", "solve", "simulate", "project", "extend", "linearize"}) {
        const int rc = run_command(name, cfg);
        summary[name] = rc;
        worst = std::max(worst, rc);
    }
    write_json(cfg, "report", "report.json", {{"exit_codes", summary}});
    return worst;
}

int run_command(const std::string& name, const RunConfig& cfg) {
    try {
        if (name == "audit") return cmd_audit(cfg);
        if (name == "simulate") return cmd_simulate(cfg);
        if (name == "solve") return cmd_solve(cfg);
        if (name == "project") return cmd_project(cfg);
        if (name == "extend") return cmd_extend(cfg);
        if (name == "linearize") return cmd_linearize(cfg);
        if (name == "report") return cmd_report(cfg);
        config_error("unknown command '" + name + "'");
    } catch (const ConfigError& e) {
        std::cerr << json({{"error", e.kind()}, {"message", e.what()}}).dump() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << json({{"error", e.kind()}, {"message", e.what()}}).dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << json({{"error", "InternalError"}, {"message", e.what()}}).dump() << "\n";
        return 1;
    }
}

int main_entry(int argc, char** argv) {
    CLI::App app{"Controlled switched PDMPs on star networks: audit, simulate, solve, verify"};
    app.require_subcommand(1, 1);
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out = "pdmpnet_out";
    bool quiet = false;
    app.add_option("--config", config_path, "JSON configuration file (defaults used when omitted)");
    auto* seed_opt = app.add_option("--seed", seed, "Random seed (default 0)");
    app.add_option("--out", out, "Output directory");
    app.add_flag("--quiet", quiet, "Suppress progress output");
    const std::vector<std::pair<const char*, const char*>> cmds = {
        {"audit", "Check the model assumptions"},
        {"simulate", "Simulate paths and estimate the discounted cost"},
        {"solve", "Solve the value function and its HJB residual"},
        {"project", "Measure the projection-lemma deviation exponent"},
        {"extend", "Shaking ladder on the extended network"},
        {"linearize", "Occupation-measure LP duality and smooth subsolutions"},
        {"report", "Run every command"}};
    for (const auto& [name, help] : cmds) app.add_subcommand(name, help);
    app.fallthrough();
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    RunConfig cfg;
    cfg.out = out;
    cfg.quiet = quiet;
    try {
        cfg.doc = config_path.empty() ? validate_config(json::object()) : load_config(config_path);
    } catch (const ConfigError& e) {
        std::cerr << json({{"error", e.kind()}, {"message", e.what()}}).dump() << "\n";
        return 2;
    }
    if (seed_opt->count() > 0)
        cfg.seed = seed;
    else if (!cfg.doc.at("seed").is_null())
        cfg.seed = cfg.doc.at("seed").get<std::uint64_t>();
    return run_command(app.get_subcommands().front()->get_name(), cfg);
}

}  // namespace pdmpnet::cli

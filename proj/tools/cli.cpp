#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

namespace specvar::cli {

namespace fs = std::filesystem;

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::ShapeError:
        case ErrorKind::BadK:
        case ErrorKind::InvalidConfig:
            return kUsage;
        case ErrorKind::IoError:
            return kIo;
        default:
            return kNumerical;
    }
}

namespace {

struct Context {
    std::map<std::string, std::string> opts;
    std::map<std::string, bool> flags;
    Tolerances tol;
    std::uint64_t seed = 0;
    bool header = false;

    bool has(const std::string& k) const { return opts.count(k) > 0; }

    const std::string& str(const std::string& k) const {
        auto it = opts.find(k);
        if (it == opts.end()) throw Error(ErrorKind::InvalidConfig, "missing --" + k);
        return it->second;
    }

    std::string str(const std::string& k, const std::string& dflt) const { return has(k) ? str(k) : dflt; }

    Matrix mat(const std::string& k) const { return read_csv(str(k), header); }

    double num(const std::string& k, double dflt) const {
        if (!has(k)) return dflt;
        return detail::parse_double(str(k), "--" + k);
    }

    long integer(const std::string& k, long dflt) const {
        if (!has(k)) return dflt;
        const std::string& s = str(k);
        long v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw Error(ErrorKind::InvalidConfig, "--" + k + " expects an integer");
        return v;
    }

    bool flag(const std::string& k) const {
        auto it = flags.find(k);
        return it != flags.end() && it->second;
    }

    SpectralFunctionSpec f() const {
        SpectralFunctionSpec s = spec_from_name(str("f"));
        if (has("weight")) s = scaled(s, num("weight", 1.0));
        return s;
    }
};

struct Command {
    std::string name;
    std::string help;
    std::vector<std::string> options;
    std::vector<std::string> flags;
    std::function<Json(const Context&)> handler;
};

Json strings(const std::vector<std::string>& v) {
    Json a = Json::array();
    for (const auto& s : v) a.push_back(s);
    return a;
}

Json breakdown(const SecondSubderivativeReport& r) {
    return Json::array({to_json(r.d2f_term), r.alpha_term, r.beta_term});
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(detail::parse_double(cell, "list"));
    return out;
}

OracleConfig oracle_config(const Context& c) {
    OracleConfig cfg;
    if (c.has("tau-grid")) cfg.tau_grid = parse_list(c.str("tau-grid"));
    cfg.samples_per_tau = static_cast<int>(c.integer("samples", cfg.samples_per_tau));
    cfg.radius_factor = c.num("radius", cfg.radius_factor);
    cfg.seed = c.seed;
    cfg.include_guided = !c.flag("no-guided");
    cfg.validate();
    return cfg;
}

Json cmd_oracle(const Context& c) {
    const Matrix X = c.mat("X");
    const Matrix H = c.mat("H");
    const OracleConfig cfg = oracle_config(c);
    const std::string kind = c.str("g", "F");
    MatrixFunction g;
    Matrix V;
    if (kind == "F") {
        const SpectralFunctionSpec f = c.f();
        g = [f](const Matrix& A) { return F_eval(f, A).as_double(); };
        V = c.mat("V");
    } else if (kind == "psi") {
        const SingularPartition p = partition_singular(svd_ordered(X).sigma, X.rows(), c.tol.cluster, c.tol.rank);
        const Index r = p.r;
        g = [r](const Matrix& A) {
            const Vector s = singular_values(A);
            return s.tail(s.size() - r).sum();
        };
        V = c.mat("V");
    } else {
        throw Error(ErrorKind::InvalidConfig, "--g must be F or psi");
    }
    Json out;
    out["tau_grid"] = cfg.tau_grid;
    const std::vector<double> fixed = quotient2_fixed(g, X, V, H, cfg);
    out["fixed"] = fixed;
    const LiminfEstimate est = quotient2_liminf_detail(g, X, V, H, cfg);
    out["liminf"] = est.value;
    out["liminf_tau"] = est.tau;
    out["liminf_source"] = est.source;
    std::vector<double> para;
    if (c.has("Z")) {
        const double dgxw = c.has("dg") ? c.num("dg", 0.0) : inner(V, H);
        para = parabolic_quotient(g, X, H, dgxw, c.mat("Z"), cfg);
        out["parabolic"] = para;
    }
    std::string csv = para.empty() ? "tau,fixed\n" : "tau,fixed,parabolic\n";
    for (std::size_t i = 0; i < fixed.size(); ++i) {
        csv += format_double(cfg.tau_grid[i]) + "," + format_double(fixed[i]);
        if (!para.empty()) csv += "," + format_double(para[i]);
        csv += "\n";
    }
    const std::string path = c.str("csv", "oracle.csv");
    write_text(path, csv);
    out["csv"] = path;
    return out;
}

Json cmd_certify(const Context& c) {
    LoadedProblem lp = load_problem(c.str("problem"), c.header);
    lp.config.seed = c.seed;
    lp.config.tol = c.tol;
    if (c.has("samples")) lp.config.samples = static_cast<int>(c.integer("samples", lp.config.samples));
    if (c.has("min-samples")) lp.config.min_samples = static_cast<int>(c.integer("min-samples", lp.config.min_samples));
    Json out = certificate_json(certify(lp.spec, lp.X0, lp.config));
    out["X0"] = to_json(lp.X0);
    return out;
}

Json cmd_growth(const Context& c) {
    const LoadedProblem lp = load_problem(c.str("problem"), c.header);
    const double eps = c.num("eps", lp.config.growth_eps);
    const long n = c.integer("samples", lp.config.growth_samples);
    Json out;
    out["growth_constant_observed"] = quadratic_growth_probe(lp.spec, lp.X0, eps, static_cast<int>(n), c.seed);
    out["eps"] = eps;
    out["samples"] = n;
    return out;
}

std::vector<Command> commands() {
    std::vector<Command> cmds;
    cmds.push_back({"eval", "F(X) = f(sigma(X))", {"f", "weight", "X"}, {}, [](const Context& c) {
                        Json o;
                        o["value"] = to_json(F_eval(c.f(), c.mat("X")));
                        o["sigma"] = to_json(singular_values(c.mat("X")));
                        return o;
                    }});
    cmds.push_back({"deriv1", "first directional derivative of sigma", {"X", "H"}, {}, [](const Context& c) {
                        Json o;
                        o["sigma_dir1"] = to_json(sigma_dir1(c.mat("X"), c.mat("H"), c.tol));
                        return o;
                    }});
    cmds.push_back({"deriv2", "second directional derivative of sigma", {"X", "H", "W"}, {}, [](const Context& c) {
                        const Matrix X = c.mat("X");
                        const Matrix H = c.mat("H");
                        const Matrix W = c.has("W") ? c.mat("W") : Matrix::Zero(X.rows(), X.cols());
                        check_same_shape(X, H, "deriv2");
                        check_same_shape(X, W, "deriv2");
                        const Gauge g = make_gauge(X, c.tol);
                        const ResolventData rd = resolvent_data(g);
                        Json o;
                        o["sigma_dir1"] = to_json(sigma_dir1(g, H, c.tol));
                        o["sigma_dir2"] = to_json(sigma_dir2(direction_blocks(g, H, c.tol), rd, H, W));
                        o["warnings"] = strings(conditioning_warnings(g, rd, c.tol));
                        return o;
                    }});
    cmds.push_back({"subderiv", "subderivative dF(X)(H)", {"f", "weight", "X", "H"}, {}, [](const Context& c) {
                        Json o;
                        o["value"] = to_json(F_subderivative(c.f(), c.mat("X"), c.mat("H"), c.tol));
                        return o;
                    }});
    cmds.push_back({"second-subderiv", "second subderivative d2F(X|Y)(H)", {"f", "weight", "X", "Y", "H"}, {},
                    [](const Context& c) {
                        const SecondSubderivativeReport r =
                            F_second_subderivative(c.f(), c.mat("X"), c.mat("Y"), c.mat("H"), c.tol);
                        Json o;
                        o["value"] = to_json(r.value);
                        o["breakdown"] = breakdown(r);
                        o["critical"] = r.critical;
                        o["warnings"] = strings(r.warnings);
                        return o;
                    }});
    cmds.push_back({"nuclear-epi", "second epi-derivative of the nuclear norm", {"X", "Omega", "H"}, {},
                    [](const Context& c) {
                        const NuclearEpiReport r = nuclear_second_epi(c.mat("X"), c.mat("Omega"), c.mat("H"), c.tol);
                        Json o;
                        o["value"] = to_json(r.value);
                        o["breakdown"] = Json::array({r.phi_term, to_json(r.cone_term), r.psi_term});
                        return o;
                    }});
    cmds.push_back({"psi", "subderivative and second epi-derivative of the trailing singular sum", {"X", "H", "Omega"},
                    {}, [](const Context& c) {
                        const Matrix X = c.mat("X");
                        const Matrix H = c.mat("H");
                        Json o;
                        o["subderivative"] = nuclear_psi_subderivative(X, H, c.tol);
                        if (c.has("Omega")) o["second_epi"] = to_json(nuclear_psi_second_epi(X, c.mat("Omega"), H, c.tol));
                        return o;
                    }});
    cmds.push_back({"phi2", "second derivative of the leading singular sum", {"X", "H"}, {}, [](const Context& c) {
                        Json o;
                        o["value"] = nuclear_phi_second_diff(c.mat("X"), c.mat("H"), c.tol);
                        return o;
                    }});
    cmds.push_back({"tangent", "tangent membership for an invariant set", {"set", "X", "H", "W", "order"}, {},
                    [](const Context& c) {
                        const InvariantSetSpec D = set_from_name(c.str("set"));
                        const int order = static_cast<int>(c.integer("order", 1));
                        std::optional<Matrix> W;
                        if (c.has("W")) W = c.mat("W");
                        Json o;
                        o["contains"] = invariant_tangent_contains(D, c.mat("X"), c.mat("H"), order, W, c.tol);
                        o["order"] = order;
                        return o;
                    }});
    cmds.push_back({"distance", "distance to an invariant set", {"set", "X"}, {}, [](const Context& c) {
                        const SetDistance d = invariant_set_distance(set_from_name(c.str("set")), c.mat("X"));
                        Json o;
                        o["distance"] = d.distance;
                        o["nearest"] = to_json(d.nearest);
                        return o;
                    }});
    cmds.push_back({"oracle", "difference-quotient oracles",
                    {"g", "f", "weight", "X", "V", "H", "Z", "dg", "tau-grid", "samples", "radius", "csv"},
                    {"no-guided"}, cmd_oracle});
    cmds.push_back({"certify", "second-order optimality certificate", {"problem", "samples", "min-samples"}, {},
                    cmd_certify});
    cmds.push_back({"growth", "quadratic growth probe", {"problem", "eps", "samples"}, {}, cmd_growth});
    return cmds;
}

void error_json(std::ostream& err, const std::string& kind, const std::string& msg) {
    Json e;
    e["schema"] = "specvar/1";
    e["error"] = kind;
    e["message"] = msg;
    err << dump_json(e, 0) << '\n';
}

int run_job(const std::string& path, const std::vector<std::string>& globals, std::ostream& out, std::ostream& err) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
    Json report;
    try {
        report = Json::parse(in);
    } catch (const std::exception& e) {
        throw Error(ErrorKind::IoError, std::string("cannot parse job: ") + e.what());
    }
    if (!report.contains("command") || !report["command"].is_string())
        throw Error(ErrorKind::InvalidConfig, "job has no command");
    std::vector<std::string> args;
    if (report.contains("inputs")) {
        for (auto it = report["inputs"].begin(); it != report["inputs"].end(); ++it) {
            if (it.value() == "true" && (it.key() == "header" || it.key() == "no-guided")) {
                args.push_back("--" + it.key());
                continue;
            }
            if (it.key() == "out") continue;
            args.push_back("--" + it.key());
            args.push_back(it.value().get<std::string>());
        }
    }
    std::vector<std::string> full = globals;
    full.push_back(report["command"].get<std::string>());
    full.insert(full.end(), args.begin(), args.end());
    return run(full, out, err);
}

}  // namespace

LoadedProblem load_problem(const std::string& path, bool header) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const std::exception& e) {
        throw Error(ErrorKind::IoError, std::string("cannot parse problem: ") + e.what());
    }
    const fs::path base = fs::path(path).parent_path();
    auto mat = [&](const Json& node, const char* key) {
        if (!node.contains(key)) throw Error(ErrorKind::InvalidConfig, std::string("problem: missing ") + key);
        const Json& v = node[key];
        if (v.is_array()) return matrix_from_json(v);
        return read_csv((base / v.get<std::string>()).string(), header);
    };

    LoadedProblem lp;
    if (!j.contains("f")) throw Error(ErrorKind::InvalidConfig, "problem: missing f");
    lp.spec.f = spec_from_name(j["f"].get<std::string>());
    if (j.contains("weight")) lp.spec.f = scaled(lp.spec.f, j["weight"].get<double>());
    if (!j.contains("psi")) throw Error(ErrorKind::InvalidConfig, "problem: missing psi");
    const Json& psi = j["psi"];
    const std::string kind = psi.value("kind", "");
    lp.spec.psi_kind = kind;
    Matrix B;
    if (kind == "least_squares") {
        B = mat(psi, "B");
        lp.spec.psi = least_squares_psi(B);
    } else if (kind == "linear_ls") {
        const Matrix A = mat(psi, "A");
        const Matrix b = mat(psi, "b");
        lp.spec.psi = linear_least_squares_psi(A, b.reshaped(), psi.at("rows").get<Index>(), psi.at("cols").get<Index>());
    } else if (kind == "curved") {
        B = mat(psi, "B");
        const Matrix C = psi.contains("C") ? mat(psi, "C") : Matrix::Zero(B.rows(), B.cols());
        const Matrix E = mat(psi, "E");
        const Matrix A = mat(psi, "anchor");
        lp.spec.psi = curved_least_squares_psi(B, C, E, psi.at("gamma").get<double>(), A);
    } else {
        throw Error(ErrorKind::InvalidConfig, "problem: unknown psi kind '" + kind + "'");
    }

    if (j.contains("X0") && j["X0"].is_string() && j["X0"].get<std::string>() == "soft_threshold") {
        if (kind != "least_squares" || j["f"].get<std::string>() != "l1")
            throw Error(ErrorKind::InvalidConfig, "problem: soft_threshold needs least_squares psi and f = l1");
        lp.X0 = soft_threshold_solve(B, j.value("weight", 1.0));
    } else {
        lp.X0 = mat(j, "X0");
    }

    if (j.contains("certify")) {
        const Json& c = j["certify"];
        lp.config.samples = c.value("samples", lp.config.samples);
        lp.config.min_samples = c.value("min_samples", lp.config.min_samples);
        lp.config.max_attempts = c.value("max_attempts", lp.config.max_attempts);
        lp.config.curvature_tol = c.value("curvature_tol", lp.config.curvature_tol);
        lp.config.growth_eps = c.value("growth_eps", lp.config.growth_eps);
        lp.config.growth_samples = c.value("growth_samples", lp.config.growth_samples);
    }
    return lp;
}

Json certificate_json(const OptimalityCertificate& c) {
    Json o;
    o["verdict"] = to_string(c.verdict);
    o["stationarity_residual"] = c.stationarity_residual;
    o["is_stationary"] = c.is_stationary;
    o["gradient_check"] = {{"gradient_rel_error", c.gradient_check.gradient_rel_error},
                           {"hessian_rel_error", c.gradient_check.hessian_rel_error}};
    o["n_samples"] = c.samples.size();
    o["attempts"] = c.attempts;
    o["min_curvature"] = c.samples.empty() ? Json(nullptr) : Json(c.min_curvature);
    o["growth_constant_observed"] = c.growth_constant_observed;
    Json gens = Json::object();
    for (const auto& s : c.samples) gens[s.generator] = gens.value(s.generator, 0) + 1;
    o["samples_by_generator"] = gens;
    if (c.counterexample) {
        o["counterexample"] = to_json(*c.counterexample);
        o["counterexample_curvature"] = c.counterexample_curvature;
        o["descent_validated"] = c.descent_validated;
    }
    return o;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"specvar: variational analysis of singular value functions"};
    app.require_subcommand(1);
    app.fallthrough();
    double tol_cluster = Tolerances{}.cluster;
    double tol_rank = Tolerances{}.rank;
    std::uint64_t seed = 0;
    bool header = false;
    std::string out_path;
    auto* o_cluster = app.add_option("--tol-cluster", tol_cluster, "singular value clustering tolerance");
    auto* o_rank = app.add_option("--tol-rank", tol_rank, "rank tolerance");
    auto* o_seed = app.add_option("--seed", seed, "random seed");
    app.add_flag("--header", header, "skip one header line in CSV inputs");
    auto* o_out = app.add_option("--out", out_path, "write the report here instead of stdout");

    const std::vector<Command> cmds = commands();
    std::vector<std::map<std::string, std::string>> values(cmds.size());
    std::vector<std::map<std::string, bool>> flag_values(cmds.size());
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < cmds.size(); ++i) {
        CLI::App* s = app.add_subcommand(cmds[i].name, cmds[i].help);
        for (const auto& o : cmds[i].options) s->add_option("--" + o, values[i][o]);
        for (const auto& f : cmds[i].flags) s->add_flag("--" + f, flag_values[i][f]);
        subs.push_back(s);
    }
    std::string job_path;
    CLI::App* job = app.add_subcommand("job", "re-run a report from its echoed inputs");
    job->add_option("report", job_path)->required();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        error_json(err, "UsageError", e.what());
        return kUsage;
    }

    try {
        std::vector<std::string> globals;
        Json inputs = Json::object();
        auto echo = [&](CLI::Option* o, const std::string& name) {
            if (o->count() == 0) return;
            const std::string v = o->as<std::string>();
            inputs[name] = v;
            globals.push_back("--" + name);
            globals.push_back(v);
        };
        echo(o_cluster, "tol-cluster");
        echo(o_rank, "tol-rank");
        echo(o_seed, "seed");
        if (header) {
            inputs["header"] = "true";
            globals.push_back("--header");
        }
        if (o_out->count()) inputs["out"] = out_path;

        if (job->parsed()) return run_job(job_path, globals, out, err);

        Context ctx;
        ctx.tol.cluster = tol_cluster;
        ctx.tol.rank = tol_rank;
        ctx.seed = seed;
        ctx.header = header;
        std::size_t which = 0;
        for (std::size_t i = 0; i < subs.size(); ++i)
            if (subs[i]->parsed()) which = i;
        for (const auto& o : cmds[which].options) {
            if (subs[which]->get_option("--" + o)->count() == 0) continue;
            ctx.opts[o] = values[which][o];
            inputs[o] = values[which][o];
        }
        for (const auto& f : cmds[which].flags) {
            ctx.flags[f] = flag_values[which][f];
            if (flag_values[which][f]) inputs[f] = "true";
        }
        if (!(tol_cluster > 0) || !(tol_rank > 0))
            throw Error(ErrorKind::InvalidConfig, "tolerances must be positive");

        Json report;
        report["schema"] = "specvar/1";
        report["command"] = cmds[which].name;
        report["inputs"] = inputs;
        const Json body = cmds[which].handler(ctx);
        for (auto it = body.begin(); it != body.end(); ++it) report[it.key()] = it.value();
        const std::string text = dump_json(report) + "\n";
        if (out_path.empty())
            out << text;
        else
            write_text(out_path, text);
        return kOk;
    } catch (const Error& e) {
        error_json(err, to_string(e.kind()), e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        error_json(err, "InternalError", e.what());
        return kNumerical;
    }
}

}  // namespace specvar::cli

#pragma once

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include <jrl/jrl.hpp>

namespace jrl::cli {

enum Exit { ok = 0, failed = 1, config = 2 };

struct EvalOptions {
    std::string fn;
    int k = -1, m = -1;
    int lambda = 0;
    std::string w, z, tau = "1i", theta = "1", phi = "1";
    std::optional<int> n_q;
};

inline json eval_value(const EvalOptions& o, const Truncation& tr)
{
    ModularPoint t(parse_complex(o.tau));
    auto need = [](int v, const char* flag) {
        if (v < 0)
            throw ConfigError(std::string("--") + flag + " is required and must be >= 0");
        return v;
    };
    auto need_c = [](const std::string& s, const char* flag) {
        if (s.empty())
            throw ConfigError(std::string("--") + flag + " is required");
        return parse_complex(s);
    };
    json args;
    args["tau"] = to_json(t.tau);
    cplx v;
    if (o.fn == "E") {
        args["k"] = need(o.k, "k");
        v = eisenstein(o.k, t, tr);
    } else if (o.fn == "Etwist") {
        args["k"] = need(o.k, "k");
        args["lambda"] = o.lambda;
        v = eisenstein_twisted(o.k, o.lambda, t, tr);
    } else if (o.fn == "Etilde") {
        args["k"] = need(o.k, "k");
        cplx z = need_c(o.z, "z");
        args["z"] = to_json(z);
        v = eisenstein_tilde(o.k, z, t, tr);
    } else if (o.fn == "P" || o.fn == "Ptwist" || o.fn == "Ptilde" || o.fn == "Pdef") {
        int m = o.m >= 1 ? o.m : throw ConfigError("--m is required and must be >= 1");
        cplx w = need_c(o.w, "w");
        args["m"] = m;
        args["w"] = to_json(w);
        if (o.fn == "P") {
            v = weier_p(m, w, t, tr);
        } else if (o.fn == "Ptwist") {
            args["lambda"] = o.lambda;
            v = weier_p_twisted(m, o.lambda, w, t, tr);
        } else if (o.fn == "Ptilde") {
            cplx z = need_c(o.z, "z");
            args["z"] = to_json(z);
            v = weier_p_tilde(m, w, z, t, tr);
        } else {
            TwistPair tw{parse_complex(o.theta), parse_complex(o.phi)};
            args["theta"] = to_json(tw.theta);
            args["phi"] = to_json(tw.phi);
            v = weier_p_deformed(m, tw, w, t, tr);
        }
    } else {
        throw ConfigError("unknown function '" + o.fn + "'");
    }
    json r;
    r["fn"] = o.fn;
    r["arguments"] = args;
    r["value"] = to_json(v);
    r["truncation"] = to_json(tr);
    r["truncation_error_estimate"] = truncation_error_estimate(t, tr);
    return r;
}

inline json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline void emit(const Report& rep, const std::string& output, std::ostream& out)
{
    std::string text = rep.to_json().dump(2) + "\n";
    if (output.empty()) {
        out << text;
        return;
    }
    std::ofstream f(output, std::ios::binary);
    if (!f)
        throw ConfigError("cannot write '" + output + "'");
    f << text;
}

// Library failures that are configuration problems rather than results.
inline bool is_config_error(const Error& e)
{
    return e.kind() == "ConfigError" || e.kind() == "CapTooLarge";
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Jacobi n-point functions: special functions, reductions and checks", "jrl"};
    app.require_subcommand(1);
    std::string output;
    app.add_option("-o,--output", output, "write the report to a file instead of stdout");

    EvalOptions eo;
    int nmode = -1;
    auto* eval = app.add_subcommand("eval", "evaluate a special function");
    eval->add_option("--fn", eo.fn, "E, Etwist, Etilde, P, Ptwist, Ptilde or Pdef")->required();
    eval->add_option("--k", eo.k, "Eisenstein index");
    eval->add_option("--m", eo.m, "Weierstrass index (>= 1)");
    eval->add_option("--lambda", eo.lambda, "integer twist");
    eval->add_option("--w", eo.w, "argument w, e.g. 0.3+0.05i");
    eval->add_option("--z", eo.z, "elliptic variable z");
    eval->add_option("--tau", eo.tau, "modular parameter, e.g. 0.5i");
    eval->add_option("--theta", eo.theta, "deformation theta (modulus one)");
    eval->add_option("--phi", eo.phi, "deformation phi (modulus one)");
    eval->add_option("--nq", eo.n_q, "q-series truncation order");
    eval->add_option("--nmode", nmode, "mode range");

    std::string request_path, variant = "simplest";
    bool with_ledger = false, use_oracle = false, strict = false;
    auto* reduce = app.add_subcommand("reduce", "reduce an n-point function to partition functions");
    reduce->add_option("request", request_path, "request file (JSON)")->required();
    reduce->add_option("--variant", variant, "main, simplest, shifted or super");
    reduce->add_flag("--ledger", with_ledger, "include the coefficient ledger");
    reduce->add_flag("--oracle", use_oracle, "evaluate by the truncated trace instead");
    reduce->add_flag("--strict", strict, "fail when a reduction stage vanishes identically");

    std::string suite = "all";
    std::optional<double> tol;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    bool timing = false;
    auto* verify = app.add_subcommand("verify", "run a verification suite");
    verify->add_option("--suite", suite, "specfun, voa, reduction or all");
    verify->add_option("--tol", tol, "replace every upper-bound tolerance");
    verify->add_option("--threads", threads, "worker threads (output order is fixed)");
    verify->add_flag("--timing", timing, "add wall-clock runtime to the summary");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? ok : config;
    }

    try {
        Report rep;
        if (*eval) {
            Truncation tr = environment_truncation();
            if (eo.n_q)
                tr.n_q = *eo.n_q;
            if (nmode > 0)
                tr.n_mode = nmode;
            tr.validate();
            rep.command = "eval";
            rep.payload = eval_value(eo, tr);
            emit(rep, output, out);
            return ok;
        }
        if (*reduce) {
            NPointRequest r = request_from_json(read_json_file(request_path), environment_truncation());
            rep.command = "reduce";
            json res;
            res["request"] = request_to_json(r);
            res["variant"] = variant;
            if (use_oracle) {
                res["method"] = "oracle";
                res["value"] = to_json(npoint_oracle(r));
            } else {
                ReduceOptions opt{parse_variant(variant), strict};
                auto red = reduce_full(r, opt);
                res["method"] = "reduction";
                res["value"] = to_json(red.value);
                if (with_ledger)
                    res["ledger"] = to_json(*red.ledger);
            }
            rep.payload = res;
            emit(rep, output, out);
            return ok;
        }
        auto start = std::chrono::steady_clock::now();
        auto items = suite_items(suite);
        rep.command = "verify";
        rep.header["suite"] = suite;
        if (tol)
            rep.header["tolerance_override"] = *tol;
        rep.checks = run_items(items, threads, tol);
        if (timing)
            rep.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        emit(rep, output, out);
        for (auto& c : rep.checks)
            if (!c.pass)
                err << "FAIL " << c.name << (c.error.empty() ? "" : ": " + c.error) << "\n";
        return rep.failed() ? failed : ok;
    } catch (const Error& e) {
        err << "jrl: " << e.what() << "\n";
        return is_config_error(e) ? config : failed;
    } catch (const json::exception& e) {
        err << "jrl: malformed document: " << e.what() << "\n";
        return config;
    } catch (const std::exception& e) {
        err << "jrl: " << e.what() << "\n";
        return failed;
    }
}

} // namespace jrl::cli

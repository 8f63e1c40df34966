// cylwave command-line runner: validation suites, dispersion scans and single-layer checks.
#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cylwave/dispersion.hpp"
#include "cylwave/numdiff.hpp"
#include "cylwave/propagator.hpp"
#include "cylwave/specfun.hpp"

using namespace cylwave;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------- formatting ----------

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char b[32];
    std::snprintf(b, sizeof b, "%.17g", v);
    return b;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string o = "\"";
    for (char c : s) {
        if (c == '"') o += '"';
        o += c;
    }
    return o + "\"";
}

class CsvWriter {
public:
    CsvWriter(const fs::path& p, const std::vector<std::string>& header) : path_(p), out_(p, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open " + p.string() + " for writing");
        row(header);
    }
    void row(const std::vector<std::string>& fields) {
        for (size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << csv_field(fields[i]);
        out_ << "\r\n";
        if (!out_) throw std::runtime_error("write failed: " + path_.string());
    }

private:
    fs::path path_;
    std::ofstream out_;
};

void write_json(const fs::path& p, const json& j) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + p.string() + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed: " + p.string());
}

// ---------- configuration ----------

const std::set<std::string> kCommands = {"specfun-check", "parametrix-verify", "green-validate", "dispersion-scan",
                                         "kirchhoff-check"};

const std::set<std::string> kKeys = {"command", "out",     "h",         "t",          "t_decades", "t_start",
                                     "tol",     "eps",     "n_max",     "seed",       "threads",   "source_s",
                                     "window",  "free_only", "ratio_max", "kirchhoff_tol", "samples", "probes",
                                     "search"};

const std::set<std::string> kSearchKeys = {"r_max", "z_max", "n_r", "n_theta", "n_z", "n_refine", "refine_iters",
                                           "jitter"};

double parse_number(const std::string& s, const std::string& what) {
    auto one = [&](const std::string& x) {
        size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(x, &pos);
        } catch (const std::exception&) {
            throw SchemaError(what + ": cannot parse '" + s + "'");
        }
        if (pos != x.size()) throw SchemaError(what + ": cannot parse '" + s + "'");
        return v;
    };
    auto slash = s.find('/');
    if (slash == std::string::npos) return one(s);
    double d = one(s.substr(slash + 1));
    if (d == 0.0) throw SchemaError(what + ": zero denominator in '" + s + "'");
    return one(s.substr(0, slash)) / d;
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) v.push_back(parse_number(item, what));
    return v;
}

json default_config(const std::string& cmd) {
    json c;
    c["command"] = cmd;
    c["out"] = "out";
    c["h"] = json::array({0.125});
    c["t"] = json::array();
    c["t_decades"] = 2;
    c["t_start"] = 0.05;
    c["tol"] = 1e-8;
    c["eps"] = kDefaultGlancingEps;
    c["n_max"] = 4000;
    c["seed"] = 1;
    c["threads"] = 1;
    c["source_s"] = 2.0;
    c["window"] = "high";
    c["free_only"] = false;
    c["ratio_max"] = 1.0;
    c["kirchhoff_tol"] = 0.05;
    c["samples"] = 1000;
    SearchPolicy sp;
    c["search"] = {{"r_max", sp.r_max},       {"z_max", sp.z_max},   {"n_r", sp.n_r},
                   {"n_theta", sp.n_theta},   {"n_z", sp.n_z},       {"n_refine", sp.n_refine},
                   {"refine_iters", sp.refine_iters}, {"jitter", sp.jitter}};
    c["probes"] = json::array({json::array({3.0, 1.0, 0.5, 0.0}), json::array({2.5, 0.6, 0.0, 0.0}),
                               json::array({2.5, 0.3, 2.0, 0.0})});
    return c;
}

// Numbers in the file may be given as JSON numbers or as strings such as "1/16".
json normalize_grid(const json& v, const std::string& key) {
    if (v.is_string()) {
        json a = json::array();
        for (double x : parse_list(v.get<std::string>(), key)) a.push_back(x);
        return a;
    }
    if (!v.is_array()) throw SchemaError(key + ": expected an array or a comma-separated string");
    json a = json::array();
    for (const auto& e : v) {
        if (e.is_number()) a.push_back(e.get<double>());
        else if (e.is_string()) a.push_back(parse_number(e.get<std::string>(), key));
        else throw SchemaError(key + ": grid entries must be numbers");
    }
    return a;
}

void overlay(json& base, const json& file) {
    if (!file.is_object()) throw SchemaError("config file: top level must be an object");
    for (const auto& [k, v] : file.items()) {
        if (!kKeys.count(k)) throw SchemaError("config file: unknown key '" + k + "'");
        if (k == "command") {
            if (v != base["command"]) throw SchemaError("config file: command '" + v.dump() + "' does not match subcommand");
            continue;
        }
        if (k == "search") {
            if (!v.is_object()) throw SchemaError("search: expected an object");
            for (const auto& [sk, sv] : v.items()) {
                if (!kSearchKeys.count(sk)) throw SchemaError("search: unknown key '" + sk + "'");
                base["search"][sk] = sv;
            }
            continue;
        }
        base[k] = (k == "h" || k == "t") ? normalize_grid(v, k) : v;
    }
}

struct RunConfig {
    std::string command;
    fs::path out;
    std::vector<double> h, t;
    double tol, eps, source_s, ratio_max, kirchhoff_tol;
    int n_max, threads, samples;
    unsigned long long seed;
    WindowKind window;
    bool free_only;
    SearchPolicy search;
    std::vector<KirchhoffProbe> probes;

    TruncationPolicy policy() const {
        TruncationPolicy p;
        p.tol = tol;
        p.n_max = n_max;
        return p;
    }
};

template <class T>
T field(const json& c, const std::string& k) {
    try {
        return c.at(k).get<T>();
    } catch (const json::exception&) {
        throw SchemaError(k + ": wrong type (" + c.at(k).dump() + ")");
    }
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw SchemaError(msg);
}

// Fills derived fields (t grid from decades) into the JSON so the echo is fully resolved, then builds RunConfig.
RunConfig resolve(json& c) {
    RunConfig r;
    r.command = field<std::string>(c, "command");
    r.out = field<std::string>(c, "out");
    std::string win = field<std::string>(c, "window");
    require(win == "high" || win == "low", "window: expected 'high' or 'low'");
    r.window = win == "high" ? WindowKind::High : WindowKind::Low;
    r.h = field<std::vector<double>>(c, "h");
    r.t = field<std::vector<double>>(c, "t");
    if (r.t.empty() && (r.command == "dispersion-scan")) {
        int dec = field<int>(c, "t_decades");
        double t0 = field<double>(c, "t_start");
        require(dec >= 0, "t_decades: must be >= 0");
        require(t0 > 0.0, "t_start: must be positive");
        for (int k = 0; k <= 4 * dec; ++k) r.t.push_back(t0 * std::pow(10.0, k / 4.0));
        c["t"] = r.t;
    }
    r.tol = field<double>(c, "tol");
    r.eps = field<double>(c, "eps");
    r.n_max = field<int>(c, "n_max");
    r.seed = field<unsigned long long>(c, "seed");
    r.threads = field<int>(c, "threads");
    r.source_s = field<double>(c, "source_s");
    r.free_only = field<bool>(c, "free_only");
    r.ratio_max = field<double>(c, "ratio_max");
    r.kirchhoff_tol = field<double>(c, "kirchhoff_tol");
    r.samples = field<int>(c, "samples");
    const json& s = c.at("search");
    r.search.r_max = field<double>(s, "r_max");
    r.search.z_max = field<double>(s, "z_max");
    r.search.n_r = field<int>(s, "n_r");
    r.search.n_theta = field<int>(s, "n_theta");
    r.search.n_z = field<int>(s, "n_z");
    r.search.n_refine = field<int>(s, "n_refine");
    r.search.refine_iters = field<int>(s, "refine_iters");
    r.search.jitter = field<double>(s, "jitter");
    r.search.seed = r.seed;
    for (const auto& p : c.at("probes")) {
        require(p.is_array() && p.size() == 4, "probes: each probe is [r, theta, z, t]");
        auto v = p.get<std::vector<double>>();
        r.probes.push_back({{v[0], v[1], v[2]}, v[3]});
    }

    require(r.tol > 0.0, "tol: must be positive");
    require(r.eps > 0.0 && r.eps <= 0.1, "eps: must lie in (0, 0.1]");
    require(r.n_max > 0, "n_max: must be positive");
    require(r.threads >= 1, "threads: must be >= 1");
    require(r.source_s >= 1.0, "source_s: must be >= 1");
    require(r.ratio_max > 0.0, "ratio_max: must be positive");
    require(r.kirchhoff_tol > 0.0, "kirchhoff_tol: must be positive");
    require(r.samples >= 1, "samples: must be >= 1");
    bool needs_h = r.command == "kirchhoff-check" || (r.command == "dispersion-scan" && r.window == WindowKind::High);
    if (needs_h) require(!r.h.empty(), "h: grid is empty");
    for (double h : r.h) require(h > 0.0 && h < 1.0, "h: entries must lie in (0, 1)");
    if (r.command == "dispersion-scan") {
        require(!r.t.empty(), "t: grid is empty");
        for (double t : r.t) require(t > 0.0 && std::isfinite(t), "t: entries must be positive");
        try {
            check_search(r.search, "search");
        } catch (const std::domain_error& e) {
            throw SchemaError(e.what());
        }
    }
    if (r.command == "kirchhoff-check") {
        require(!r.probes.empty(), "probes: list is empty");
        for (const auto& p : r.probes) require(p.q.r > 1.0 && p.t >= 0.0, "probes: need r > 1 and t >= 0 (0 means t = d)");
    }
    return r;
}

// ---------- suites ----------

struct Row {
    std::string test, params;
    double residual, tol;
    bool pass;
};

class Suite {
public:
    void add(std::string test, std::string params, double residual, double tol) {
        bool pass = std::isfinite(residual) && residual < tol;
        rows_.push_back({std::move(test), std::move(params), residual, tol, pass});
    }
    void fail(std::string test, std::string params, const std::string& why) {
        rows_.push_back({std::move(test), std::move(params) + " error: " + why,
                         std::numeric_limits<double>::infinity(), 0.0, false});
    }
    const std::vector<Row>& rows() const { return rows_; }

private:
    std::vector<Row> rows_;
};

template <class F>
void guarded(Suite& s, const std::string& test, const std::string& params, F&& f) {
    try {
        f();
    } catch (const std::exception& e) {
        s.fail(test, params, e.what());
    }
}

std::string kv(std::initializer_list<std::pair<const char*, double>> items) {
    std::string o;
    for (const auto& [k, v] : items) o += (o.empty() ? "" : " ") + std::string(k) + "=" + num(v);
    return o;
}

void emit_hankel_err(const fs::path& dir) {
    CsvWriter w(dir / "hankel_err.csv", {"n", "rho", "rel_err"});
    for (double rho : {0.3, 0.9, 1.5, 3.0})
        for (int n = 25; n <= 400; n *= 2) {
            Complex ex = hankel_H1_scaled(n, n * rho).value();
            w.row({std::to_string(n), num(rho), num(std::abs(hankel_uniform(n, rho).value / ex - 1.0))});
        }
}

Suite specfun_check(const RunConfig& cfg) {
    Suite s;
    const Complex wr = -std::polar(1.0, kPi / 6.0) / (2.0 * kPi);
    const Complex ep = std::polar(1.0, kPi / 3.0);
    for (int i = 0; i < 25; ++i) {
        double w = -10.0 + 20.0 * i / 24.0;
        std::string p = kv({{"w", w}});
        guarded(s, "airy_connection", p, [&] {
            AiryBundle b = airy_all(w);
            double scale = w > 0.0 ? std::abs(b.Aplus) : std::abs(b.A);
            s.add("airy_connection", p, std::abs(b.A - ep * b.Aplus - std::conj(ep) * b.Aminus) / scale, 1e-12);
            s.add("airy_wronskian", p, std::abs(b.dA * b.Aplus - b.dAplus * b.A - wr) / std::abs(wr), 1e-12);
        });
    }
    for (int n : {0, 1, 5, 50, 500})
        for (double x : {0.5, 1.0, 10.0, 100.0}) {
            std::string p = kv({{"n", double(n)}, {"x", x}});
            guarded(s, "cylinder_wronskian", p, [&] {
                CylinderSequence q = bessel_jy_sequence(x, n + 1);
                ScaledReal w = q.j[n + 1] * q.y[n] - q.j[n] * q.y[n + 1];
                s.add("cylinder_wronskian", p, std::fabs(w.value() * kPi * x / 2.0 - 1.0), 1e-10);
            });
        }
    for (double w : {-8.0, -5.0, -1.0, 0.0, 1.0, 3.0}) {
        std::string p = kv({{"w", w}});
        guarded(s, "phi_plus_riccati", p, [&] {
            Complex d = fd_first([](double x) { return phi_plus(x); }, w);
            Complex v = phi_plus(w);
            s.add("phi_plus_riccati", p, std::abs(d - (w - v * v)), 1e-7);
        });
    }
    for (double rho : {0.2, 0.5, 0.9, 0.99, 1.01, 1.1, 2.0, 5.0}) {
        std::string p = kv({{"rho", rho}});
        guarded(s, "zeta_ode", p, [&] {
            double z = zeta_tilde(rho);
            double dz = fd_first(zeta_tilde, rho, 1e-4 * std::min(1.0, std::fabs(rho - 1.0)));
            s.add("zeta_ode", p, std::fabs(-z * dz * dz + 1.0 / (rho * rho) - 1.0), 1e-8);
        });
    }
    for (int k = 4; k <= 6; ++k) {
        double d = std::pow(10.0, -k);
        std::string p = kv({{"delta", d}});
        guarded(s, "zeta_slope", p, [&] { s.add("zeta_slope", p, std::fabs(-zeta_tilde(1.0 + d) / d - std::cbrt(2.0)), 1e-4); });
    }
    for (int n : {50, 100, 200, 400}) {
        double t = std::pow(n, -2.0 / 3.0);
        for (double rho : {0.3, 0.9, 1.0 - t, 1.0 + t, 1.5, 3.0}) {
            std::string p = kv({{"n", double(n)}, {"rho", rho}});
            guarded(s, "hankel_uniform", p, [&] {
                Complex ex = hankel_H1_scaled(n, n * rho).value();
                s.add("hankel_uniform", p, std::abs(hankel_uniform(n, rho).value / ex - 1.0), 1e-3);
            });
        }
    }
    emit_hankel_err(cfg.out);
    return s;
}

Suite parametrix_verify(const RunConfig& cfg) {
    Suite s;
    for (double sv : {1.5, std::sqrt(2.0), 2.0, 5.0}) {
        std::string p = kv({{"s", sv}});
        guarded(s, "gamma0_taylor", p, [&] {
            auto f = [&](double a) { return gamma0(a, sv, cfg.eps); };
            double e = std::fabs(f(1.0) - (std::sqrt(sv * sv - 1) + std::asin(1 / sv)));
            e = std::max(e, std::fabs(fd_first(f, 1.0) - std::asin(1 / sv)));
            e = std::max(e, std::fabs(fd_second(f, 1.0) - 1 / std::sqrt(sv * sv - 1)));
            s.add("gamma0_taylor", p, e, 1e-4);
        });
        guarded(s, "gamma_tilde_taylor", p, [&] {
            auto g = [&](double a) { return gamma_tilde(a, sv, 0.0, cfg.eps); };
            double yc = y_critical(sv, 0.0);
            double e = std::fabs(g(1.0) - (std::sqrt(sv * sv - 1) - yc));
            e = std::max(e, std::fabs(fd_first(g, 1.0) + yc));
            e = std::max(e, std::fabs(fd_second(g, 1.0) - 1 / std::sqrt(sv * sv - 1)));
            s.add("gamma_tilde_taylor", p, e, 1e-4);
        });
    }
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < cfg.samples; ++i) {
        auto r = eikonal_residual(0.5 * U(rng), -kPi + 2 * kPi * U(rng), -5 + 10 * U(rng), 0.5 + U(rng),
                                  -0.9 + 1.8 * U(rng));
        worst = std::max({worst, std::fabs(r.res1), std::fabs(r.res2)});
    }
    s.add("eikonal_residual", kv({{"samples", double(cfg.samples)}, {"seed", double(cfg.seed)}}), worst, 1e-6);
    struct Cfg {
        CylPoint q;
        double s;
    };
    const Cfg cfgs[] = {{{3, kPi, 1}, 3},        {{2, 1.0, 0.5}, 2},   {{1.5, 2.5, -2}, 4}, {{2, 0, 0}, 2},
                        {{2.5, 2.0, 1.5}, 1.5}, {{4, 0.7, -1}, 2.5}, {{1.2, 3.0, 2.0}, 1.8}, {{3.5, 1.6, -0.5}, 3.0}};
    for (const auto& c : cfgs) {
        std::string p = kv({{"r", c.q.r}, {"theta", c.q.theta}, {"z", c.q.z}, {"s", c.s}});
        guarded(s, "boundary_hessian", p, [&] {
            for (const auto& cp : find_boundary_critical_points(c.q, {c.s})) {
                HessianReport h = boundary_phase_hessian(cp.theta, cp.z, c.q, {c.s});
                std::string pp = p + " " + kv({{"theta_c", cp.theta}, {"z_c", cp.z}}) + " regime=" +
                                 sign_regime_name(cp.regime);
                s.add("boundary_hessian", pp, h.fd_residual, 1e-6);
            }
        });
    }
    return s;
}

Suite green_validate(const RunConfig& cfg) {
    Suite s;
    const SourceConfig q0{cfg.source_s};
    const TruncationPolicy pol = cfg.policy();
    for (double tau : {1.0, 5.0, 20.0}) {
        std::string p = kv({{"tau", tau}, {"s", q0.s}});
        guarded(s, "dirichlet_trace", p, [&] {
            double w = 0.0;
            for (int i = 0; i < 10; ++i)
                for (int k = 0; k < 5; ++k)
                    w = std::max(w, std::abs(resolvent({1.0, -kPi + 2 * kPi * (i + 0.5) / 10, -2.0 + k}, q0, tau, pol).value));
            s.add("dirichlet_trace", p, w, 10.0 * cfg.tol);
        });
    }
    TruncationPolicy fine = pol;
    fine.tol = 1e-13;
    for (double tau : {1.0, 5.0, 20.0}) {
        CylPoint q{1.7, 0.8, 0.4};
        const double h = 1e-3;
        std::string p = kv({{"tau", tau}, {"r", q.r}, {"theta", q.theta}, {"z", q.z}, {"step", h}, {"eval_tol", fine.tol}});
        guarded(s, "helmholtz_stencil", p, [&] {
            auto R = [&](double r, double t, double z) { return resolvent({r, t, z}, q0, tau, fine).value; };
            Complex c = R(q.r, q.theta, q.z);
            Complex rp = R(q.r + h, q.theta, q.z), rm = R(q.r - h, q.theta, q.z);
            Complex lap = (rp - 2.0 * c + rm) / (h * h) + (rp - rm) / (2 * h * q.r) +
                          (R(q.r, q.theta + h, q.z) - 2.0 * c + R(q.r, q.theta - h, q.z)) / (h * h * q.r * q.r) +
                          (R(q.r, q.theta, q.z + h) - 2.0 * c + R(q.r, q.theta, q.z - h)) / (h * h);
            s.add("helmholtz_stencil", p, std::abs(lap + tau * tau * c) / (tau * tau * std::abs(c)), 1e-3);
        });
    }
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> Ur(1.0, 6.0), Uk(0.05, 30.0);
    std::uniform_int_distribution<int> Un(0, 60);
    double worst = 0.0;
    for (int i = 0; i < cfg.samples; ++i) {
        int n = Un(rng);
        double a = Ur(rng), b = Ur(rng), k = Uk(rng);
        GreenSplit sp = modal_green_split(n, a, b, k);
        Complex g = modal_green(n, a, b, k);
        double scale = n <= k * std::min(a, b) ? std::abs(g) : std::max(std::abs(g), std::abs(sp.g_plus));
        worst = std::max(worst, std::abs(sp.g_plus - sp.g_minus - g) / scale);
    }
    s.add("split_recombination", kv({{"samples", double(cfg.samples)}, {"seed", double(cfg.seed)}}), worst, 1e-12);
    for (double tau : {1.0, 5.0, 20.0}) {
        CylPoint q{3.0, 0.9, 0.4};
        SourceConfig src{1.5};
        std::string p = kv({{"tau", tau}, {"r", q.r}, {"theta", q.theta}, {"z", q.z}, {"s", src.s}});
        guarded(s, "graf_free_kernel", p, [&] {
            Complex f = free_resolvent(q, src, tau);
            s.add("graf_free_kernel", p, std::abs(free_resolvent_modal(q, src, tau, pol).value - f) / std::abs(f), 1e-6);
        });
    }
    return s;
}

Suite dispersion_suite(const RunConfig& cfg) {
    const SourceConfig q0{cfg.source_s};
    DispersionReport rep = dispersion_scan(cfg.h, cfg.t, cfg.window, cfg.search, cfg.policy(), q0, make_cutoffs(cfg.eps),
                                           cfg.free_only, cfg.threads);
    CsvWriter w(cfg.out / "dispersion.csv", {"window", "s", "free_only", "h", "t", "sup_abs", "bound", "ratio", "argmax_r",
                                             "argmax_theta", "argmax_z", "n_points", "tol", "n_max", "eps", "seed"});
    CsvWriter plot(cfg.out / "ratio_vs_t.csv", {"h", "t", "ratio"});
    Suite s;
    for (const auto& r : rep.rows) {
        w.row({window_kind_name(rep.kind), num(rep.s), rep.free_only ? "true" : "false", num(r.h), num(r.t),
               num(r.sup_abs), num(r.bound), num(r.ratio), num(r.argmax.r), num(r.argmax.theta), num(r.argmax.z),
               std::to_string(r.n_points), num(cfg.tol), std::to_string(cfg.n_max), num(cfg.eps),
               std::to_string(cfg.seed)});
        plot.row({num(r.h), num(r.t), num(r.ratio)});
        s.add("dispersion_ratio", kv({{"h", r.h}, {"t", r.t}}), r.ratio, cfg.ratio_max);
    }
    return s;
}

Suite kirchhoff_suite(const RunConfig& cfg) {
    const SourceConfig q0{cfg.source_s};
    CsvWriter w(cfg.out / "kirchhoff.csv", {"h", "r", "theta", "z", "t", "u_free_re", "u_free_im", "u_sharp_re",
                                            "u_sharp_im", "u_ref_re", "u_ref_im", "rel_err", "tol", "pass"});
    std::vector<KirchhoffProbe> probes = cfg.probes;
    for (auto& p : probes)
        if (p.t == 0.0) p.t = dist_cyl(p.q, q0);
    Suite s;
    for (double h : cfg.h) {
        auto res = kirchhoff_check(probes, q0, FreqWindow{h, WindowKind::High}, cfg.policy(), make_cutoffs(cfg.eps), {},
                                   cfg.threads);
        for (size_t i = 0; i < res.size(); ++i) {
            const auto& p = probes[i];
            const auto& r = res[i];
            bool pass = std::isfinite(r.rel_err) && r.rel_err < cfg.kirchhoff_tol;
            w.row({num(h), num(p.q.r), num(p.q.theta), num(p.q.z), num(p.t), num(r.u_free.real()), num(r.u_free.imag()),
                   num(r.u_sharp.real()), num(r.u_sharp.imag()), num(r.u_ref.real()), num(r.u_ref.imag()),
                   num(r.rel_err), num(cfg.kirchhoff_tol), pass ? "true" : "false"});
            s.add("kirchhoff_identity", kv({{"h", h}, {"r", p.q.r}, {"theta", p.q.theta}, {"z", p.q.z}, {"t", p.t}}),
                  r.rel_err, cfg.kirchhoff_tol);
        }
    }
    return s;
}

int run(const RunConfig& cfg, const json& resolved) {
    fs::create_directories(cfg.out);
    write_json(cfg.out / "config.json", resolved);
    Suite s;
    std::string suite_file;
    if (cfg.command == "specfun-check") s = specfun_check(cfg), suite_file = "specfun.csv";
    else if (cfg.command == "parametrix-verify") s = parametrix_verify(cfg), suite_file = "parametrix.csv";
    else if (cfg.command == "green-validate") s = green_validate(cfg), suite_file = "green.csv";
    else if (cfg.command == "dispersion-scan") s = dispersion_suite(cfg);
    else s = kirchhoff_suite(cfg);
    if (!suite_file.empty()) {
        CsvWriter w(cfg.out / suite_file, {"test", "params", "residual", "tol", "pass"});
        for (const auto& r : s.rows()) w.row({r.test, r.params, num(r.residual), num(r.tol), r.pass ? "true" : "false"});
    }
    int n_pass = 0, n_fail = 0;
    double worst = 0.0;
    std::string worst_test;
    for (const auto& r : s.rows()) {
        (r.pass ? n_pass : n_fail)++;
        if (!(r.residual <= worst)) worst = r.residual, worst_test = r.test + " " + r.params;
        if (!r.pass) std::cerr << "FAIL " << r.test << " [" << r.params << "] residual " << num(r.residual) << " tol "
                               << num(r.tol) << "\n";
    }
    json summary;
    summary["suite"] = cfg.command;
    summary["n_pass"] = n_pass;
    summary["n_fail"] = n_fail;
    summary["worst_residual"] = std::isfinite(worst) ? json(worst) : json(num(worst));
    summary["worst_case"] = worst_test;
    summary["config"] = resolved;
    write_json(cfg.out / "summary.json", summary);
    std::cout << cfg.command << ": " << n_pass << " pass, " << n_fail << " fail, worst residual " << num(worst) << "\n";
    return n_fail == 0 ? 0 : 1;
}

struct Flags {
    std::optional<std::string> config, out, h, t, tol, eps, n_max, seed, threads, t_decades;
};

void add_flags(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "JSON config file; flags override its values");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--h", f.h, "comma-separated semiclassical parameters, fractions allowed (1/16,1/32)");
    sub->add_option("--t", f.t, "comma-separated times, or decades:N");
    sub->add_option("--t-decades", f.t_decades, "log time grid with 4 points per decade from t_start");
    sub->add_option("--tol", f.tol, "truncation tolerance");
    sub->add_option("--eps", f.eps, "glancing cutoff width");
    sub->add_option("--n-max", f.n_max, "mode-sum cap");
    sub->add_option("--seed", f.seed, "seed for grid jitter and random draws");
    sub->add_option("--threads", f.threads, "worker threads");
}

json build_config(const std::string& cmd, const Flags& f) {
    json c = default_config(cmd);
    if (f.config) {
        std::ifstream in(*f.config);
        if (!in) throw SchemaError("cannot read config file " + *f.config);
        json file;
        try {
            file = json::parse(in);
        } catch (const json::parse_error& e) {
            throw SchemaError("config file " + *f.config + ": " + e.what());
        }
        overlay(c, file);
    }
    auto to_int = [](const std::string& s, const char* what) {
        double v = parse_number(s, what);
        if (v != std::floor(v)) throw SchemaError(std::string(what) + ": expected an integer");
        return static_cast<long long>(v);
    };
    if (f.out) c["out"] = *f.out;
    if (f.h) c["h"] = parse_list(*f.h, "h");
    if (f.t) {
        if (f.t->rfind("decades:", 0) == 0) {
            c["t"] = json::array();
            c["t_decades"] = to_int(f.t->substr(8), "t");
        } else {
            c["t"] = parse_list(*f.t, "t");
            if (c["t"].empty()) throw SchemaError("t: grid is empty");
        }
    }
    if (f.t_decades) {
        c["t"] = json::array();
        c["t_decades"] = to_int(*f.t_decades, "t-decades");
    }
    if (f.tol) c["tol"] = parse_number(*f.tol, "tol");
    if (f.eps) c["eps"] = parse_number(*f.eps, "eps");
    if (f.n_max) c["n_max"] = to_int(*f.n_max, "n-max");
    if (f.seed) c["seed"] = to_int(*f.seed, "seed");
    if (f.threads) c["threads"] = to_int(*f.threads, "threads");
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cylwave: exterior-cylinder wave kernels, validation suites and dispersion scans"};
    app.set_help_flag("--help", "print help");
    app.require_subcommand(1);
    Flags flags;
    for (const auto& name : kCommands) add_flags(app.add_subcommand(name), flags);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    std::string cmd = app.get_subcommands().front()->get_name();
    json resolved;
    RunConfig cfg;
    try {
        resolved = build_config(cmd, flags);
        cfg = resolve(resolved);
    } catch (const SchemaError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    try {
        return run(cfg, resolved);
    } catch (const std::exception& e) {
        std::cerr << cmd << ": " << e.what() << "\n";
        return 1;
    }
}

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "affine/analysis.hpp"
#include "affine/errors.hpp"
#include "affine/hash.hpp"
#include "affine/mechanisms.hpp"
#include "affine/model.hpp"
#include "affine/riccati.hpp"
#include "affine/simulator.hpp"
#include "affine/suite.hpp"

namespace fs = std::filesystem;
using namespace affine;
using nlohmann::json;

namespace
{
constexpr char const* kVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitStrict = 2;
constexpr int kExitUsage = 64;

std::string fmt(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::string read_file(std::string const& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot read " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string iso_now()
{
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

//---------------------------------------------------------------------------//
struct Globals
{
    std::string model;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string out;
    bool strict = false;
};

//! Collects outputs; writes to --out or prints to stdout.
class Sink
{
  public:
    explicit Sink(std::string dir) : dir_(std::move(dir)) {}

    void emit(std::string const& name, std::string const& content)
    {
        if (dir_.empty())
        {
            std::cout << content;
            if (!content.empty() && content.back() != '\n')
                std::cout << '\n';
            return;
        }
        fs::create_directories(dir_);
        std::ofstream f(fs::path(dir_) / name, std::ios::binary);
        f << content;
        if (!f)
            throw ConfigError("cannot write " + name);
        hashes_[name] = hex64(fnv1a(content));
    }

    void emit(std::string const& name, json const& j) { emit(name, j.dump(2) + "\n"); }

    std::string const& dir() const { return dir_; }
    std::map<std::string, std::string> const& hashes() const { return hashes_; }

  private:
    std::string dir_;
    std::map<std::string, std::string> hashes_;
};

//---------------------------------------------------------------------------//
ModelParams model_of(Globals const& g)
{
    if (g.model.empty())
        throw ConfigError("--model is required");
    return load_model(g.model);
}

std::string row1(std::initializer_list<double> vals)
{
    std::string s;
    for (double v : vals)
    {
        if (!s.empty())
            s += ',';
        s += fmt(v);
    }
    return s + '\n';
}

struct SimFlags
{
    double dt = 1e-3;
    double T = 1;
    std::size_t paths = 1000;
    std::vector<double> record;
    double eps_trunc = 0;
    std::string small_jumps = "drop_compensate";
    std::optional<double> coal_tol;

    void add(CLI::App* c, double default_dt, double default_T, std::size_t default_paths)
    {
        dt = default_dt;
        T = default_T;
        paths = default_paths;
        c->add_option("--dt", dt, "Euler step")->capture_default_str();
        c->add_option("--T", T, "horizon")->capture_default_str();
        c->add_option("--paths", paths, "number of paths")->capture_default_str();
        c->add_option("--record", record, "record times t1,t2,...")->delimiter(',');
        c->add_option("--eps-trunc", eps_trunc, "small-jump cutoff (infinite activity)");
        c->add_option("--small-jumps", small_jumps, "drop_compensate | gaussian_approx")
            ->capture_default_str();
        c->add_option("--coal-tol", coal_tol, "coalescence tolerance");
    }

    SimConfig config(Globals const& g) const
    {
        SimConfig cfg;
        cfg.dt = dt;
        cfg.T = T;
        cfg.n_paths = paths;
        cfg.record_times = record;
        cfg.eps_trunc = eps_trunc;
        cfg.small_jump_mode = small_jump_mode_from_string(small_jumps);
        cfg.coal_tol = coal_tol;
        cfg.seed = g.seed;
        cfg.threads = g.threads;
        return cfg;
    }
};

//! Density on [lo, hi] of the z2 line from an expression in z.
LineDensity line_density(std::string const& text, double lo, double hi)
{
    auto e = Expression::parse_1d(text, 1);
    return {[e](double z) { return e(0, z); }, lo, hi, text};
}

int verdict_exit(Globals const& g, bool ok)
{
    return g.strict && !ok ? kExitStrict : kExitOk;
}

//---------------------------------------------------------------------------//
// SUBCOMMANDS
//---------------------------------------------------------------------------//
int run_validate(Globals const& g, Sink& sink)
{
    auto rep = validate(model_of(g));
    sink.emit("validate.json", to_json(rep));
    return verdict_exit(g, rep.all_pass());
}

struct ConditionFlags
{
    std::vector<std::string> which = {"A", "B", "C", "Cprime"};
    std::vector<double> theta = {1e-3, 1e-2, 0.1, 1};
    double z_max = 100;
    double eps = 0.1;
    double eta = 0.1;
    std::vector<double> a_grid = {0.025, 0.05, 0.1};
    std::vector<double> rho = {1e-1, 1e-2, 1e-3, 1e-4};
    std::string rho0 = "0";
    std::string gexpr = "exp(-z^2/2)/sqrt(2*pi)";
    double lo = -8;
    double hi = 8;
    std::vector<int> k_list = {1, 2, 4, 8};
    int K = 8;
};

int run_check_conditions(Globals const& g, ConditionFlags const& f, Sink& sink)
{
    auto p = model_of(g);
    json out = json::array();
    bool ok = true;
    for (auto const& c : f.which)
    {
        ConditionReport r;
        if (c == "A")
            r = check_A(p, f.theta, f.z_max);
        else if (c == "B")
            r = check_B(p, f.eps, f.eta, f.a_grid);
        else if (c == "C")
            r = check_C(p, f.eps, f.rho);
        else if (c == "Cprime")
            r = check_Cprime(p, f.eps, f.rho);
        else if (c == "D")
            r = check_D(p, line_density(f.rho0, f.lo, f.hi), line_density(f.gexpr, f.lo, f.hi),
                        f.k_list, f.K, f.rho);
        else
            throw ConfigError("unknown condition " + c);
        ok = ok && r.verdict == Verdict::holds;
        out.push_back(to_json(r));
    }
    sink.emit("conditions.json", out);
    return verdict_exit(g, ok);
}

struct UFlags
{
    double u1 = -1;
    double u1i = 0;
    double u2i = 0;

    void add(CLI::App* c)
    {
        c->add_option("--u1", u1, "Re u1 (<= 0)")->capture_default_str();
        c->add_option("--u1i", u1i, "Im u1")->capture_default_str();
        c->add_option("--u2i", u2i, "Im u2")->capture_default_str();
    }
    UPoint point() const { return UPoint(cplx(u1, u1i), cplx(0, u2i)); }
};

int run_solve_riccati(Globals const& g, UFlags const& u, std::vector<double> times, Sink& sink)
{
    RiccatiSolver s(model_of(g));
    if (times.empty())
        times = {1};
    std::sort(times.begin(), times.end());
    RiccatiOptions o;
    o.output_times = times;
    auto sol = s.solve_V(u.point(), times.back(), o);
    std::string csv = "t,V1_re,V1_im,V2_re,V2_im,Psi_re,Psi_im\n";
    for (double t : times)
    {
        auto k = sol.index_of(t);
        csv += row1({t, sol.V1[k].real(), sol.V1[k].imag(), sol.V2[k].real(), sol.V2[k].imag(),
                     sol.psi_accum[k].real(), sol.psi_accum[k].imag()});
    }
    sink.emit("riccati.csv", csv);
    return kExitOk;
}

std::string const kTransformHeader = "t,u1_re,u1_im,u2_im,value_re,value_im\n";

int run_charfn(Globals const& g,
               UFlags const& u,
               std::vector<double> times,
               double x1,
               double x2,
               Sink& sink)
{
    RiccatiSolver s(model_of(g));
    if (times.empty())
        times = {1};
    std::string csv = kTransformHeader;
    for (double t : times)
    {
        cplx v = s.char_fn(t, x1, x2, u.point());
        csv += row1({t, u.u1, u.u1i, u.u2i, v.real(), v.imag()});
    }
    sink.emit("charfn.csv", csv);
    return kExitOk;
}

int run_vbar(Globals const& g, double t_min, double t_max, int points, Sink& sink)
{
    RiccatiSolver s(model_of(g));
    auto tab = s.vbar_table(t_min, t_max, points);
    std::string csv = "t,vbar\n";
    for (std::size_t i = 0; i < tab.t.size(); ++i)
        csv += row1({tab.t[i], tab.v[i]});
    sink.emit("vbar.csv", csv);
    return kExitOk;
}

int run_stationary(Globals const& g,
                   std::vector<double> u1s,
                   double u2i,
                   bool moments,
                   double x1,
                   double x2,
                   SimFlags const& sf,
                   Sink& sink)
{
    auto p = model_of(g);
    RiccatiSolver s(p);
    if (u1s.empty())
        u1s = {-0.25, -1, -4};
    std::string csv = kTransformHeader;
    for (double u1 : u1s)
    {
        auto r = s.stationary_transform(UPoint(u1, cplx(0, u2i)));
        csv += row1({r.horizon, u1, 0, u2i, r.value.real(), r.value.imag()});
    }
    sink.emit("stationary.csv", csv);
    if (!moments)
        return kExitOk;

    auto m = stationary_moments(p, {x1, x2}, sf.config(g));
    BoundReport rep;
    rep.name = "stationary_delta1";
    rep.scale = "moment";
    rep.constants = {{"delta1", m.delta1_exact}};
    rep.notes.push_back("empirical is the ensemble mean of Y at horizon t; bound is delta1");
    for (auto const& h : m.by_horizon)
    {
        rep.add(h.horizon, h.delta1, h.delta1_se, m.delta1_exact);
        rep.rows.back().extra = {{"delta2_hat", h.delta2}, {"delta2_se", h.delta2_se}};
    }
    sink.emit("stationary_moments.csv", rep.to_csv());
    sink.emit("stationary_moments.json", rep.to_json());
    return verdict_exit(g, m.delta1_within_3se);
}

int run_simulate(Globals const& g, SimFlags const& sf, double x1, double x2, Sink& sink)
{
    auto e = simulate_paths(model_of(g), x1, x2, sf.config(g));
    std::ostringstream os;
    os << "path_id,t,Y,Z\n";
    for (std::size_t p = 0; p < e.n_paths; ++p)
        for (std::size_t r = 0; r < e.times.size(); ++r)
            os << p << ',' << fmt(e.times[r]) << ',' << fmt(e.y(r, p)) << ',' << fmt(e.z(r, p))
               << '\n';
    sink.emit("paths.csv", os.str());
    return kExitOk;
}

int run_couple(Globals const& g,
               SimFlags const& sf,
               double x1,
               double x2,
               double y1,
               double y2,
               Sink& sink)
{
    auto e = simulate_coupled(model_of(g), x1, x2, y1, y2, sf.config(g));
    std::ostringstream os;
    os << "path_id,t,Y,Z,Y2,Z2,coalesced,varsigma\n";
    for (std::size_t p = 0; p < e.n_paths; ++p)
        for (std::size_t r = 0; r < e.times.size(); ++r)
        {
            auto k = e.at(r, p);
            bool c = e.varsigma[p] <= e.times[r];
            os << p << ',' << fmt(e.times[r]) << ',' << fmt(e.Yx[k]) << ',' << fmt(e.Zx[k]) << ','
               << fmt(e.Yy[k]) << ',' << fmt(e.Zy[k]) << ',' << (c ? 1 : 0) << ','
               << fmt(e.varsigma[p]) << '\n';
        }
    sink.emit("coupled.csv", os.str());
    return kExitOk;
}

void emit_report(Sink& sink, std::string const& stem, BoundReport const& rep)
{
    sink.emit(stem + ".csv", rep.to_csv());
    sink.emit(stem + ".json", rep.to_json());
}

int run_tv_curve(Globals const& g,
                 SimFlags const& sf,
                 double x1,
                 double x2,
                 std::vector<double> times,
                 double eps,
                 int bootstrap,
                 Sink& sink)
{
    auto p = model_of(g);
    if (times.empty())
        times = {1, 2, 4, 8};
    std::optional<Prop42Constants> c42;
    if (eps > 0)
        c42 = prop42_constants(p, eps, {1e-1, 1e-2, 1e-3, 1e-4});
    auto cfg = sf.config(g);
    cfg.T = *std::max_element(times.begin(), times.end());
    auto res = ergodicity_curve(p, {x1, x2}, times, cfg, c42, bootstrap);
    res.curve.constants.push_back({"fitted_rate", res.fitted_rate});
    res.curve.constants.push_back({"monotone", res.monotone ? 1 : 0});
    emit_report(sink, "tv_curve", res.curve);
    return verdict_exit(g, res.monotone && !res.curve.any_violation());
}

int run_verify_bounds(Globals const& g,
                      SimFlags const& sf,
                      double x1,
                      double x2,
                      double y1,
                      double y2,
                      std::vector<double> times,
                      std::vector<std::string> const& which,
                      Sink& sink)
{
    auto p = model_of(g);
    if (times.empty())
        times = {0.25, 0.5, 1, 2};
    auto cfg = sf.config(g);
    cfg.T = *std::max_element(times.begin(), times.end());
    bool ok = true;
    for (auto const& w : which)
    {
        if (w == "lemma31")
        {
            auto r = lemma31_check(p, {x1, x2}, {y1, y2}, times, cfg);
            emit_report(sink, "lemma31", r.mean);
            emit_report(sink, "lemma31_tail", r.tail);
            ok = ok && !r.mean.any_violation() && !r.tail.any_violation();
        }
        else if (w == "coalescence")
        {
            auto r = coalescence_curve(p, x1, y1, times, cfg);
            emit_report(sink, "coalescence", r);
            ok = ok && !r.any_violation();
        }
        else
            throw ConfigError("unknown bound " + w);
    }
    return verdict_exit(g, ok);
}

struct FellerFlags
{
    double t = 1;
    std::vector<double> radii = {0, 0.1, 0.5, 1};
    std::string rho0 = "0.5*exp(-z^2/2)/sqrt(2*pi)";
    std::string gexpr = "exp(-z^2/2)/sqrt(2*pi)";
    double lo = -8;
    double hi = 8;
    double k = 4;
    int bootstrap = 20;
};

int run_strong_feller(Globals const& g,
                      SimFlags const& sf,
                      double x1,
                      double x2,
                      FellerFlags const& f,
                      Sink& sink)
{
    auto p = model_of(g);
    auto sk = sigma_k(line_density(f.rho0, f.lo, f.hi), line_density(f.gexpr, f.lo, f.hi), f.k);
    double lam = 0;
    for (double r : {1e-2, 1e-3, 1e-4})
        lam = std::max(lam, shift_tv_ratio(sk, r));
    auto c51 = lemma51_constants(p, f.t, lam, sk.mass());
    auto cfg = sf.config(g);
    cfg.T = f.t;
    auto rep = strong_feller_probe(p, {x1, x2}, f.t, f.radii, cfg, c51, f.bootstrap);
    emit_report(sink, "strong_feller", rep);
    return verdict_exit(g, !rep.any_violation());
}

int run_suite_cmd(Globals const& g, SuiteOptions opts, Sink& sink)
{
    opts.seed = g.seed;
    opts.threads = g.threads;
    auto results = run_suite(opts);
    bool all = true;
    json j = json::array();
    for (auto const& r : results)
    {
        std::cout << "[" << (r.pass ? "PASS" : "FAIL") << "] " << r.id << ". " << r.name
                  << ": " << r.detail << '\n';
        all = all && r.pass;
        j.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail},
                     {"seconds", r.seconds}, {"data", r.data}});
    }
    std::cout << "hash " << hex64(suite_hash(results)) << std::endl;
    if (!sink.dir().empty())
    {
        sink.emit("suite.json", j);
        sink.emit("suite_data.json", suite_data(results));
    }
    return verdict_exit(g, all);
}

//---------------------------------------------------------------------------//
// MANIFEST
//---------------------------------------------------------------------------//
//! Replace "--from-manifest PATH" by the recorded argv; a new --out wins.
std::vector<std::string> expand_manifest(std::vector<std::string> args)
{
    auto it = std::find(args.begin(), args.end(), "--from-manifest");
    if (it == args.end())
        return args;
    if (it + 1 == args.end())
        throw CLI::ArgumentMismatch("--from-manifest needs a path");
    json m = json::parse(read_file(*(it + 1)));
    std::string out;
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
        if (args[i] == "--out")
            out = args[i + 1];
    std::vector<std::string> replay;
    auto recorded = m.at("argv").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < recorded.size(); ++i)
    {
        if (recorded[i] == "--out")
        {
            ++i;
            continue;
        }
        replay.push_back(recorded[i]);
    }
    if (!out.empty())
    {
        replay.push_back("--out");
        replay.push_back(out);
    }
    if (m.contains("model") && !m["model"].is_null())
    {
        auto h = hex64(fnv1a(read_file(m["model"].get<std::string>())));
        if (h != m.at("model_hash").get<std::string>())
            throw ConfigError("model file changed since the manifest was written");
    }
    return replay;
}

void write_manifest(Sink const& sink,
                    std::string const& sub,
                    Globals const& g,
                    std::vector<std::string> const& argv,
                    std::string const& start)
{
    json m;
    m["subcommand"] = sub;
    m["argv"] = argv;
    m["seed"] = g.seed;
    m["threads"] = g.threads;
    m["version"] = kVersion;
    if (g.model.empty())
    {
        m["model"] = nullptr;
        m["model_hash"] = nullptr;
    }
    else
    {
        m["model"] = fs::absolute(g.model).string();
        m["model_hash"] = hex64(fnv1a(read_file(g.model)));
    }
    m["start"] = start;
    m["end"] = iso_now();
    m["outputs"] = sink.hashes();
    std::ofstream f(fs::path(sink.dir()) / "manifest.json");
    f << m.dump(2) << '\n';
}

unsigned default_threads()
{
    if (char const* env = std::getenv("AFFINE_ERGO_THREADS"))
    {
        try
        {
            int n = std::stoi(env);
            if (n > 0)
                return unsigned(n);
        }
        catch (std::exception const&)
        {
        }
    }
    return 1;
}

}  // namespace

//---------------------------------------------------------------------------//
int main(int argc, char** argv)
{
    std::string start = iso_now();
    std::vector<std::string> args(argv + 1, argv + argc);
    try
    {
        args = expand_manifest(args);
    }
    catch (CLI::Error const& e)
    {
        std::cerr << e.what() << '\n';
        return kExitUsage;
    }
    catch (std::exception const& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }

    CLI::App app{"Affine CBI x OU processes: Riccati flows, simulation and ergodicity checks",
                 "affine_ergo"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    Globals g;
    g.threads = default_threads();
    std::string manifest_path;
    app.add_option("--model", g.model, "model JSON file");
    app.add_option("--seed", g.seed, "RNG seed")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads (env AFFINE_ERGO_THREADS)")
        ->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "output directory (manifest.json is written there)");
    app.add_flag("--strict", g.strict, "exit 2 when a check fails");
    app.add_option("--from-manifest", manifest_path, "replay a manifest");

    auto sub = [&](char const* name, char const* desc) {
        auto* c = app.add_subcommand(name, desc);
        c->fallthrough();
        return c;
    };

    double x1 = 1, x2 = 0, y1 = 0, y2 = 0;
    auto add_x = [&](CLI::App* c) {
        c->add_option("--x1", x1, "start Y")->capture_default_str();
        c->add_option("--x2", x2, "start Z")->capture_default_str();
    };
    auto add_y = [&](CLI::App* c) {
        c->add_option("--y1", y1, "second start Y")->capture_default_str();
        c->add_option("--y2", y2, "second start Z")->capture_default_str();
    };

    sub("validate", "integrability and sign checks of a model");

    ConditionFlags cf;
    auto* cc = sub("check-conditions", "checkers for conditions A, B, C, C', D");
    cc->add_option("--conditions", cf.which, "subset of A,B,C,Cprime,D")->delimiter(',');
    cc->add_option("--theta", cf.theta, "condition A theta grid")->delimiter(',');
    cc->add_option("--z-max", cf.z_max, "condition A start of the doubling");
    cc->add_option("--eps", cf.eps, "n_eps cutoff");
    cc->add_option("--eta", cf.eta, "condition B eta");
    cc->add_option("--a-grid", cf.a_grid, "condition B shifts")->delimiter(',');
    cc->add_option("--rho", cf.rho, "shift grid")->delimiter(',');
    cc->add_option("--rho0", cf.rho0, "condition D density rho0(z)");
    cc->add_option("--g", cf.gexpr, "condition D density g(z)");
    cc->add_option("--lo", cf.lo, "density support lower end");
    cc->add_option("--hi", cf.hi, "density support upper end");
    cc->add_option("--k", cf.k_list, "condition D k values")->delimiter(',');
    cc->add_option("--K", cf.K, "condition D largest k");

    UFlags uf;
    std::vector<double> times;
    auto* sr = sub("solve-riccati", "V1, V2 and Psi at given times");
    uf.add(sr);
    sr->add_option("--t", times, "times")->delimiter(',');

    auto* ch = sub("charfn", "E exp<X_t(x), u> from the Riccati flow");
    uf.add(ch);
    ch->add_option("--t", times, "times")->delimiter(',');
    add_x(ch);

    double t_min = 0.01, t_max = 10;
    int points = 41;
    auto* vb = sub("vbar", "vbar on a log grid");
    vb->add_option("--t-min", t_min)->capture_default_str();
    vb->add_option("--t-max", t_max)->capture_default_str();
    vb->add_option("--points", points)->capture_default_str();

    std::vector<double> u1s;
    double u2i = 0;
    bool moments = false;
    SimFlags sf_stat, sf_sim, sf_couple, sf_tv, sf_bounds, sf_feller;
    auto* st = sub("stationary", "stationary transform; --moments adds a long-run ensemble");
    st->add_option("--u1", u1s, "Re u1 values")->delimiter(',');
    st->add_option("--u2i", u2i, "Im u2");
    st->add_flag("--moments", moments, "estimate Delta1 and Delta2 by simulation");
    add_x(st);
    sf_stat.add(st, 2e-2, 80, 10000);

    auto* sim = sub("simulate", "Euler paths from x");
    sf_sim.add(sim, 1e-3, 1, 1000);
    add_x(sim);

    auto* cp = sub("couple", "coupled paths from x and y");
    sf_couple.add(cp, 1e-3, 1, 1000);
    add_x(cp);
    add_y(cp);

    double tv_eps = 0;
    int bootstrap = 20;
    auto* tv = sub("tv-curve", "2 tv_hat(P_t(x), pi_hat) over t");
    sf_tv.add(tv, 1e-2, 8, 20000);
    add_x(tv);
    tv->add_option("--t", times, "times")->delimiter(',');
    tv->add_option("--eps", tv_eps, "n_eps cutoff for the exponential-rate constants (0: none)");
    tv->add_option("--bootstrap", bootstrap, "bootstrap replicates");

    std::vector<std::string> which = {"lemma31", "coalescence"};
    auto* vbd = sub("verify-bounds", "moment and coalescence bounds on a coupled ensemble");
    sf_bounds.add(vbd, 2.5e-3, 2, 20000);
    add_x(vbd);
    add_y(vbd);
    vbd->add_option("--t", times, "times")->delimiter(',');
    vbd->add_option("--bounds", which, "subset of lemma31,coalescence")->delimiter(',');

    FellerFlags ff;
    auto* sfc = sub("strong-feller", "TV continuity in the initial state");
    sf_feller.add(sfc, 1e-2, 1, 20000);
    add_x(sfc);
    sfc->add_option("--t", ff.t, "time")->capture_default_str();
    sfc->add_option("--radii", ff.radii, "distances |x - y|")->delimiter(',');
    sfc->add_option("--rho0", ff.rho0, "density rho0(z)");
    sfc->add_option("--g", ff.gexpr, "density g(z)");
    sfc->add_option("--lo", ff.lo);
    sfc->add_option("--hi", ff.hi);
    sfc->add_option("--k", ff.k, "sigma_k = min(k g, rho0)");
    sfc->add_option("--bootstrap", ff.bootstrap, "bootstrap replicates");

    SuiteOptions so;
    so.models_dir = AFFINE_MODELS_DIR;
    auto* su = sub("suite", "acceptance battery on the bundled models");
    su->add_option("--models-dir", so.models_dir)->capture_default_str();
    su->add_option("--paths", so.paths, "base Monte Carlo size")->capture_default_str();
    su->add_option("--only", so.only, "criteria to run")->delimiter(',');

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try
    {
        app.parse(rev);
    }
    catch (CLI::ParseError const& e)
    {
        if (e.get_exit_code() == 0)
            return app.exit(e);
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    auto* chosen = app.get_subcommands().front();
    std::string name = chosen->get_name();
    Sink sink(g.out);
    int code = kExitOk;
    try
    {
        if (name == "validate")
            code = run_validate(g, sink);
        else if (name == "check-conditions")
            code = run_check_conditions(g, cf, sink);
        else if (name == "solve-riccati")
            code = run_solve_riccati(g, uf, times, sink);
        else if (name == "charfn")
            code = run_charfn(g, uf, times, x1, x2, sink);
        else if (name == "vbar")
            code = run_vbar(g, t_min, t_max, points, sink);
        else if (name == "stationary")
            code = run_stationary(g, u1s, u2i, moments, x1, x2, sf_stat, sink);
        else if (name == "simulate")
            code = run_simulate(g, sf_sim, x1, x2, sink);
        else if (name == "couple")
            code = run_couple(g, sf_couple, x1, x2, y1, y2, sink);
        else if (name == "tv-curve")
            code = run_tv_curve(g, sf_tv, x1, x2, times, tv_eps, bootstrap, sink);
        else if (name == "verify-bounds")
            code = run_verify_bounds(g, sf_bounds, x1, x2, y1, y2, times, which, sink);
        else if (name == "strong-feller")
            code = run_strong_feller(g, sf_feller, x1, x2, ff, sink);
        else if (name == "suite")
            code = run_suite_cmd(g, so, sink);
        if (!g.out.empty())
            write_manifest(sink, name, g, args, start);
    }
    catch (std::exception const& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return code;
}

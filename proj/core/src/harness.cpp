#include "onestep/harness.hpp"

#include "onestep/errors.hpp"
#include "onestep/largelr.hpp"
#include "onestep/manifest.hpp"
#include "onestep/pool.hpp"
#include "onestep/regress.hpp"
#include "onestep/simulate.hpp"
#include "onestep/spectra.hpp"
#include "onestep/stats.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace onestep {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class CsvWriter {
public:
    CsvWriter(const fs::path& path, const std::vector<std::string>& header) : path_(path), out_(path) {
        if (!out_) throw Error("cannot open " + path.string() + " for writing");
        row(header);
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    const fs::path& path() const { return path_; }

private:
    fs::path path_;
    std::ofstream out_;
};

std::string num(double v) { return format_double(v); }
std::string num(long long v) { return std::to_string(v); }

std::string numbered(const std::string& stem, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_%03zu.csv", i);
    return stem + buf;
}

struct Context {
    const RunConfig& cfg;
    const RunOptions& opt;
    RunResult result;
    std::vector<std::uint64_t> seeds;

    void log(const std::string& line) const {
        if (opt.log) *opt.log << line << '\n';
    }
    void note(const std::string& line) {
        if (std::find(result.notes.begin(), result.notes.end(), line) == result.notes.end()) {
            result.notes.push_back(line);
            log(line);
        }
    }
    fs::path file(const std::string& name) {
        auto p = opt.out_dir / name;
        result.outputs.push_back(p);
        return p;
    }
};

std::vector<RunConfig> grid_points(const RunConfig& cfg) {
    if (cfg.axis.empty()) return {cfg};
    std::vector<RunConfig> out;
    for (double v : cfg.values) {
        RunConfig p = cfg;
        apply_axis(p, cfg.axis, v);
        p.exp.validate();
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<int> plan_steps(const RunConfig& p) {
    std::vector<int> s{0};
    if (p.steps > 0) s.push_back(p.steps);
    return s;
}

std::uint64_t replica_seed(const RunConfig& cfg, int k) { return cfg.exp.seed + static_cast<std::uint64_t>(k); }

void collect_notes(Context& ctx, const Models& m) {
    for (const auto& n : m.notes) ctx.note(n);
}

double or_nan(auto&& f) {
    try {
        return f();
    } catch (const NumericalError&) {
        return kNaN;
    }
}

// ---------------------------------------------------------------- risk

void run_risk(Context& ctx) {
    const auto points = grid_points(ctx.cfg);
    const int R = ctx.cfg.exp.replicas;
    std::vector<Models> models;
    std::vector<ReplicaPlan> plans;
    for (const auto& p : points) {
        models.push_back(build_models(p));
        collect_notes(ctx, models.back());
        ReplicaPlan plan;
        plan.steps = plan_steps(p);
        plans.push_back(plan);
    }
    std::vector<ReplicaMeasurement> out(points.size() * static_cast<std::size_t>(R));
    parallel_for(out.size(), ctx.opt.workers, [&](std::size_t i) {
        const std::size_t g = i / R;
        const int k = static_cast<int>(i % R);
        out[i] = measure_replica(points[g], models[g], replica_seed(ctx.cfg, k), plans[g]);
    });

    CsvWriter csv(ctx.file("risk.csv"), risk_columns());
    for (std::size_t g = 0; g < points.size(); ++g) {
        const auto& p = points[g];
        const auto& t = models[g].teacher;
        const auto db = derivative_coefficients(models[g].student, p.quadrature_order);
        const double lin =
            or_nan([&] { return linear_ridge_risk(p.exp.lambda, p.exp.psi1(), t.mu1_star, t.mu2_star, t.sigma_eps); });
        const double ntk = or_nan([&] { return ntk_equiv_risk(p.exp.lambda, p.exp.psi1(), db.b0, db.b1, t); });
        for (std::size_t s = 0; s < plans[g].steps.size(); ++s) {
            std::vector<double> risks;
            for (int k = 0; k < R; ++k) risks.push_back(out[g * R + k].steps[s].risk);
            const auto sum = summarize(risks);
            csv.row({num(p.exp.psi1()), num(p.exp.psi2()), num(p.exp.eta()), num(p.exp.alpha), num(p.exp.lambda),
                     num(static_cast<long long>(plans[g].steps[s])), num(sum.mean), num(sum.std_err), num(lin),
                     num(ntk), num(t.mu2_star * t.mu2_star)});
        }
    }
}

// ---------------------------------------------------------------- large learning rate

void run_largelr(Context& ctx) {
    const auto points = grid_points(ctx.cfg);
    const int R = ctx.cfg.exp.replicas;
    std::vector<Models> models;
    std::vector<TauStarResult> ts;
    for (const auto& p : points) {
        models.push_back(build_models(p));
        collect_notes(ctx, models.back());
        TauSearch search;
        search.eta_bar = p.exp.eta_bar;
        ts.push_back(tau_star(models.back().student, models.back().teacher.sigma_star, search, p.quadrature_order));
        for (const auto& w : ts.back().warnings) ctx.note("tau*: " + w);
    }
    OracleOptions oo;
    oo.r = ctx.cfg.oracle_r;
    oo.penalty_exponent = ctx.cfg.penalty_exponent;
    std::vector<OracleReport> out(points.size() * static_cast<std::size_t>(R));
    parallel_for(out.size(), ctx.opt.workers, [&](std::size_t i) {
        const std::size_t g = i / R;
        const int k = static_cast<int>(i % R);
        ExperimentConfig e = points[g].exp;
        e.seed = replica_seed(ctx.cfg, k);
        out[i] = oracle_risk_experiment(e, models[g].student, models[g].teacher, ts[g], 0, oo);
    });

    CsvWriter csv(ctx.file("largelr.csv"), largelr_columns());
    for (std::size_t g = 0; g < points.size(); ++g) {
        const auto& p = points[g];
        const auto& t = models[g].teacher;
        std::vector<double> ridge, oracle;
        for (int k = 0; k < R; ++k) {
            ridge.push_back(out[g * R + k].ridge_risk.mean);
            oracle.push_back(out[g * R + k].oracle_risk.mean);
        }
        const auto rs = summarize(ridge);
        const bool empty = std::any_of(oracle.begin(), oracle.end(), [](double v) { return std::isnan(v); });
        if (empty) ctx.note("oracle subset empty at psi1=" + num(p.exp.psi1()) + "; oracle_risk reported as nan");
        const double oracle_mean = empty ? kNaN : summarize(oracle).mean;
        const double lam = out[g * R].ridge_lambda;
        const auto db = derivative_coefficients(models[g].student, p.quadrature_order);
        const double lin =
            or_nan([&] { return linear_ridge_risk(lam, p.exp.psi1(), t.mu1_star, t.mu2_star, t.sigma_eps); });
        const double ntk = or_nan([&] { return ntk_equiv_risk(lam, p.exp.psi1(), db.b0, db.b1, t); });
        csv.row({num(p.exp.psi1()), num(p.exp.psi2()), num(out[g * R].eta), num(0.5), num(lam),
                 num(static_cast<long long>(1)), num(rs.mean), num(rs.std_err), num(lin), num(ntk),
                 num(t.mu2_star * t.mu2_star), num(ts[g].tau_star), num(oracle_mean)});
    }
}

// ---------------------------------------------------------------- spectrum

double singular_density(double s, double psi2) {
    if (s <= 0.0) return 0.0;
    return 2.0 * s * std::max(1.0, psi2) * mp_density(s * s, psi2);
}

void run_spectrum(Context& ctx) {
    const auto points = grid_points(ctx.cfg);
    const int R = ctx.cfg.exp.replicas;
    const bool ck = ctx.cfg.recipe == "fig4";
    std::vector<Models> models;
    for (const auto& p : points) {
        models.push_back(build_models(p));
        collect_notes(ctx, models.back());
    }
    if (ck && !models.front().student.odd())
        ctx.note("student '" + models.front().student.name +
                 "' is not odd; the Gaussian-equivalent CK comparison is reported without guarantee");

    std::vector<ReplicaMeasurement> out(points.size() * static_cast<std::size_t>(R));
    std::vector<CkSpikeReport> cks(ck ? out.size() : 0);
    parallel_for(out.size(), ctx.opt.workers, [&](std::size_t i) {
        const std::size_t g = i / R;
        const int k = static_cast<int>(i % R);
        const auto& p = points[g];
        ReplicaPlan plan;
        plan.steps = {p.steps};
        plan.risk = false;
        plan.spectrum = true;
        plan.keep_singular_values = true;
        const std::uint64_t seed = replica_seed(ctx.cfg, k);
        out[i] = measure_replica(p, models[g], seed, plan);
        if (ck) {
            ExperimentConfig e = p.exp;
            e.seed = seed;
            auto net = init_network(e, 0);
            const auto train = sample_dataset(e, models[g].teacher, 0, StreamRole::train);
            net = multi_step(std::move(net), train, models[g].student, e.eta(), p.steps);
            const auto fresh = sample_dataset(e, models[g].teacher, 0, StreamRole::fresh);
            cks[i] = ck_spike_check(net.W, fresh.X, fresh.y, models[g].student,
                                    StreamId{seed, 0, StreamRole::ge_noise, 0});
        }
    });

    auto prediction = [&](std::size_t g) {
        const auto& p = points[g];
        const auto& m = models[g];
        const auto th = theta_params(p.exp.eta(), m.student.mu1, m.teacher.mu1_star, m.teacher.label_rms(),
                                     p.exp.psi1());
        return bbp_predict(th, p.exp.psi2());
    };

    const bool many = points.size() > 1;
    for (std::size_t g = 0; g < points.size(); ++g) {
        const auto pred = prediction(g);
        CsvWriter csv(ctx.file(many ? numbered("spike", g) : "spike.csv"), spike_columns());
        for (int k = 0; k < R; ++k) {
            const auto& m = out[g * R + k];
            csv.row({num(static_cast<long long>(m.seed)), num(m.steps.back().s1), num(pred.s1_limit),
                     num(m.steps.back().overlap), num(pred.overlap_sq)});
        }
    }

    if (many) {
        CsvWriter csv(ctx.file("spike_summary.csv"),
                      {ctx.cfg.axis, "s1_median", "s1_pred", "overlap_median", "overlap_pred", "isolated_fraction"});
        for (std::size_t g = 0; g < points.size(); ++g) {
            const auto pred = prediction(g);
            std::vector<double> s1, ov;
            int isolated = 0;
            for (int k = 0; k < R; ++k) {
                const auto& st = out[g * R + k].steps.back();
                s1.push_back(st.s1);
                ov.push_back(st.overlap);
                isolated += spike_isolated(st.s1, points[g].exp.psi2(), points[g].exp.d, points[g].spike_buffer);
            }
            csv.row({num(ctx.cfg.values[g]), num(median(s1)), num(pred.s1_limit), num(median(ov)),
                     num(pred.overlap_sq), num(static_cast<double>(isolated) / R)});
        }
    } else {
        std::vector<double> all;
        for (const auto& m : out) all.insert(all.end(), m.singular_values.begin(), m.singular_values.end());
        const double psi2 = points[0].exp.psi2();
        const double edge = std::sqrt(mp_edges(psi2).upper);
        const double top = all.empty() ? edge : *std::max_element(all.begin(), all.end());
        const double hi = std::max(edge, top) * 1.05;
        const auto h = make_histogram(all, points[0].bins, 0.0, hi);
        CsvWriter csv(ctx.file("histogram.csv"), histogram_columns());
        for (std::size_t b = 0; b + 1 < h.edges.size(); ++b) {
            const double mid = 0.5 * (h.edges[b] + h.edges[b + 1]);
            csv.row({num(h.edges[b]), num(h.edges[b + 1]), num(static_cast<long long>(h.counts[b])),
                     num(singular_density(mid, psi2))});
        }
    }

    if (ck) {
        CsvWriter csv(ctx.file("ck_spike.csv"), ck_spike_columns());
        for (std::size_t i = 0; i < cks.size(); ++i) {
            const auto& c = cks[i];
            const double s_ck = c.s_ck.empty() ? kNaN : c.s_ck.front();
            const double s_ge = c.s_ge.empty() ? kNaN : c.s_ge.front();
            csv.row({num(static_cast<long long>(out[i].seed)), num(s_ck * s_ck), num(s_ge * s_ge), num(c.overlap_ck),
                     num(c.overlap_ge)});
        }
    }
}

// ---------------------------------------------------------------- theory

void theory_row(CsvWriter& csv, double eta, double lambda, double psi1, double psi2, const TheoryParams& tp) {
    const auto r = delta(eta, lambda, psi1, psi2, tp);
    std::vector<std::string> row{num(eta), num(lambda), num(psi1), num(psi2), num(r.delta), num(r.c1), num(r.c2)};
    if (r.pair) {
        for (double v : {r.pair->m1, r.pair->m2, r.pair->m1p, r.pair->m2p}) row.push_back(num(v));
    } else {
        for (int i = 0; i < 4; ++i) row.push_back(num(kNaN));
    }
    for (int i = 1; i <= 12; ++i) row.push_back(num(r.taus ? (*r.taus)(i) : kNaN));
    csv.row(row);
}

void run_theory(Context& ctx) {
    CsvWriter csv(ctx.file("theory.csv"), theory_columns());
    if (ctx.cfg.recipe == "theory-grid") {
        const auto m = build_models(ctx.cfg);
        collect_notes(ctx, m);
        const auto tp = theory_params(m);
        const auto& v = ctx.cfg.values;
        for (double eta : v)
            for (double lambda : v)
                for (double psi1 : v)
                    for (double psi2 : v) theory_row(csv, eta, lambda, psi1, psi2, tp);
        return;
    }
    for (const auto& p : grid_points(ctx.cfg)) {
        const auto m = build_models(p);
        collect_notes(ctx, m);
        theory_row(csv, p.exp.eta(), p.exp.lambda, p.exp.psi1(), p.exp.psi2(), theory_params(m));
    }
}

// ---------------------------------------------------------------- tau*

void run_taustar(Context& ctx) {
    std::vector<std::pair<std::string, std::string>> rows;
    if (ctx.cfg.recipe == "taustar-table")
        rows = {{"erf", "erf"}, {"tanh", "tanh"}, {"softplus", "softplus"}, {"relu", "softplus"}};
    else
        rows = {{ctx.cfg.student, ctx.cfg.teacher}};
    CsvWriter csv(ctx.file("taustar.csv"), taustar_columns());
    for (const auto& [s, t] : rows) {
        RunConfig p = ctx.cfg;
        p.student = s;
        p.teacher = t;
        const auto m = build_models(p);
        collect_notes(ctx, m);
        TauSearch search;
        search.eta_bar = p.exp.eta_bar;
        const auto r = tau_star(m.student, m.teacher.sigma_star, search, p.quadrature_order);
        for (const auto& w : r.warnings) ctx.note("tau* " + s + "/" + t + ": " + w);
        csv.row({s, t, num(r.tau_star), num(r.kappa_star), r.achieved ? "true" : "false"});
    }
}

enum class Task { risk, largelr, spectrum, theory, taustar, none };

Task task_for(const RunConfig& cfg, Command cmd) {
    const auto& r = cfg.recipe;
    switch (cmd) {
    case Command::validate: return Task::none;
    case Command::theory: return Task::theory;
    case Command::taustar: return Task::taustar;
    case Command::spectrum: return Task::spectrum;
    case Command::simulate:
    case Command::sweep: break;
    }
    if (r == "theory-grid") return Task::theory;
    if (r == "taustar-table") return Task::taustar;
    if (r == "fig3" || r == "fig4" || r == "fig7a") return Task::spectrum;
    if (r == "fig1" || (r == "custom" && cfg.exp.alpha == 0.5)) return Task::largelr;
    return Task::risk;
}

}  // namespace

Command parse_command(std::string_view name) {
    if (name == "simulate") return Command::simulate;
    if (name == "theory") return Command::theory;
    if (name == "taustar") return Command::taustar;
    if (name == "spectrum") return Command::spectrum;
    if (name == "sweep") return Command::sweep;
    if (name == "validate") return Command::validate;
    throw ConfigError("unknown command '" + std::string(name) + "'");
}

std::string_view command_name(Command cmd) {
    switch (cmd) {
    case Command::simulate: return "simulate";
    case Command::theory: return "theory";
    case Command::taustar: return "taustar";
    case Command::spectrum: return "spectrum";
    case Command::sweep: return "sweep";
    case Command::validate: return "validate";
    }
    return "?";
}

const std::vector<std::string>& recipe_names() {
    static const std::vector<std::string> names{"fig1", "fig3",  "fig4",        "fig5a",         "fig5b", "fig5c",
                                                "fig6", "fig7a", "theory-grid", "taustar-table", "custom"};
    return names;
}

RunConfig recipe_defaults(std::string_view recipe) {
    RunConfig c;
    c.recipe = std::string(recipe);
    auto& e = c.exp;
    auto set = [&](Eigen::Index d, double psi1, double psi2) {
        e.d = d;
        e.n = static_cast<Eigen::Index>(std::llround(psi1 * static_cast<double>(d)));
        e.N = static_cast<Eigen::Index>(std::llround(psi2 * static_cast<double>(d)));
    };
    e.seed = 0;
    if (recipe == "fig1") {
        c.student = c.teacher = "erf";
        set(1024, 2, 2);
        e.alpha = 0.5;
        e.eta_bar = 1.0;
        c.sigma_eps = 0.1;
        e.replicas = 5;
        c.axis = "psi1";
        c.values = {2, 4, 8, 16};
    } else if (recipe == "fig3") {
        c.student = "tanh";
        c.teacher = "relu";
        set(1024, 4, 2);
        e.eta_bar = 2.0;
        c.sigma_eps = 0.2;
        e.replicas = 20;
    } else if (recipe == "fig4") {
        c.student = "softplus";
        c.teacher = "tanh";
        set(1024, 1.5, 1.25);
        e.eta_bar = 2.0;
        e.replicas = 20;
    } else if (recipe == "fig5a") {
        c.student = "tanh";
        c.teacher = "softplus";
        set(512, 4, 2);
        e.lambda = 1e-4;
        c.sigma_eps = 0.25;
        e.replicas = 50;
        c.axis = "psi1";
        c.values = {1, 2, 3, 4, 6, 8};
    } else if (recipe == "fig5b") {
        c.student = "tanh";
        c.teacher = "relu";
        set(512, 5, 2);
        e.lambda = 1e-2;
        c.sigma_eps = 0.1;
        e.replicas = 50;
        c.axis = "psi2";
        c.values = {0.5, 1, 2, 3, 4};
    } else if (recipe == "fig5c") {
        c.student = "relu";
        c.teacher = "tanh";
        set(512, 4, 2);
        e.eta_bar = 0.2;
        e.lambda = 1e-3;
        e.replicas = 50;
        c.axis = "steps";
        c.values = {1, 2, 4, 8, 16};
    } else if (recipe == "fig6") {
        c.student = c.teacher = "erf";
        set(1024, 4, 2);
        e.lambda = 1e-3;
        c.sigma_eps = 0.1;
        e.replicas = 5;
        c.axis = "alpha";
        c.values = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    } else if (recipe == "fig7a") {
        c.student = c.teacher = "tanh";
        set(2048, 4, 2);
        e.replicas = 5;
        c.axis = "eta_bar";
        c.values = {0.25, 0.5, 1, 1.5, 2, 3, 4};
    } else if (recipe == "theory-grid") {
        c.student = "tanh";
        c.teacher = "softplus";
        set(512, 4, 2);
        c.values = {0.1, 0.316, 1, 3.16, 10};
    } else if (recipe == "taustar-table") {
        c.student = c.teacher = "erf";
        set(512, 4, 2);
    } else if (recipe == "custom") {
        set(512, 4, 2);
    } else {
        throw ConfigError("unknown recipe '" + std::string(recipe) + "'");
    }
    return c;
}

const std::vector<std::string>& risk_columns() {
    static const std::vector<std::string> c{"psi1", "psi2",      "eta",         "alpha",        "lambda",   "step",
                                            "risk_mean", "risk_stderr", "baseline_lin", "baseline_ntk", "kernel_lb"};
    return c;
}

const std::vector<std::string>& theory_columns() {
    static const std::vector<std::string> c = [] {
        std::vector<std::string> v{"eta", "lambda", "psi1", "psi2", "delta", "delta_c1", "delta_c2",
                                   "m1",  "m2",     "m1p",  "m2p"};
        for (int i = 1; i <= 12; ++i) v.push_back("tau" + std::to_string(i));
        return v;
    }();
    return c;
}

const std::vector<std::string>& spike_columns() {
    static const std::vector<std::string> c{"seed", "s1_emp", "s1_pred", "overlap_emp", "overlap_pred"};
    return c;
}

const std::vector<std::string>& histogram_columns() {
    static const std::vector<std::string> c{"bin_left", "bin_right", "count", "mp_density"};
    return c;
}

const std::vector<std::string>& taustar_columns() {
    static const std::vector<std::string> c{"sigma", "sigma_star", "tau_star", "kappa_star", "achieved"};
    return c;
}

const std::vector<std::string>& largelr_columns() {
    static const std::vector<std::string> c = [] {
        auto v = risk_columns();
        v.push_back("tau_star");
        v.push_back("oracle_risk");
        return v;
    }();
    return c;
}

const std::vector<std::string>& ck_spike_columns() {
    static const std::vector<std::string> c{"seed", "eig1_ck", "eig1_ge", "overlap_ck", "overlap_ge"};
    return c;
}

Models build_models(const RunConfig& cfg) {
    Models m;
    m.student = make_activation(cfg.student, cfg.quadrature_order);
    auto teacher = make_activation(cfg.teacher, cfg.quadrature_order);
    if (cfg.center) {
        for (auto* a : {&m.student, &teacher}) {
            if (a->mu0 != 0.0) {
                *a = center(*a);
                m.notes.push_back("centered " + a->name + ": shift " + format_double(a->shift));
            }
        }
    }
    for (const auto* a : {&m.student, &teacher}) {
        if (!a->smooth()) {
            m.outside_assumptions = true;
            m.notes.push_back(a->name + " is not three times differentiable; smoothness assumptions do not hold");
        }
    }
    if (!m.student.bounded()) {
        m.outside_assumptions = true;
        m.notes.push_back("student " + m.student.name + " is unbounded");
    }
    m.teacher = make_teacher(teacher, default_beta(cfg.exp.d), cfg.sigma_eps, cfg.quadrature_order);
    return m;
}

TheoryParams theory_params(const Models& m) {
    TheoryParams p;
    p.mu1 = m.student.mu1;
    p.mu2 = m.student.mu2;
    p.mu1_star = m.teacher.mu1_star;
    p.mu2_star = m.teacher.mu2_star;
    p.mu_bar = m.teacher.label_rms();
    return p;
}

ReplicaMeasurement measure_replica(const RunConfig& point, const Models& models, std::uint64_t seed,
                                   const ReplicaPlan& plan) {
    ExperimentConfig e = point.exp;
    e.seed = seed;
    const auto& act = models.student;
    const auto& teacher = models.teacher;

    ReplicaMeasurement out;
    out.seed = seed;
    auto net = init_network(e, 0);
    const auto train = sample_dataset(e, teacher, 0, StreamRole::train);
    Dataset fresh;
    if (plan.risk || plan.ge) fresh = sample_dataset(e, teacher, 0, StreamRole::fresh);
    const StreamId test{seed, 0, StreamRole::test, 0};
    const double eta = e.eta();

    for (std::size_t idx = 0; idx < plan.steps.size(); ++idx) {
        const int step = plan.steps[idx];
        if (step < net.t) throw ConfigError("measurement steps must be ascending");
        net = multi_step(std::move(net), train, act, eta, step - net.t);

        StepMeasurement m;
        m.step = step;
        if (plan.risk) {
            const auto Phi = ck_features(net.W, fresh.X, act);
            const auto sol = ridge_fit(Phi, fresh.y, e.lambda);
            m.risk = risk_mc(ck_predictor(net.W, sol.a_hat, act), teacher, e.n_test, test).mean;
        }
        if (plan.ge) {
            const auto lane = static_cast<std::uint32_t>(2 * idx);
            const auto Phi = ge_features(net.W, fresh.X, act.mu1, act.mu2, StreamId{seed, 0, StreamRole::ge_noise, lane});
            const auto sol = ridge_fit(Phi, fresh.y, e.lambda);
            const StreamId z{seed, 0, StreamRole::ge_noise, lane + 1};
            m.risk_ge = risk_mc(ge_predictor(net.W, sol.a_hat, act.mu1, act.mu2, z), teacher, e.n_test, test).mean;
            m.risk_ge_closed = ge_risk_closed(net.W, sol.a_hat, act.mu1, act.mu2, teacher);
        }
        if (plan.spectrum) {
            const auto s = spectral_summary(net.W, SpectrumKind::svd);
            m.s1 = s.values.size() > 0 ? s.values(0) : 0.0;
            m.s2 = s.values.size() > 1 ? s.values(1) : 0.0;
            const double proj = s.leading_vector.dot(teacher.beta_star) / teacher.beta_star.norm();
            m.overlap = proj * proj;
            if (plan.keep_singular_values && idx + 1 == plan.steps.size())
                out.singular_values.assign(s.values.data(), s.values.data() + s.values.size());
        }
        out.steps.push_back(m);
    }
    return out;
}

RunResult run(const RunConfig& cfg, Command cmd, const RunOptions& opt) {
    cfg.validate();
    Context ctx{cfg, opt, {}, {}};
    const Task task = task_for(cfg, cmd);
    if (task == Task::none) return ctx.result;

    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(opt.out_dir);
    switch (task) {
    case Task::risk: run_risk(ctx); break;
    case Task::largelr: run_largelr(ctx); break;
    case Task::spectrum: run_spectrum(ctx); break;
    case Task::theory: run_theory(ctx); break;
    case Task::taustar: run_taustar(ctx); break;
    case Task::none: break;
    }
    const auto t1 = std::chrono::steady_clock::now();

    RunManifest man;
    man.command = std::string(command_name(cmd));
    man.config = cfg;
    man.version = version_string();
    man.workers = opt.workers;
    if (task == Task::risk || task == Task::largelr || task == Task::spectrum)
        for (int k = 0; k < cfg.exp.replicas; ++k) man.replica_seeds.push_back(replica_seed(cfg, k));
    man.wall_clock_seconds = std::chrono::duration<double>(t1 - t0).count();
    for (const auto& p : ctx.result.outputs) man.outputs.emplace_back(p.filename().string(), sha256_file(p));
    man.notes = ctx.result.notes;
    ctx.result.manifest = opt.out_dir / "manifest.json";
    write_manifest(man, ctx.result.manifest);
    return ctx.result;
}

}  // namespace onestep

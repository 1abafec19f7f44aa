#include "hwq/runner.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hwq/bounds.hpp"
#include "hwq/errors.hpp"
#include "hwq/gauss.hpp"
#include "hwq/qsim.hpp"
#include "hwq/renewal.hpp"
#include "hwq/stats.hpp"

namespace hwq {

const char* kCodeVersion = "hwq 0.1.0";

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kIdDominance = 0x51;

const std::vector<std::string> kExperiments = {
    "simulate",     "bound-upper", "bound-lower", "lindley",  "gaussian",
    "fit-exponent", "check-moments", "dominance", "sandwich"};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

[[noreturn]] void bad(const std::string& field, const std::string& msg) {
    throw ValidationError(field + ": " + msg);
}

double need_number(const json& j, const std::string& path, const std::string& key) {
    if (!j.contains(key) || !j[key].is_number()) bad(path + "." + key, "number required");
    return j[key].get<double>();
}

DistSpec parse_dist(const json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("family") || !j["family"].is_string())
        bad(path, "object with a \"family\" string required");
    std::string fam = j["family"].get<std::string>();
    json p = j.contains("params") ? j["params"] : json::object();
    std::string pp = path + ".params";
    if (fam == "exponential") return DistSpec::exponential(need_number(p, pp, "rate"));
    if (fam == "deterministic") return DistSpec::deterministic(need_number(p, pp, "value"));
    if (fam == "erlang")
        return DistSpec::erlang(static_cast<int>(need_number(p, pp, "k")),
                                need_number(p, pp, "rate"));
    if (fam == "hyperexponential")
        return DistSpec::hyperexponential(need_number(p, pp, "p"), need_number(p, pp, "rate1"),
                                          need_number(p, pp, "rate2"));
    if (fam == "lognormal")
        return DistSpec::lognormal(need_number(p, pp, "mu"), need_number(p, pp, "sigma"));
    if (fam == "weibull")
        return DistSpec::weibull(need_number(p, pp, "shape"), need_number(p, pp, "scale"));
    bad(path + ".family", "unknown family \"" + fam + "\"");
}

json dist_json(const DistSpec& d) {
    json p;
    switch (d.family()) {
        case Family::exponential: p["rate"] = d.param(0); break;
        case Family::deterministic: p["value"] = d.param(0); break;
        case Family::erlang:
            p["k"] = static_cast<int>(d.param(0));
            p["rate"] = d.param(1);
            break;
        case Family::hyperexponential:
            p["p"] = d.param(0);
            p["rate1"] = d.param(1);
            p["rate2"] = d.param(2);
            break;
        case Family::lognormal:
            p["mu"] = d.param(0);
            p["sigma"] = d.param(1);
            break;
        case Family::weibull:
            p["shape"] = d.param(0);
            p["scale"] = d.param(1);
            break;
    }
    return json{{"family", family_name(d.family())}, {"params", p}};
}

// A CSV file that unregisters itself from the partial-output list only
// when the whole run succeeds (the caller owns the list).
class CsvFile {
public:
    CsvFile(const fs::path& path, const std::vector<std::string>& header,
            std::vector<std::string>& written)
        : path_(path.string()), out_(path) {
        if (!out_) throw ValidationError("cannot open output file " + path_.string());
        written.push_back(path_.string());
        for (std::size_t i = 0; i < header.size(); ++i)
            out_ << (i ? "," : "") << header[i];
        out_ << "\n";
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
    }
    void close() { out_.close(); }

private:
    fs::path path_;
    std::ofstream out_;
};

const DistSpec& need_dist(const std::optional<DistSpec>& d, const char* field) {
    if (!d) bad(field, "required for this experiment");
    return *d;
}

const HWScaling& need_scaling(const std::optional<HWScaling>& s) {
    if (!s) bad("scaling", "required for this experiment");
    return *s;
}

// H-W assumption: equal arrival and service rates before the lambda_n
// time scaling is applied to the arrival stream.
void require_hw(const DistSpec& a, const DistSpec& s) {
    double mu_a = 1.0 / a.mean(), mu_s = 1.0 / s.mean();
    if (std::abs(mu_a - mu_s) > 1e-9 * mu_s)
        bad("arrival/service", "H-W regime requires mu_A = mu_S (got " + fmt(mu_a) + " vs " +
                                   fmt(mu_s) + ")");
}

std::vector<double> arithmetic_grid(double spacing, double horizon) {
    if (spacing <= 0.0) bad("grid.spacing", "must be positive");
    if (horizon <= spacing) bad("grid.horizon", "must exceed the spacing");
    std::size_t m = static_cast<std::size_t>(std::ceil(horizon / spacing - 1e-12));
    std::vector<double> g(m + 1);
    for (std::size_t i = 0; i <= m; ++i) g[i] = static_cast<double>(i) * spacing;
    return g;
}

QueueConfig::Init parse_init(const std::string& s) {
    if (s == "empty") return QueueConfig::Init::empty;
    if (s == "all_busy_residual") return QueueConfig::Init::all_busy_residual;
    if (s == "poisson_stationary") return QueueConfig::Init::poisson_stationary;
    bad("init", "unknown initialization \"" + s + "\"");
}

struct EmpiricalTail {
    std::vector<double> p_hat, ci_half;
    std::uint64_t samples = 0;
};

// Steady-state exceedance frequencies with batch-means confidence
// intervals (samples along one path are correlated).
EmpiricalTail empirical_tail(const std::vector<double>& samples,
                             const std::vector<std::int64_t>& levels) {
    EmpiricalTail out;
    out.samples = samples.size();
    if (samples.size() < 64) throw ValidationError("too few steady-state samples");
    std::size_t nbatch = 32;
    std::size_t per = samples.size() / nbatch;
    for (std::int64_t lvl : levels) {
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t b = 0; b < nbatch; ++b) {
            std::size_t hits = 0;
            for (std::size_t i = b * per; i < (b + 1) * per; ++i)
                if (samples[i] >= static_cast<double>(lvl)) ++hits;
            double mean = static_cast<double>(hits) / static_cast<double>(per);
            sum += mean;
            sum2 += mean * mean;
        }
        double p = sum / static_cast<double>(nbatch);
        double var = std::max(0.0, sum2 / static_cast<double>(nbatch) - p * p);
        out.p_hat.push_back(p);
        out.ci_half.push_back(2.576 * std::sqrt(var / static_cast<double>(nbatch)));
    }
    return out;
}

} // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw ValidationError(std::string("config: invalid JSON: ") + e.what());
    }
    ExperimentConfig c;
    if (j.contains("schema_version")) c.schema_version = j["schema_version"].get<int>();
    if (c.schema_version != 1) bad("schema_version", "unsupported version");
    if (!j.contains("experiment") || !j["experiment"].is_string())
        bad("experiment", "string required");
    c.experiment = j["experiment"].get<std::string>();
    bool known = false;
    for (const auto& e : kExperiments) known = known || e == c.experiment;
    if (!known) bad("experiment", "unknown experiment \"" + c.experiment + "\"");

    if (j.contains("arrival")) c.arrival = parse_dist(j["arrival"], "arrival");
    if (j.contains("service")) c.service = parse_dist(j["service"], "service");
    if (j.contains("scaling")) {
        const json& s = j["scaling"];
        c.scaling = HWScaling::make(static_cast<int>(need_number(s, "scaling", "n")),
                                    need_number(s, "scaling", "B"));
    }
    if (j.contains("thresholds")) {
        for (const auto& v : j["thresholds"]) {
            if (!v.is_number()) bad("thresholds", "numbers required");
            c.thresholds.push_back(v.get<double>());
        }
    }
    if (j.contains("horizon")) c.horizon = j["horizon"].get<double>();
    if (j.contains("kappa")) c.kappa = j["kappa"].get<double>();
    if (j.contains("reps")) c.reps = j["reps"].get<std::uint64_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("workers")) c.workers = j["workers"].get<int>();
    if (j.contains("init")) c.init = j["init"].get<std::string>();
    if (j.contains("samples")) {
        if (j["samples"].contains("t0")) c.sample_t0 = j["samples"]["t0"].get<double>();
        if (j["samples"].contains("stride"))
            c.sample_stride = j["samples"]["stride"].get<double>();
    }
    if (j.contains("grid")) {
        if (j["grid"].contains("spacing")) c.grid_spacing = j["grid"]["spacing"].get<double>();
        if (j["grid"].contains("horizon")) c.grid_horizon = j["grid"]["horizon"].get<double>();
    }
    if (j.contains("reps_for_v")) c.reps_for_v = j["reps_for_v"].get<std::uint64_t>();
    if (j.contains("fit_window")) {
        if (j["fit_window"].contains("x_lo")) c.fit_x_lo = j["fit_window"]["x_lo"].get<double>();
        if (j["fit_window"].contains("x_hi")) c.fit_x_hi = j["fit_window"]["x_hi"].get<double>();
    }
    if (j.contains("lindley_steps")) c.lindley_steps = j["lindley_steps"].get<std::uint64_t>();
    if (j.contains("moments")) {
        const json& m = j["moments"];
        if (m.contains("r")) c.moment_r = m["r"].get<int>();
        if (m.contains("grid"))
            for (const auto& v : m["grid"]) c.moment_grid.push_back(v.get<double>());
        if (m.contains("nt"))
            for (const auto& v : m["nt"]) {
                if (!v.is_array() || v.size() != 2) bad("moments.nt", "pairs [n, t] required");
                c.moment_nt.push_back({v[0].get<int>(), v[1].get<double>()});
            }
    }
    if (j.contains("record_events")) c.record_events = j["record_events"].get<bool>();
    if (j.contains("self_test_swap")) c.self_test_swap = j["self_test_swap"].get<bool>();
    if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    json j;
    j["schema_version"] = c.schema_version;
    j["experiment"] = c.experiment;
    if (c.arrival) j["arrival"] = dist_json(*c.arrival);
    if (c.service) j["service"] = dist_json(*c.service);
    if (c.scaling) j["scaling"] = json{{"n", c.scaling->n}, {"B", c.scaling->B}};
    if (!c.thresholds.empty()) j["thresholds"] = c.thresholds;
    j["horizon"] = c.horizon;
    j["kappa"] = c.kappa;
    j["reps"] = c.reps;
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    j["init"] = c.init;
    j["samples"] = json{{"t0", c.sample_t0}, {"stride", c.sample_stride}};
    j["grid"] = json{{"spacing", c.grid_spacing}, {"horizon", c.grid_horizon}};
    j["reps_for_v"] = c.reps_for_v;
    j["fit_window"] = json{{"x_lo", c.fit_x_lo}, {"x_hi", c.fit_x_hi}};
    j["lindley_steps"] = c.lindley_steps;
    json nt = json::array();
    for (const auto& [n, t] : c.moment_nt) nt.push_back(json::array({n, t}));
    j["moments"] = json{{"r", c.moment_r}, {"grid", c.moment_grid}, {"nt", nt}};
    j["record_events"] = c.record_events;
    j["self_test_swap"] = c.self_test_swap;
    j["out"] = c.out_dir;
    return j.dump(2);
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("digest: cannot read " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (got < static_cast<std::streamsize>(sizeof(buf))) break;
    }
    char out[20];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

namespace {

struct RunContext {
    const ExperimentConfig& cfg;
    fs::path out;
    std::vector<std::string> written;
    json extra; // experiment-specific fields for the run record
    int flagged = 0;
};

std::string seed_cell(const ExperimentConfig& cfg) { return std::to_string(cfg.seed); }

void tail_csv(RunContext& ctx, const std::string& name, const TailEstimate& tail) {
    std::vector<std::string> header = {"x", "p_hat", "ci_low", "ci_high", "reps", "T"};
    bool levels = !tail.level.empty();
    bool leak = !tail.leak.empty();
    bool argmax = !tail.t_argmax.empty();
    if (levels) header.push_back("level");
    if (leak) header.push_back("leak");
    if (argmax) header.push_back("t_argmax");
    header.push_back("seed");
    CsvFile csv(ctx.out / name, header, ctx.written);
    for (std::size_t j = 0; j < tail.x.size(); ++j) {
        std::vector<std::string> row = {fmt(tail.x[j]),      fmt(tail.p_hat[j]),
                                        fmt(tail.ci_low(j)), fmt(tail.ci_high(j)),
                                        std::to_string(tail.reps), fmt(tail.T)};
        if (levels) row.push_back(std::to_string(tail.level[j]));
        if (leak) row.push_back(fmt(tail.leak[j]));
        if (argmax) row.push_back(fmt(tail.t_argmax[j]));
        row.push_back(seed_cell(ctx.cfg));
        csv.row(row);
    }
}

QueueConfig queue_config(const ExperimentConfig& cfg, const DistSpec& arrival,
                         const DistSpec& service) {
    const HWScaling& sc = need_scaling(cfg.scaling);
    if (cfg.horizon <= 0.0) bad("horizon", "must be positive");
    double mu = 1.0 / service.mean();
    QueueConfig qc;
    qc.n = sc.n;
    qc.arrival = arrival;
    qc.arrival_mode = RenewalStream::Mode::equilibrium;
    qc.arrival_rate_scale = sc.lambda_n();
    qc.service = service;
    qc.init = parse_init(cfg.init);
    qc.horizon = cfg.horizon;
    qc.seed = cfg.seed;
    qc.record_events = cfg.record_events;
    qc.sample_t0 = cfg.sample_t0 >= 0.0 ? cfg.sample_t0 : 20.0 * sc.n / mu;
    qc.sample_stride = cfg.sample_stride > 0.0 ? cfg.sample_stride : sc.n / mu;
    if (qc.sample_t0 >= cfg.horizon) bad("samples.t0", "burn-in must precede the horizon");
    return qc;
}

void run_simulate(RunContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    const DistSpec& a = need_dist(cfg.arrival, "arrival");
    const DistSpec& s = need_dist(cfg.service, "service");
    require_hw(a, s);
    const HWScaling& sc = need_scaling(cfg.scaling);
    QueuePath path = simulate(queue_config(cfg, a, s));
    CsvFile csv(ctx.out / "samples.csv", {"t", "q_excess", "q_excess_scaled", "seed"},
                ctx.written);
    for (std::size_t i = 0; i < path.sample_times.size(); ++i) {
        double ex = std::max(0.0, path.sample_q[i] - sc.n);
        csv.row({fmt(path.sample_times[i]), fmt(ex), fmt(ex / sc.sqrt_n()), seed_cell(cfg)});
    }
    if (cfg.record_events) {
        CsvFile ev(ctx.out / "events.csv", {"time", "kind", "job", "server", "seed"},
                   ctx.written);
        for (const auto& e : path.events) {
            const char* kind = e.kind == EventKind::arrival ? "arrival"
                               : e.kind == EventKind::service_start ? "service_start"
                                                                    : "departure";
            ev.row({fmt(e.time), kind, std::to_string(e.job), std::to_string(e.server),
                    seed_cell(cfg)});
        }
    }
    ctx.extra["events_processed"] = path.event_count;
}

void run_bound_upper(RunContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    const DistSpec& a = need_dist(cfg.arrival, "arrival");
    const DistSpec& s = need_dist(cfg.service, "service");
    require_hw(a, s);
    TailEstimate tail = steady_upper_tail(a, s, need_scaling(cfg.scaling), cfg.thresholds,
                                          cfg.reps, cfg.seed, cfg.kappa, cfg.workers);
    tail_csv(ctx, "tail_upper.csv", tail);
}

void run_bound_lower(RunContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    const DistSpec& s = need_dist(cfg.service, "service");
    if (cfg.arrival && cfg.arrival->family() != Family::exponential)
        bad("arrival.family", "the lower bound requires Poisson arrivals");
    const HWScaling& sc = need_scaling(cfg.scaling);
    if (cfg.thresholds.empty()) bad("thresholds", "required");
    double mu = 1.0 / s.mean();
    double x_lo = std::max(cfg.thresholds.front(), 1.0 / sc.sqrt_n());
    double x_hi = std::max(cfg.thresholds.back(), x_lo);
    std::vector<double> t_grid = default_t_grid(sc.B, mu, x_lo, x_hi);
    TailEstimate tail = lower_tail(s, sc, t_grid, cfg.thresholds, cfg.reps, cfg.seed,
                                   cfg.workers);
    tail_csv(ctx, "tail_lower.csv", tail);
}

void run_lindley(RunContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    const DistSpec& a = need_dist(cfg.arrival, "arrival");
    const DistSpec& s = need_dist(cfg.service, "service");
    require_hw(a, s);
    const HWScaling& sc = need_scaling(cfg.scaling);
    if (cfg.reps == 0) bad("reps", "must be positive");
    CsvFile csv(ctx.out / "lindley.csv", {"rep", "sup", "sup_scaled", "a_n", "seed"},
                ctx.written);
    for (std::uint64_t rep = 0; rep < cfg.reps; ++rep) {
        LindleyResult r = lindley_sup(a, s, sc, cfg.lindley_steps, cfg.seed, rep);
        csv.row({std::to_string(rep), fmt(r.sup), fmt(r.sup / sc.sqrt_n()), fmt(r.a_n),
                 seed_cell(cfg)});
    }
}

GaussGrid gauss_grid_from_config(const ExperimentConfig& cfg) {
    const DistSpec& a = need_dist(cfg.arrival, "arrival");
    const DistSpec& s = need_dist(cfg.service, "service");
    require_hw(a, s);
    const HWScaling& sc = need_scaling(cfg.scaling);
    if (cfg.thresholds.empty()) bad("thresholds", "required");
    double mu = 1.0 / s.mean();
    double horizon = cfg.grid_horizon > 0.0
                         ? cfg.grid_horizon
                         : truncation_horizon(sc, cfg.thresholds.back(), mu, cfg.kappa);
    std::vector<double> grid = arithmetic_grid(cfg.grid_spacing, horizon);
    std::uint64_t reps_v = cfg.reps_for_v > 0 ? cfg.reps_for_v : 100000;
    return build_grid(a.scv(), s, sc.B, mu, grid, reps_v, cfg.seed, cfg.workers);
}

void gauss_outputs(RunContext& ctx, const GaussGrid& grid) {
    const ExperimentConfig& cfg = ctx.cfg;
    CsvFile gcsv(ctx.out / "gauss_grid.csv", {"i", "t", "drift", "sigma_diag", "seed"},
                 ctx.written);
    for (std::size_t i = 0; i < grid.m(); ++i)
        gcsv.row({std::to_string(i), fmt(grid.t[i]), fmt(grid.drift[i]),
                  fmt(grid.sigma_diag[i]), seed_cell(cfg)});
    ctx.extra["psd_repair"] = json{{"repaired", grid.repair.repaired},
                                   {"clipped", grid.repair.clipped},
                                   {"max_shift", grid.repair.max_shift},
                                   {"trace", grid.repair.trace}};
}

void run_gaussian(RunContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    GaussGrid grid = gauss_grid_from_config(cfg);
    gauss_outputs(ctx, grid);
    TailEstimate tail = sample_sup(grid, cfg.reps, cfg.thresholds, cfg.seed, cfg.workers);
    tail_csv(ctx, "gauss_tail.csv", tail);
    PointwiseTail pw = pointwise_sup_tail(grid, cfg.thresholds);
    CsvFile pcsv(ctx.out / "gauss_pointwise.csv", {"x", "p", "t_argmax", "warning", "seed"},
                 ctx.written);
    for (std::size_t j = 0; j < pw.x.size(); ++j)
        pcsv.row({fmt(pw.x[j]), fmt(pw.p[j]), fmt(pw.t_argmax[j]),
                  "\"" + pw.warning[j] + "\"", seed_cell(cfg)});
}

void run_fit_exponent(RunContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    GaussGrid grid = gauss_grid_from_config(cfg);
    gauss_outputs(ctx, grid);
    TailEstimate tail = sample_sup(grid, cfg.reps, cfg.thresholds, cfg.seed, cfg.workers);
    double target = -2.0 * grid.B / (grid.c2A + grid.c2S);
    ExponentFit fit = fit_exponent(tail, cfg.fit_x_lo, cfg.fit_x_hi, target);
    CsvFile csv(ctx.out / "fit.csv",
                {"x", "p_hat", "ci", "slope", "slope_se", "target", "seed"}, ctx.written);
    for (std::size_t j = 0; j < tail.x.size(); ++j)
        csv.row({fmt(tail.x[j]), fmt(tail.p_hat[j]), fmt(tail.ci_half[j]), fmt(fit.slope),
                 fmt(fit.slope_se), fmt(fit.target), seed_cell(cfg)});
    ctx.extra["fit"] = json{{"slope", fit.slope},
                            {"slope_se", fit.slope_se},
                            {"target", fit.target},
                            {"zscore", fit.zscore},
                            {"used_points", fit.used_points}};
}

void run_check_moments(RunContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    const DistSpec& s = need_dist(cfg.service, "service");
    CsvFile mcsv(ctx.out / "moments.csv",
                 {"role", "family", "mean", "variance", "scv", "residual_mean", "seed"},
                 ctx.written);
    if (cfg.arrival)
        mcsv.row({"arrival", family_name(cfg.arrival->family()), fmt(cfg.arrival->mean()),
                  fmt(cfg.arrival->variance()), fmt(cfg.arrival->scv()),
                  fmt(cfg.arrival->residual_mean()), seed_cell(cfg)});
    mcsv.row({"service", family_name(s.family()), fmt(s.mean()), fmt(s.variance()),
              fmt(s.scv()), fmt(s.residual_mean()), seed_cell(cfg)});

    std::vector<double> grid = cfg.moment_grid;
    if (grid.empty()) grid = {0.0, 2.5, 4.0, 16.0, 64.0};
    std::uint64_t reps = cfg.reps > 0 ? cfg.reps : 20000;
    VarianceTable vt = variance_function(s, grid, reps, cfg.seed, cfg.workers);
    CsvFile vcsv(ctx.out / "variance.csv", {"t", "V_hat", "stderr", "reps", "seed"},
                 ctx.written);
    for (std::size_t i = 0; i < vt.t.size(); ++i)
        vcsv.row({fmt(vt.t[i]), fmt(vt.v_hat[i]), fmt(vt.stderror[i]),
                  std::to_string(vt.reps), seed_cell(cfg)});

    if (!cfg.moment_nt.empty()) {
        CsvFile ccsv(ctx.out / "centered_moments.csv",
                     {"n", "t", "r", "estimate", "stderr", "reps", "seed"}, ctx.written);
        for (const auto& [n, t] : cfg.moment_nt) {
            MomentEstimate est = centered_moment_mc(s, n, t, cfg.moment_r, reps, cfg.seed,
                                                    cfg.workers);
            ccsv.row({std::to_string(n), fmt(t), std::to_string(cfg.moment_r),
                      fmt(est.estimate), fmt(est.stderror), std::to_string(est.reps),
                      seed_cell(cfg)});
        }
    }
}

void run_dominance(RunContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    const DistSpec& a = need_dist(cfg.arrival, "arrival");
    const DistSpec& s = need_dist(cfg.service, "service");
    const HWScaling& sc = need_scaling(cfg.scaling);
    if (cfg.horizon <= 0.0) bad("horizon", "must be positive");
    if (cfg.reps == 0) bad("reps", "must be positive");
    CsvFile csv(ctx.out / "dominance.csv", {"rep", "epochs", "violations", "seed"},
                ctx.written);
    std::uint64_t total = 0;
    for (std::uint64_t rep = 0; rep < cfg.reps; ++rep) {
        RngStream rng = RngStream::derive(cfg.seed, kIdDominance, rep);
        QueueConfig base;
        base.n = sc.n;
        base.horizon = cfg.horizon;
        {
            RenewalStream astream(a, RenewalStream::Mode::equilibrium,
                                  RngStream::derive(cfg.seed, kIdDominance << 8, rep),
                                  sc.lambda_n());
            while (astream.peek() <= cfg.horizon)
                base.arrival_times.push_back(astream.next_event());
        }
        for (std::size_t k = 0; k < base.arrival_times.size(); ++k)
            base.service_times.push_back(s.sample(rng));

        // one extra arrival, uniform over the horizon, any processing time
        QueueConfig aug = base;
        double extra_t = rng.uniform() * cfg.horizon;
        double extra_s = s.sample(rng);
        std::size_t pos = static_cast<std::size_t>(
            std::lower_bound(aug.arrival_times.begin(), aug.arrival_times.end(), extra_t) -
            aug.arrival_times.begin());
        aug.arrival_times.insert(aug.arrival_times.begin() + static_cast<std::ptrdiff_t>(pos),
                                 extra_t);
        aug.service_times.insert(aug.service_times.begin() + static_cast<std::ptrdiff_t>(pos),
                                 extra_s);
        CouplingPlan plan;
        for (std::size_t k = 0; k < base.arrival_times.size(); ++k)
            plan.base_to_augmented.push_back(k < pos ? k : k + 1);
        DominanceReport rep_out = dominance_check(base, aug, plan);
        total += rep_out.violations.size();
        csv.row({std::to_string(rep), std::to_string(rep_out.epochs_checked),
                 std::to_string(rep_out.violations.size()), seed_cell(cfg)});
    }
    ctx.flagged = static_cast<int>(total);
    ctx.extra["total_violations"] = total;
}

void run_sandwich(RunContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    const DistSpec& s = need_dist(cfg.service, "service");
    const HWScaling& sc = need_scaling(cfg.scaling);
    if (cfg.thresholds.empty()) bad("thresholds", "required");
    if (cfg.arrival && cfg.arrival->family() != Family::exponential)
        bad("arrival.family", "the sandwich requires Poisson arrivals");
    double mu = 1.0 / s.mean();
    DistSpec a = cfg.arrival ? *cfg.arrival : DistSpec::exponential(mu);
    require_hw(a, s);

    TailEstimate upper = steady_upper_tail(a, s, sc, cfg.thresholds, cfg.reps, cfg.seed,
                                           cfg.kappa, cfg.workers);
    double x_lo = std::max(cfg.thresholds.front(), 1.0 / sc.sqrt_n());
    std::vector<double> t_grid = default_t_grid(sc.B, mu, x_lo, cfg.thresholds.back());
    TailEstimate lower = lower_tail(s, sc, t_grid, cfg.thresholds, cfg.reps, cfg.seed,
                                    cfg.workers);

    QueuePath path = simulate(queue_config(cfg, a, s));
    std::vector<double> samples;
    samples.reserve(path.sample_q.size());
    for (double q : path.sample_q) samples.push_back(std::max(0.0, q - sc.n));
    std::vector<std::int64_t> levels;
    for (double x : cfg.thresholds) levels.push_back(threshold_level(x, sc));
    EmpiricalTail emp = empirical_tail(samples, levels);

    const TailEstimate& lo_est = cfg.self_test_swap ? upper : lower;
    const TailEstimate& hi_est = cfg.self_test_swap ? lower : upper;
    CsvFile csv(ctx.out / "sandwich.csv",
                {"x", "lower", "lower_ci_low", "lower_ci_high", "empirical", "emp_ci_low",
                 "emp_ci_high", "upper", "upper_ci_low", "upper_ci_high", "flag", "seed"},
                ctx.written);
    int flags = 0;
    for (std::size_t j = 0; j < cfg.thresholds.size(); ++j) {
        double e_lo = std::max(0.0, emp.p_hat[j] - emp.ci_half[j]);
        double e_hi = std::min(1.0, emp.p_hat[j] + emp.ci_half[j]);
        bool flag = lo_est.ci_low(j) > e_hi || e_lo > hi_est.ci_high(j);
        if (flag) ++flags;
        csv.row({fmt(cfg.thresholds[j]), fmt(lo_est.p_hat[j]), fmt(lo_est.ci_low(j)),
                 fmt(lo_est.ci_high(j)), fmt(emp.p_hat[j]), fmt(e_lo), fmt(e_hi),
                 fmt(hi_est.p_hat[j]), fmt(hi_est.ci_low(j)), fmt(hi_est.ci_high(j)),
                 flag ? "1" : "0", seed_cell(cfg)});
    }
    ctx.flagged = flags;
    ctx.extra["flags"] = flags;
    ctx.extra["empirical_samples"] = emp.samples;
}

} // namespace

RunRecord run(const ExperimentConfig& cfg) {
    fs::path out(cfg.out_dir.empty() ? "." : cfg.out_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    RunContext ctx{cfg, out, {}, json::object(), 0};
    auto start = std::chrono::steady_clock::now();
    try {
        if (cfg.experiment == "simulate") run_simulate(ctx);
        else if (cfg.experiment == "bound-upper") run_bound_upper(ctx);
        else if (cfg.experiment == "bound-lower") run_bound_lower(ctx);
        else if (cfg.experiment == "lindley") run_lindley(ctx);
        else if (cfg.experiment == "gaussian") run_gaussian(ctx);
        else if (cfg.experiment == "fit-exponent") run_fit_exponent(ctx);
        else if (cfg.experiment == "check-moments") run_check_moments(ctx);
        else if (cfg.experiment == "dominance") run_dominance(ctx);
        else if (cfg.experiment == "sandwich") run_sandwich(ctx);
        else bad("experiment", "unknown experiment \"" + cfg.experiment + "\"");
    } catch (...) {
        for (const auto& f : ctx.written) fs::remove(f, ec);
        throw;
    }
    auto stop = std::chrono::steady_clock::now();

    RunRecord rec;
    rec.experiment = cfg.experiment;
    rec.seed = cfg.seed;
    rec.code_version = kCodeVersion;
    rec.wall_seconds = std::chrono::duration<double>(stop - start).count();
    rec.flagged = ctx.flagged;
    for (const auto& f : ctx.written)
        rec.digests[fs::path(f).filename().string()] = file_digest(f);

    json record;
    record["schema_version"] = 1;
    record["experiment"] = cfg.experiment;
    record["code_version"] = rec.code_version;
    record["seed"] = cfg.seed;
    record["wall_seconds"] = rec.wall_seconds;
    record["config"] = json::parse(serialize_config(cfg));
    record["outputs"] = rec.digests;
    record["flagged"] = rec.flagged;
    for (auto& [k, v] : ctx.extra.items()) record[k] = v;
    fs::path rp = out / "run.json";
    std::ofstream rj(rp);
    rj << record.dump(2) << "\n";
    rec.record_path = rp.string();
    return rec;
}

} // namespace hwq

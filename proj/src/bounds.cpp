#include "hwq/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hwq/errors.hpp"
#include "hwq/parallel.hpp"
#include "hwq/renewal.hpp"
#include "hwq/stats.hpp"

namespace hwq {

namespace {

constexpr std::uint64_t kIdUpperWalk = 0x31;
constexpr std::uint64_t kIdLowerWalk = 0x32;
constexpr std::uint64_t kIdLindley = 0x33;
constexpr std::uint64_t kIdCoupledArrival = 0x34;
constexpr std::uint64_t kIdCoupledServer = 0x35;

// Pooled-walk event source over n+1 renewal streams (stream 0 is the
// rate-scaled arrival process). Emits (time, +1/-1) in time order.
class HeapWalkSource {
public:
    HeapWalkSource(const DistSpec& a_spec, const DistSpec& s_spec, const HWScaling& scaling,
                   std::uint64_t seed, std::uint64_t id, std::uint64_t rep) {
        streams_.reserve(static_cast<std::size_t>(scaling.n) + 1);
        streams_.emplace_back(a_spec, RenewalStream::Mode::equilibrium,
                              RngStream::derive(seed, id << 20, rep), scaling.lambda_n());
        for (int i = 1; i <= scaling.n; ++i)
            streams_.emplace_back(s_spec, RenewalStream::Mode::equilibrium,
                                  RngStream::derive(seed, (id << 20) | static_cast<std::uint64_t>(i), rep));
        heap_.reserve(streams_.size());
        for (std::size_t i = 0; i < streams_.size(); ++i)
            heap_.push_back({streams_[i].peek(), static_cast<int>(i)});
        std::make_heap(heap_.begin(), heap_.end(), cmp);
    }

    // Next pooled event; step is +1 for an arrival, -1 for a departure.
    void next(double& t, int& step) {
        std::pop_heap(heap_.begin(), heap_.end(), cmp);
        auto [time, idx] = heap_.back();
        t = time;
        step = (idx == 0) ? +1 : -1;
        last_idx_ = idx;
        streams_[static_cast<std::size_t>(idx)].next_event();
        heap_.back() = {streams_[static_cast<std::size_t>(idx)].peek(), idx};
        std::push_heap(heap_.begin(), heap_.end(), cmp);
    }

    int last_stream() const { return last_idx_; }

private:
    struct Entry {
        double t;
        int idx;
    };
    static bool cmp(const Entry& a, const Entry& b) {
        return a.t > b.t || (a.t == b.t && a.idx > b.idx);
    }
    std::vector<RenewalStream> streams_;
    std::vector<Entry> heap_;
    int last_idx_ = -1;
};

// Markov fast path: with exponential inter-arrival and service laws the
// pooled process is Poisson and the event type is an independent coin.
class MarkovWalkSource {
public:
    MarkovWalkSource(double arrival_rate, double service_rate_total, RngStream rng)
        : total_(arrival_rate + service_rate_total),
          p_up_(arrival_rate / (arrival_rate + service_rate_total)), rng_(rng) {}

    void next(double& t, int& step) {
        t_ += rng_.exponential(total_);
        t = t_;
        step = rng_.uniform() < p_up_ ? +1 : -1;
    }

private:
    double total_;
    double p_up_;
    RngStream rng_;
    double t_ = 0.0;
};

bool both_exponential(const DistSpec& a, const DistSpec& s) {
    return a.family() == Family::exponential && s.family() == Family::exponential;
}

struct WalkRates {
    double arrival_rate;  // lambda_n * mu_A
    double service_total; // n * mu_S
    double drift;         // arrival_rate - service_total, must be < 0
    double var_rate;      // arrival_rate*c2A + n*mu_S*c2S
    double theta;         // exponential-martingale decay 2|drift|/var_rate
};

WalkRates walk_rates(const DistSpec& a_spec, const DistSpec& s_spec, const HWScaling& scaling) {
    WalkRates r;
    r.arrival_rate = scaling.lambda_n() / a_spec.mean();
    r.service_total = scaling.n / s_spec.mean();
    r.drift = r.arrival_rate - r.service_total;
    r.var_rate = r.arrival_rate * a_spec.scv() + r.service_total * s_spec.scv();
    if (r.drift >= 0.0)
        throw ValidationError("walk drift must be negative (lambda_n below total service rate)");
    // zero variance (deterministic laws): the leak factor e^{-theta k} is 0
    r.theta = r.var_rate > 0.0 ? -2.0 * r.drift / r.var_rate
                               : std::numeric_limits<double>::infinity();
    return r;
}

// One truncated-walk replication: running supremum, endpoint, and per-level
// leak contribution for levels not yet reached.
template <class Source>
void sup_replication(Source& src, double T, const std::vector<std::int64_t>& levels,
                     std::uint64_t* counts, double* leak, double theta) {
    std::int64_t x = 0, m = 0;
    double t;
    int step;
    while (true) {
        src.next(t, step);
        if (t > T) break;
        x += step;
        if (x > m) m = x;
    }
    std::size_t hit = static_cast<std::size_t>(
        std::upper_bound(levels.begin(), levels.end(), m) - levels.begin());
    for (std::size_t j = 0; j < hit; ++j) ++counts[j];
    for (std::size_t j = hit; j < levels.size(); ++j)
        leak[j] += std::exp(-theta * static_cast<double>(levels[j] - x));
}

// Walk values at the grid times (right-continuous), then per-(t, level)
// exceedance counting.
template <class Source>
void pointwise_replication(Source& src, const std::vector<double>& t_grid,
                           const std::vector<std::int64_t>& levels, std::uint64_t* counts) {
    std::size_t g = 0;
    std::int64_t x = 0;
    double t;
    int step;
    auto flush = [&](double upto) {
        while (g < t_grid.size() && t_grid[g] < upto) {
            std::size_t hit = static_cast<std::size_t>(
                std::upper_bound(levels.begin(), levels.end(), x) - levels.begin());
            for (std::size_t j = 0; j < hit; ++j) ++counts[g * levels.size() + j];
            ++g;
        }
    };
    double T = t_grid.back();
    while (g < t_grid.size()) {
        src.next(t, step);
        flush(t);
        if (t > T) break;
        x += step;
    }
    flush(T + 1.0);
}

std::vector<std::int64_t> make_levels(const std::vector<double>& thresholds,
                                      const HWScaling& scaling) {
    if (thresholds.empty()) throw ValidationError("thresholds must be non-empty");
    std::vector<std::int64_t> levels;
    levels.reserve(thresholds.size());
    for (double x : thresholds) {
        if (x < 0.0) throw ValidationError("thresholds must be non-negative");
        levels.push_back(threshold_level(x, scaling));
    }
    if (!std::is_sorted(levels.begin(), levels.end()))
        throw ValidationError("thresholds must be sorted ascending");
    return levels;
}

} // namespace

std::int64_t threshold_level(double x, const HWScaling& scaling) {
    std::int64_t lvl = std::llround(x * scaling.sqrt_n());
    return lvl < 1 ? 1 : lvl;
}

double truncation_horizon(const HWScaling& scaling, double x_max, double mu, double kappa) {
    if (kappa < 1.0) throw ValidationError("truncation kappa must be >= 1");
    if (x_max <= 0.0) throw ValidationError("truncation x_max must be positive");
    if (mu <= 0.0) throw ValidationError("truncation mu must be positive");
    return kappa * x_max / (scaling.B * mu);
}

WalkPath upper_walk_sup(const DistSpec& a_spec, const DistSpec& s_spec,
                        const HWScaling& scaling, double T, std::uint64_t seed) {
    if (T <= 0.0) throw ValidationError("walk horizon T must be positive");
    walk_rates(a_spec, s_spec, scaling); // validates the drift sign
    HeapWalkSource src(a_spec, s_spec, scaling, seed, kIdUpperWalk, 0);
    WalkPath path;
    std::int64_t x = 0, sup = 0, rec = 0, running_min = 0;
    while (true) {
        double t;
        int step;
        src.next(t, step);
        if (t > T) break;
        x += step;
        if (x > sup) sup = x;
        if (x < running_min) running_min = x;
        rec = std::max<std::int64_t>(0, rec + step);
        path.tau.push_back(t);
        path.x.push_back(x);
        path.sup.push_back(sup);
        path.excess_recursion.push_back(rec);
        path.excess_unfolded.push_back(x - running_min);
        path.is_arrival.push_back(step > 0);
    }
    return path;
}

TailEstimate steady_upper_tail(const DistSpec& a_spec, const DistSpec& s_spec,
                               const HWScaling& scaling, const std::vector<double>& thresholds,
                               std::uint64_t reps, std::uint64_t seed, double kappa,
                               int workers) {
    if (reps == 0) throw ValidationError("reps must be positive");
    WalkRates rates = walk_rates(a_spec, s_spec, scaling);
    std::vector<std::int64_t> levels = make_levels(thresholds, scaling);
    double mu = 1.0 / s_spec.mean();
    double x_max = std::max(thresholds.back(), 1.0 / scaling.sqrt_n());
    double T = truncation_horizon(scaling, x_max, mu, kappa);

    std::size_t J = levels.size();
    std::size_t nb = block_count(reps);
    std::vector<std::uint64_t> bcounts(nb * J, 0);
    std::vector<double> bleak(nb * J, 0.0);
    bool markov = both_exponential(a_spec, s_spec);
    run_blocks(reps, workers, [&](std::uint64_t lo, std::uint64_t hi, std::size_t b) {
        std::uint64_t* counts = &bcounts[b * J];
        double* leak = &bleak[b * J];
        for (std::uint64_t rep = lo; rep < hi; ++rep) {
            if (markov) {
                MarkovWalkSource src(rates.arrival_rate, rates.service_total,
                                     RngStream::derive(seed, kIdUpperWalk << 20, rep));
                sup_replication(src, T, levels, counts, leak, rates.theta);
            } else {
                HeapWalkSource src(a_spec, s_spec, scaling, seed, kIdUpperWalk, rep);
                sup_replication(src, T, levels, counts, leak, rates.theta);
            }
        }
    });

    TailEstimate out;
    out.x = thresholds;
    out.level = levels;
    out.reps = reps;
    out.T = T;
    for (std::size_t j = 0; j < J; ++j) {
        std::uint64_t c = 0;
        double lk = 0.0;
        for (std::size_t b = 0; b < nb; ++b) {
            c += bcounts[b * J + j];
            lk += bleak[b * J + j];
        }
        double p = static_cast<double>(c) / static_cast<double>(reps);
        out.p_hat.push_back(p);
        out.ci_half.push_back(ci99_half(p, reps));
        out.leak.push_back(lk / static_cast<double>(reps));
    }
    return out;
}

std::vector<double> default_t_grid(double B, double mu, double x_lo, double x_hi) {
    if (B <= 0.0 || mu <= 0.0 || x_lo <= 0.0 || x_hi < x_lo)
        throw ValidationError("default_t_grid: need B, mu, 0 < x_lo <= x_hi");
    double lo = x_lo / (5.0 * B * mu);
    double hi = 5.0 * x_hi / (B * mu);
    const int m = 30;
    std::vector<double> grid(m);
    double ratio = std::pow(hi / lo, 1.0 / (m - 1));
    double t = lo;
    for (int i = 0; i < m; ++i) {
        grid[static_cast<std::size_t>(i)] = t;
        t *= ratio;
    }
    grid.back() = hi;
    return grid;
}

TailEstimate lower_tail(const DistSpec& s_spec, const HWScaling& scaling,
                        const std::vector<double>& t_grid, const std::vector<double>& thresholds,
                        std::uint64_t reps, std::uint64_t seed, int workers) {
    if (t_grid.empty()) throw ValidationError("lower_tail: t_grid must be non-empty");
    if (!std::is_sorted(t_grid.begin(), t_grid.end()) || t_grid.front() <= 0.0)
        throw ValidationError("lower_tail: t_grid must be positive and sorted");
    if (reps == 0) throw ValidationError("reps must be positive");
    // Poisson arrivals: A is exponential with the common service rate, so
    // the H-W assumption holds by construction.
    double mu = 1.0 / s_spec.mean();
    DistSpec a_spec = DistSpec::exponential(mu);
    WalkRates rates = walk_rates(a_spec, s_spec, scaling);
    std::vector<std::int64_t> levels = make_levels(thresholds, scaling);

    std::size_t J = levels.size();
    std::size_t G = t_grid.size();
    std::size_t nb = block_count(reps);
    std::vector<std::uint64_t> bcounts(nb * G * J, 0);
    bool markov = s_spec.family() == Family::exponential;
    run_blocks(reps, workers, [&](std::uint64_t lo, std::uint64_t hi, std::size_t b) {
        std::uint64_t* counts = &bcounts[b * G * J];
        for (std::uint64_t rep = lo; rep < hi; ++rep) {
            if (markov) {
                MarkovWalkSource src(rates.arrival_rate, rates.service_total,
                                     RngStream::derive(seed, kIdLowerWalk << 20, rep));
                pointwise_replication(src, t_grid, levels, counts);
            } else {
                HeapWalkSource src(a_spec, s_spec, scaling, seed, kIdLowerWalk, rep);
                pointwise_replication(src, t_grid, levels, counts);
            }
        }
    });

    double pz = poisson_upper_tail(static_cast<std::uint64_t>(scaling.n), scaling.lambda_n());
    TailEstimate out;
    out.x = thresholds;
    out.level = levels;
    out.reps = reps;
    out.T = t_grid.back();
    for (std::size_t j = 0; j < J; ++j) {
        double best_p = 0.0;
        double best_t = t_grid.front();
        for (std::size_t g = 0; g < G; ++g) {
            std::uint64_t c = 0;
            for (std::size_t b = 0; b < nb; ++b) c += bcounts[b * G * J + g * J + j];
            double p = static_cast<double>(c) / static_cast<double>(reps);
            if (p > best_p) {
                best_p = p;
                best_t = t_grid[g];
            }
        }
        out.p_hat.push_back(pz * best_p);
        out.ci_half.push_back(pz * ci99_half(best_p, reps));
        out.t_argmax.push_back(best_t);
    }
    return out;
}

LindleyResult lindley_sup(const DistSpec& a_spec, const DistSpec& s_spec,
                          const HWScaling& scaling, std::uint64_t K, std::uint64_t seed,
                          std::uint64_t rep) {
    walk_rates(a_spec, s_spec, scaling);
    LindleyResult res;
    res.a_n = (scaling.lambda_n() - scaling.n) / scaling.lambda_n();
    res.steps = K;
    if (K == 0) return res; // empty maximum: W_{n,0} = 0
    HeapWalkSource src(a_spec, s_spec, scaling, seed, kIdLindley, rep);
    std::int64_t x = 0, best = 0;
    std::uint64_t arrivals = 0;
    while (arrivals < K) {
        double t;
        int step;
        src.next(t, step);
        x += step;
        if (step > 0) {
            ++arrivals;
            if (x > best) best = x; // W_{n,k} = walk value at the k-th arrival
        }
    }
    res.sup = static_cast<double>(best);
    return res;
}

CoupledReplication coupled_replication(const DistSpec& a_spec, const DistSpec& s_spec,
                                       const HWScaling& scaling, double T, std::uint64_t seed) {
    if (T <= 0.0) throw ValidationError("coupled_replication: T must be positive");
    walk_rates(a_spec, s_spec, scaling);
    int n = scaling.n;

    // Arrival epochs on [0, T] from the rate-scaled equilibrium stream.
    std::vector<double> arrivals;
    {
        RenewalStream a(a_spec, RenewalStream::Mode::equilibrium,
                        RngStream::derive(seed, kIdCoupledArrival, 0), scaling.lambda_n());
        while (a.peek() <= T) arrivals.push_back(a.next_event());
    }

    // Per-server tick sequences on [0, T] (first interval is the residual).
    std::vector<std::vector<double>> intervals(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        RngStream rng = RngStream::derive(seed, kIdCoupledServer, static_cast<std::uint64_t>(i));
        auto& list = intervals[static_cast<std::size_t>(i)];
        double cum = s_spec.residual_sample(rng);
        list.push_back(cum);
        while (cum <= T) {
            double v = s_spec.sample(rng);
            list.push_back(v);
            cum += v;
        }
    }

    // Pooled epochs: arrivals tagged -1, service-stream events tagged by
    // server index; arrivals sort first on (measure-zero) ties.
    std::vector<std::pair<double, int>> pooled;
    for (double t : arrivals) pooled.push_back({t, -1});
    for (int i = 0; i < n; ++i) {
        double cum = 0.0;
        for (double v : intervals[static_cast<std::size_t>(i)]) {
            cum += v;
            if (cum > T) break;
            pooled.push_back({cum, i});
        }
    }
    std::sort(pooled.begin(), pooled.end());

    CoupledReplication out;
    std::int64_t x = 0, sup = 0, rec = 0, running_min = 0;
    for (auto [t, src] : pooled) {
        int step = (src < 0) ? +1 : -1;
        x += step;
        if (x > sup) sup = x;
        if (x < running_min) running_min = x;
        rec = std::max<std::int64_t>(0, rec + step);
        std::int64_t unf = x - running_min;
        out.walk.tau.push_back(t);
        out.walk.x.push_back(x);
        out.walk.sup.push_back(sup);
        out.walk.excess_recursion.push_back(rec);
        out.walk.excess_unfolded.push_back(unf);
        out.walk.is_arrival.push_back(step > 0);
        if (rec != unf) ++out.recursion_mismatches;
        if (step > 0 && static_cast<double>(x) > out.lindley_sup_value)
            out.lindley_sup_value = static_cast<double>(x);
    }
    out.epochs = pooled.size();
    out.walk_sup_value = sup;

    // The coupled FCFS queue under the tick-aligned service discipline:
    // server i completes work exactly at the epochs of its stream, spending
    // idle ticks on virtual items. A job reaching an idle server departs at
    // that server's next tick (the virtual item's residual), which is the
    // coupling that makes Q(t) <= n + excess(t) hold pathwise. Letting the
    // server instead pause its interval sequence while idle breaks the
    // inequality: its real departures then lag the tick count, and the queue
    // can briefly overshoot the always-busy bound.
    std::vector<char> busy(static_cast<std::size_t>(n), 1); // all servers start occupied
    std::int64_t waiting = 0, in_system = n;
    std::size_t k = 0;
    for (auto [t, srcid] : pooled) {
        (void)t;
        if (srcid < 0) { // arrival: lowest-index idle server, else the queue
            ++in_system;
            bool seated = false;
            for (int i = 0; i < n && !seated; ++i)
                if (!busy[static_cast<std::size_t>(i)]) {
                    busy[static_cast<std::size_t>(i)] = 1;
                    seated = true;
                }
            if (!seated) ++waiting;
        } else if (busy[static_cast<std::size_t>(srcid)]) { // real departure
            --in_system;
            if (waiting > 0)
                --waiting; // hand the server straight to the next job
            else
                busy[static_cast<std::size_t>(srcid)] = 0; // next tick is virtual
        } // idle tick: a virtual item completes, nothing to count
        if (in_system > n + out.walk.excess_unfolded[k]) ++out.dominance_violations;
        ++k;
    }
    return out;
}

} // namespace hwq

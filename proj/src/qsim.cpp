#include "hwq/qsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

#include "hwq/errors.hpp"

namespace hwq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr std::uint64_t kIdArrival = 0x21;
constexpr std::uint64_t kIdService = 0x22;
constexpr std::uint64_t kIdInit = 0x23;

struct Engine {
    const QueueConfig& cfg;
    QueuePath path;

    RngStream service_rng;
    std::optional<RenewalStream> arrival_stream;
    std::size_t explicit_arrival_idx = 0;

    // Departures keyed (time, server, job); ties resolve by server index,
    // and departures are taken before a same-time arrival.
    using DepEntry = std::tuple<double, int, std::int64_t>;
    std::priority_queue<DepEntry, std::vector<DepEntry>, std::greater<DepEntry>> departures;
    std::priority_queue<int, std::vector<int>, std::greater<int>> idle;
    std::queue<std::int64_t> waiting;

    std::uint64_t q = 0;
    std::int64_t next_job = 0;
    std::int64_t initial_count = 0;
    std::vector<double> initial_durations;
    std::vector<std::size_t> server_cursor;
    double next_sample;

    explicit Engine(const QueueConfig& c)
        : cfg(c), service_rng(RngStream::derive(c.seed, kIdService, 0)) {
        if (c.horizon <= 0.0) throw ValidationError("horizon must be positive");
        if (c.n < 1) throw ValidationError("n must be >= 1");
        path.n = c.n;
        path.horizon = c.horizon;
        next_sample = c.sample_t0;
        server_cursor.assign(static_cast<std::size_t>(c.n), 0);
        if (!c.server_service_intervals.empty() &&
            c.server_service_intervals.size() != static_cast<std::size_t>(c.n))
            throw ValidationError("server_service_intervals must have one list per server");
        if (c.arrival) {
            arrival_stream.emplace(*c.arrival, c.arrival_mode,
                                   RngStream::derive(c.seed, kIdArrival, 0),
                                   c.arrival_rate_scale);
        } else {
            for (std::size_t i = 1; i < c.arrival_times.size(); ++i)
                if (c.arrival_times[i] < c.arrival_times[i - 1])
                    throw ValidationError("arrival_times must be sorted");
        }
        for (int s = 0; s < c.n; ++s) idle.push(s);
    }

    void record(double t, EventKind k, std::int64_t job, int server) {
        if (cfg.record_events) path.events.push_back({t, k, job, server});
    }

    double service_duration(std::int64_t job, int server) {
        if (job < initial_count)
            return initial_durations[static_cast<std::size_t>(job)];
        if (!cfg.server_service_intervals.empty()) {
            auto& list = cfg.server_service_intervals[static_cast<std::size_t>(server)];
            std::size_t& cur = server_cursor[static_cast<std::size_t>(server)];
            if (cur >= list.size())
                throw ValidationError("server_service_intervals exhausted");
            return list[cur++];
        }
        if (!cfg.service_times.empty()) {
            std::size_t idx = static_cast<std::size_t>(job - initial_count);
            if (job < initial_count || idx >= cfg.service_times.size())
                throw ValidationError("service_times exhausted");
            return cfg.service_times[idx];
        }
        if (!cfg.service) throw ValidationError("service distribution required");
        return cfg.service->sample(service_rng);
    }

    void start_service(double t, std::int64_t job, int server, double duration) {
        record(t, EventKind::service_start, job, server);
        departures.emplace(t + duration, server, job);
    }

    void place_initial_jobs() {
        std::vector<double> remaining = cfg.initial_remaining;
        RngStream init_rng = RngStream::derive(cfg.seed, kIdInit, 0);
        if (remaining.empty()) {
            switch (cfg.init) {
                case QueueConfig::Init::empty:
                    break;
                case QueueConfig::Init::all_busy_residual: {
                    if (!cfg.service)
                        throw ValidationError("all_busy_residual needs a service distribution");
                    for (int i = 0; i < cfg.n; ++i)
                        remaining.push_back(cfg.service->residual_sample(init_rng));
                    break;
                }
                case QueueConfig::Init::poisson_stationary: {
                    if (!cfg.service || !cfg.arrival)
                        throw ValidationError(
                            "poisson_stationary needs arrival and service distributions");
                    double offered = cfg.arrival_rate_scale / cfg.arrival->mean() *
                                     cfg.service->mean();
                    std::uint64_t z = init_rng.poisson(offered);
                    for (std::uint64_t i = 0; i < z; ++i)
                        remaining.push_back(cfg.service->residual_sample(init_rng));
                    // The n jobs processed first are a uniform random subset;
                    // a no-op in law for i.i.d. remaining times, but kept so
                    // the construction matches its definition.
                    std::size_t limit = std::min<std::size_t>(remaining.size(),
                                                              static_cast<std::size_t>(cfg.n));
                    for (std::size_t i = 0; i < limit; ++i) {
                        std::size_t j = i + static_cast<std::size_t>(
                                                init_rng.uniform() *
                                                static_cast<double>(remaining.size() - i));
                        if (j >= remaining.size()) j = remaining.size() - 1;
                        std::swap(remaining[i], remaining[j]);
                    }
                    break;
                }
            }
        }
        initial_count = static_cast<std::int64_t>(remaining.size());
        initial_durations = remaining;
        next_job = initial_count;
        q = remaining.size();
        path.q0 = q;
        for (std::int64_t j = 0; j < initial_count; ++j) {
            if (j < cfg.n) {
                int server = static_cast<int>(j);
                idle.pop(); // servers are taken in index order
                start_service(0.0, j, server, remaining[static_cast<std::size_t>(j)]);
            } else {
                waiting.push(j);
            }
        }
    }

    double next_arrival_time() const {
        if (arrival_stream) return arrival_stream->peek();
        if (explicit_arrival_idx < cfg.arrival_times.size())
            return cfg.arrival_times[explicit_arrival_idx];
        return kInf;
    }

    void emit_samples_before(double t) {
        if (cfg.sample_t0 < 0.0) return;
        while (next_sample <= cfg.horizon && next_sample < t) {
            path.sample_times.push_back(next_sample);
            path.sample_q.push_back(static_cast<double>(q));
            next_sample += cfg.sample_stride;
        }
    }

    void run() {
        place_initial_jobs();
        while (true) {
            double t_dep = departures.empty() ? kInf : std::get<0>(departures.top());
            double t_arr = next_arrival_time();
            bool take_dep = t_dep <= t_arr; // departure first on ties
            double t = take_dep ? t_dep : t_arr;
            if (t > cfg.horizon || t == kInf) break;
            emit_samples_before(t);
            if (++path.event_count > cfg.event_cap)
                throw ResourceError("event cap exceeded");
            if (take_dep) {
                auto [time, server, job] = departures.top();
                departures.pop();
                --q;
                ++path.departures;
                record(time, EventKind::departure, job, server);
                if (!waiting.empty()) {
                    std::int64_t next = waiting.front();
                    waiting.pop();
                    start_service(time, next, server, service_duration(next, server));
                } else {
                    idle.push(server);
                }
            } else {
                if (arrival_stream)
                    arrival_stream->next_event();
                else
                    ++explicit_arrival_idx;
                std::int64_t job = next_job++;
                ++q;
                ++path.arrivals;
                if (!idle.empty()) {
                    int server = idle.top();
                    idle.pop();
                    record(t, EventKind::arrival, job, server);
                    start_service(t, job, server, service_duration(job, server));
                } else {
                    record(t, EventKind::arrival, job, -1);
                    waiting.push(job);
                }
            }
        }
        emit_samples_before(kInf);
        path.q_end = q;
    }
};

} // namespace

QueuePath simulate(const QueueConfig& config) {
    Engine eng(config);
    eng.run();
    return std::move(eng.path);
}

QueueStepFunction::QueueStepFunction(const QueuePath& path) {
    times_.push_back(0.0);
    q_.push_back(static_cast<double>(path.q0));
    double q = static_cast<double>(path.q0);
    for (const auto& e : path.events) {
        if (e.kind == EventKind::arrival)
            q += 1.0;
        else if (e.kind == EventKind::departure)
            q -= 1.0;
        else
            continue;
        if (e.time == times_.back()) {
            q_.back() = q;
        } else {
            times_.push_back(e.time);
            q_.push_back(q);
        }
    }
}

double QueueStepFunction::value_at(double t) const {
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    if (it == times_.begin()) return q_.front();
    return q_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

std::vector<double> steady_state_samples(const QueuePath& path, double t0, double stride) {
    if (t0 >= path.horizon) throw ValidationError("sample start must precede the horizon");
    if (stride <= 0.0) throw ValidationError("sample stride must be positive");
    if (path.event_count > 0 && path.events.empty())
        throw ValidationError("steady_state_samples needs a recorded event log");
    QueueStepFunction f(path);
    std::vector<double> out;
    for (double t = t0; t <= path.horizon; t += stride)
        out.push_back(std::max(0.0, f.value_at(t) - path.n));
    return out;
}

namespace {

std::int64_t declared_initial_count(const QueueConfig& c) {
    if (!c.initial_remaining.empty())
        return static_cast<std::int64_t>(c.initial_remaining.size());
    switch (c.init) {
        case QueueConfig::Init::empty: return 0;
        case QueueConfig::Init::all_busy_residual: return c.n;
        case QueueConfig::Init::poisson_stationary: return -1; // random, unknowable here
    }
    return -1;
}

} // namespace

DominanceReport dominance_check(const QueueConfig& base, const QueueConfig& augmented,
                                const CouplingPlan& plan) {
    bool identical = base == augmented;
    if (base.horizon != augmented.horizon)
        throw ValidationError("dominance: horizons must match");

    std::int64_t base_init = declared_initial_count(base);
    if (base_init < 0 || base_init > base.n)
        throw ValidationError("dominance condition (i): base initial jobs must be known and <= n");

    if (!identical) {
        if (base.initial_remaining != augmented.initial_remaining ||
            base.init != augmented.init)
            throw ValidationError("dominance condition (ii): initial jobs must match");
        if (base.arrival || augmented.arrival)
            throw ValidationError(
                "dominance conditions (iii)-(iv): non-identical configs need explicit arrivals");
        if (base.service_times.size() < base.arrival_times.size() ||
            augmented.service_times.size() < augmented.arrival_times.size())
            throw ValidationError(
                "dominance condition (iv): explicit service times required per arrival");
        std::vector<std::size_t> map = plan.base_to_augmented;
        if (map.empty()) {
            map.resize(base.arrival_times.size());
            for (std::size_t k = 0; k < map.size(); ++k) map[k] = k;
        }
        if (map.size() != base.arrival_times.size())
            throw ValidationError("dominance: coupling plan must cover every base arrival");
        std::size_t prev = 0;
        for (std::size_t k = 0; k < map.size(); ++k) {
            std::size_t a = map[k];
            if (a >= augmented.arrival_times.size() || (k > 0 && a <= prev))
                throw ValidationError(
                    "dominance condition (iii): plan must be an increasing subsequence");
            if (augmented.arrival_times[a] != base.arrival_times[k])
                throw ValidationError("dominance condition (iii): arrival times must match");
            if (augmented.service_times[a] != base.service_times[k])
                throw ValidationError("dominance condition (iv): processing times must match");
            prev = a;
        }
    }

    QueueConfig b = base, a = augmented;
    b.record_events = a.record_events = true;
    QueuePath pb = simulate(b);
    QueuePath pa = simulate(a);
    QueueStepFunction fb(pb), fa(pa);

    std::vector<double> epochs;
    epochs.reserve(pb.events.size() + pa.events.size());
    for (const auto& e : pb.events) epochs.push_back(e.time);
    for (const auto& e : pa.events) epochs.push_back(e.time);
    std::sort(epochs.begin(), epochs.end());
    epochs.erase(std::unique(epochs.begin(), epochs.end()), epochs.end());

    DominanceReport report;
    for (double t : epochs) {
        double qb = fb.value_at(t), qa = fa.value_at(t);
        ++report.epochs_checked;
        if (qa < qb) report.violations.push_back({t, qb, qa});
    }
    return report;
}

} // namespace hwq

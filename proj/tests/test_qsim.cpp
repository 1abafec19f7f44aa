#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "hwq/errors.hpp"
#include "hwq/qsim.hpp"
#include "oracles.hpp"

using namespace hwq;

TEST_CASE("single job walk-through") {
    QueueConfig cfg;
    cfg.n = 1;
    cfg.arrival_times = {0.5};
    cfg.service_times = {0.4};
    cfg.horizon = 2.0;
    cfg.record_events = true;
    auto path = simulate(cfg);

    CHECK(path.q0 == 0);
    CHECK(path.arrivals == 1);
    CHECK(path.departures == 1);
    CHECK(path.q_end == 0);
    REQUIRE(path.events.size() == 3);
    CHECK(path.events[0].kind == EventKind::arrival);
    CHECK(path.events[0].time == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(path.events[1].kind == EventKind::service_start);
    CHECK(path.events[1].time == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(path.events[1].server == 0);
    CHECK(path.events[2].kind == EventKind::departure);
    CHECK(path.events[2].time == doctest::Approx(0.9).epsilon(1e-15));

    QueueStepFunction q(path);
    CHECK(q.value_at(0.0) == 0.0);
    CHECK(q.value_at(0.5) == 1.0); // right-continuous at the arrival
    CHECK(q.value_at(0.89) == 1.0);
    CHECK(q.value_at(0.9) == 0.0);
}

TEST_CASE("two servers, waiting room, FCFS order") {
    QueueConfig cfg;
    cfg.n = 2;
    cfg.arrival_times = {0.0, 0.1, 0.2, 0.3};
    cfg.service_times = {1.0, 1.0, 0.05, 0.05};
    cfg.horizon = 5.0;
    cfg.record_events = true;
    auto path = simulate(cfg);

    // jobs 2 and 3 wait; both servers busy until 1.0, then FCFS: job 2
    // starts at 1.0 (server 0 frees first), job 3 at 1.05 or 1.1
    std::map<std::int64_t, double> start, dep;
    for (auto& e : path.events) {
        if (e.kind == EventKind::service_start) start[e.job] = e.time;
        if (e.kind == EventKind::departure) dep[e.job] = e.time;
    }
    CHECK(start[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(start[1] == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(start[2] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(start[3] >= start[2]); // FCFS: started in arrival order
    CHECK(path.departures == 4);
    // lowest-index idle server takes the first arrival
    for (auto& e : path.events)
        if (e.kind == EventKind::service_start && e.job == 0) CHECK(e.server == 0);
}

TEST_CASE("flow conservation on a random path") {
    QueueConfig cfg;
    cfg.n = 3;
    cfg.arrival = DistSpec::exponential(1.0);
    cfg.arrival_rate_scale = 2.5;
    cfg.service = DistSpec::erlang(2, 2.0);
    cfg.horizon = 200.0;
    cfg.seed = 5;
    auto path = simulate(cfg);
    CHECK(path.q0 + path.arrivals - path.departures == path.q_end);
    CHECK(path.arrivals > 300); // mean 500
}

TEST_CASE("waiting-time recursion holds on a recorded single-server path") {
    QueueConfig cfg;
    cfg.n = 1;
    cfg.arrival = DistSpec::exponential(1.0);
    cfg.arrival_mode = RenewalStream::Mode::ordinary;
    cfg.arrival_rate_scale = 0.8;
    cfg.service = DistSpec::exponential(1.0);
    cfg.horizon = 300.0;
    cfg.seed = 11;
    cfg.record_events = true;
    auto path = simulate(cfg);

    std::map<std::int64_t, double> arr, start, dur;
    for (auto& e : path.events) {
        if (e.kind == EventKind::arrival) arr[e.job] = e.time;
        if (e.kind == EventKind::service_start) start[e.job] = e.time;
        if (e.kind == EventKind::departure) dur[e.job] = e.time - start[e.job];
    }
    int checked = 0;
    for (std::int64_t k = 0; arr.count(k + 1) && dur.count(k); ++k) {
        double w_k = start[k] - arr[k];
        double w_next = start[k + 1] - arr[k + 1];
        double lindley = std::max(0.0, w_k + dur[k] - (arr[k + 1] - arr[k]));
        CHECK(w_next == doctest::Approx(lindley).epsilon(1e-9));
        ++checked;
    }
    CHECK(checked > 100);
}

TEST_CASE("all_busy_residual starts with every server occupied") {
    QueueConfig cfg;
    cfg.n = 5;
    cfg.arrival = DistSpec::exponential(1.0);
    cfg.arrival_rate_scale = 3.0;
    cfg.service = DistSpec::erlang(2, 2.0);
    cfg.init = QueueConfig::Init::all_busy_residual;
    cfg.horizon = 10.0;
    cfg.seed = 21;
    auto path = simulate(cfg);
    CHECK(path.q0 == 5);
}

TEST_CASE("poisson_stationary initial count has the offered-load mean") {
    const int reps = 400;
    const double offered = 90.0;
    double s = 0.0;
    QueueConfig cfg;
    cfg.n = 100;
    cfg.arrival = DistSpec::exponential(1.0);
    cfg.arrival_rate_scale = 90.0;
    cfg.service = DistSpec::exponential(1.0);
    cfg.init = QueueConfig::Init::poisson_stationary;
    cfg.horizon = 0.01;
    for (int i = 0; i < reps; ++i) {
        cfg.seed = 1000 + i;
        s += static_cast<double>(simulate(cfg).q0);
    }
    double se = std::sqrt(offered / reps);
    CHECK(std::abs(s / reps - offered) < 4 * se);
}

TEST_CASE("streaming samples and steady_state_samples agree") {
    QueueConfig cfg;
    cfg.n = 2;
    cfg.arrival = DistSpec::exponential(1.0);
    cfg.arrival_rate_scale = 1.5;
    cfg.service = DistSpec::exponential(1.0);
    cfg.horizon = 50.0;
    cfg.seed = 31;
    cfg.record_events = true;
    cfg.sample_t0 = 5.0;
    cfg.sample_stride = 0.5;
    auto path = simulate(cfg);
    auto excess = steady_state_samples(path, 5.0, 0.5);
    REQUIRE(excess.size() == path.sample_q.size());
    for (std::size_t i = 0; i < excess.size(); ++i)
        CHECK(excess[i] == std::max(0.0, path.sample_q[i] - cfg.n));
}

TEST_CASE("steady_state_samples validates its inputs") {
    QueueConfig cfg;
    cfg.n = 1;
    cfg.arrival_times = {0.5};
    cfg.service_times = {0.1};
    cfg.horizon = 1.0;
    auto no_events = simulate(cfg);
    CHECK_THROWS_AS(steady_state_samples(no_events, 0.0, 0.1), ValidationError);
    cfg.record_events = true;
    auto path = simulate(cfg);
    CHECK_THROWS_AS(steady_state_samples(path, 0.0, 0.0), ValidationError);
    CHECK_THROWS_AS(steady_state_samples(path, 2.0, 0.1), ValidationError);
}

TEST_CASE("M/M/1 matches the geometric stationary law") {
    const double rho = 0.9;
    QueueConfig cfg;
    cfg.n = 1;
    cfg.arrival = DistSpec::exponential(1.0);
    cfg.arrival_rate_scale = rho;
    cfg.service = DistSpec::exponential(1.0);
    cfg.init = QueueConfig::Init::poisson_stationary;
    cfg.horizon = 4.0e6;
    cfg.seed = 41;
    cfg.sample_t0 = 1000.0;
    cfg.sample_stride = 1.0;
    auto path = simulate(cfg);
    REQUIRE(path.sample_q.size() > 3000000);

    std::vector<long long> q(path.sample_q.size());
    std::transform(path.sample_q.begin(), path.sample_q.end(), q.begin(),
                   [](double v) { return static_cast<long long>(std::llround(v)); });
    std::vector<double> pmf(400);
    for (std::size_t j = 0; j < pmf.size(); ++j)
        pmf[j] = (1.0 - rho) * std::pow(rho, static_cast<double>(j));
    CHECK(oracle::pmf_sup_distance(q, pmf) < 0.01);
}

TEST_CASE("M/M/n congestion probability matches the birth-death oracle") {
    const int n = 100;
    const double a = 90.0;
    QueueConfig cfg;
    cfg.n = n;
    cfg.arrival = DistSpec::exponential(1.0);
    cfg.arrival_rate_scale = a;
    cfg.service = DistSpec::exponential(1.0);
    cfg.init = QueueConfig::Init::poisson_stationary;
    cfg.horizon = 30000.0;
    cfg.seed = 43;
    cfg.sample_t0 = 500.0;
    cfg.sample_stride = 1.0;
    auto path = simulate(cfg);

    // P(all busy) and P(Q >= n+1) with batch-means errors
    const int batches = 32;
    std::size_t m = path.sample_q.size();
    REQUIRE(m > 20000);
    auto batch_ci = [&](auto pred) {
        std::vector<double> bm(batches, 0.0);
        std::size_t per = m / batches;
        for (int b = 0; b < batches; ++b) {
            for (std::size_t i = b * per; i < (b + 1ull) * per; ++i)
                bm[b] += pred(path.sample_q[i]) ? 1.0 : 0.0;
            bm[b] /= static_cast<double>(per);
        }
        double mu = 0.0, s2 = 0.0;
        for (double v : bm) mu += v;
        mu /= batches;
        for (double v : bm) s2 += (v - mu) * (v - mu);
        return std::pair{mu, std::sqrt(s2 / (batches - 1.0) / batches)};
    };
    auto [p_busy, se_busy] = batch_ci([&](double q) { return q >= n; });
    auto [p_exc, se_exc] = batch_ci([&](double q) { return q >= n + 1; });
    CHECK(std::abs(p_busy - oracle::erlang_c(n, a)) < 4 * se_busy);
    CHECK(std::abs(p_exc - oracle::mmn_excess_tail(n, a, 1)) < 4 * se_exc);
}

TEST_CASE("dominance: identical configs never violate") {
    QueueConfig cfg;
    cfg.n = 5;
    cfg.arrival = DistSpec::exponential(1.0);
    cfg.arrival_rate_scale = 4.0;
    cfg.service = DistSpec::erlang(2, 2.0);
    cfg.horizon = 100.0;
    cfg.seed = 51;
    cfg.record_events = true;
    auto report = dominance_check(cfg, cfg);
    CHECK(report.violations.empty());
    CHECK(report.epochs_checked > 0);
}

TEST_CASE("dominance: one extra arrival can only increase the queue") {
    RngStream rng(RngStream::derive(61, 1, 0));
    for (int rep = 0; rep < 25; ++rep) {
        QueueConfig base;
        base.n = 3;
        base.horizon = 40.0;
        base.record_events = true;
        double t = 0.0;
        while (true) {
            t += rng.exponential(2.5);
            if (t > base.horizon) break;
            base.arrival_times.push_back(t);
            base.service_times.push_back(rng.exponential(1.0));
        }
        if (base.arrival_times.empty()) continue;

        QueueConfig aug = base;
        double extra_t = rng.uniform() * base.horizon;
        double extra_s = rng.exponential(1.0);
        auto pos = std::upper_bound(aug.arrival_times.begin(), aug.arrival_times.end(),
                                    extra_t) - aug.arrival_times.begin();
        aug.arrival_times.insert(aug.arrival_times.begin() + pos, extra_t);
        aug.service_times.insert(aug.service_times.begin() + pos, extra_s);

        CouplingPlan plan;
        for (std::size_t k = 0; k < base.arrival_times.size(); ++k)
            plan.base_to_augmented.push_back(k + (static_cast<std::size_t>(pos) <= k ? 1 : 0));

        auto report = dominance_check(base, aug, plan);
        CHECK(report.violations.empty());
    }
}

TEST_CASE("dominance: hypothesis violations are rejected, not silently compared") {
    QueueConfig base;
    base.n = 2;
    base.arrival_times = {1.0, 2.0};
    base.service_times = {1.0, 1.0};
    base.horizon = 10.0;
    base.record_events = true;

    // (i) base starts with more than n jobs
    QueueConfig bad = base;
    bad.initial_remaining = {1.0, 1.0, 1.0};
    QueueConfig bad_aug = bad;
    bad_aug.arrival_times.push_back(3.0);
    bad_aug.service_times.push_back(1.0);
    CHECK_THROWS_AS(dominance_check(bad, bad_aug), ValidationError);

    // (ii) initial occupancy differs
    QueueConfig aug = base;
    aug.initial_remaining = {0.5};
    CHECK_THROWS_AS(dominance_check(base, aug), ValidationError);

    // (iii) base arrivals not a subsequence of augmented arrivals
    QueueConfig aug2 = base;
    aug2.arrival_times = {1.0, 2.5};
    CHECK_THROWS_AS(dominance_check(base, aug2), ValidationError);

    // (iv) mapped service time differs
    QueueConfig aug3 = base;
    aug3.service_times = {1.0, 2.0};
    CHECK_THROWS_AS(dominance_check(base, aug3), ValidationError);
}

TEST_CASE("event cap raises ResourceError") {
    QueueConfig cfg;
    cfg.n = 1;
    cfg.arrival = DistSpec::exponential(1.0);
    cfg.arrival_rate_scale = 10.0;
    cfg.service = DistSpec::exponential(100.0);
    cfg.horizon = 1000.0;
    cfg.seed = 71;
    cfg.event_cap = 50;
    CHECK_THROWS_AS(simulate(cfg), ResourceError);
}

TEST_CASE("config validation") {
    QueueConfig cfg;
    cfg.n = 0;
    CHECK_THROWS_AS(simulate(cfg), ValidationError);
    cfg.n = 1;
    cfg.horizon = -1.0;
    CHECK_THROWS_AS(simulate(cfg), ValidationError);
    cfg.horizon = 1.0;
    cfg.arrival_times = {0.5, 0.2}; // not sorted
    CHECK_THROWS_AS(simulate(cfg), ValidationError);
}

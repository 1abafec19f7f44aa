#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hwq/dist.hpp"
#include "hwq/renewal.hpp"

namespace hwq {

enum class EventKind { arrival, service_start, departure };

struct QueueEvent {
    double time;
    EventKind kind;
    std::int64_t job;
    int server; // -1 when not applicable (arrival joining the queue)
};

// FCFS G/G/n configuration. The arrival feed is either a renewal spec
// (rate-scaled, e.g. by lambda_n) or an explicit sorted time list; service
// times are drawn per job at service start unless overridden by explicit
// per-job times or per-server interval sequences (used by the coupling
// harness, where server i consumes its renewal stream's intervals in order).
struct QueueConfig {
    enum class Init { empty, all_busy_residual, poisson_stationary };

    int n = 1;

    std::optional<DistSpec> arrival;
    RenewalStream::Mode arrival_mode = RenewalStream::Mode::equilibrium;
    double arrival_rate_scale = 1.0;
    std::vector<double> arrival_times; // used when arrival is not set

    std::optional<DistSpec> service;
    std::vector<double> service_times; // indexed by arriving-job order
    std::vector<std::vector<double>> server_service_intervals;

    Init init = Init::empty;
    std::vector<double> initial_remaining; // explicit initial jobs (first n in service)

    double horizon = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t event_cap = 2'000'000'000ULL;

    bool record_events = false;
    double sample_t0 = -1.0; // streaming Q samples enabled when >= 0
    double sample_stride = 0.0;

    bool operator==(const QueueConfig&) const = default;
};

struct QueuePath {
    int n = 0;
    double horizon = 0.0;
    std::uint64_t q0 = 0;            // number in system at time 0
    std::uint64_t q_end = 0;         // number in system at the horizon
    std::uint64_t arrivals = 0;      // arrivals processed (time <= horizon)
    std::uint64_t departures = 0;
    std::uint64_t event_count = 0;
    std::vector<QueueEvent> events;  // present iff record_events
    std::vector<double> sample_times;
    std::vector<double> sample_q;    // raw number in system at sample_times
};

QueuePath simulate(const QueueConfig& config);

// Right-continuous step function of the number in system, reconstructed
// from a recorded event log.
class QueueStepFunction {
public:
    QueueStepFunction(const QueuePath& path);
    double value_at(double t) const; // Q(t), right-continuous
    const std::vector<double>& times() const { return times_; }

private:
    std::vector<double> times_;
    std::vector<double> q_;
};

// (Q(t)-n)^+ sampled at t0, t0+stride, ... up to the horizon; requires a
// recorded event log.
std::vector<double> steady_state_samples(const QueuePath& path, double t0, double stride);

struct CouplingPlan {
    // base arrival k corresponds to augmented arrival base_to_augmented[k];
    // empty means the identity prefix.
    std::vector<std::size_t> base_to_augmented;
};

struct DominanceViolation {
    double time;
    double q_base;
    double q_augmented;
};

struct DominanceReport {
    std::vector<DominanceViolation> violations;
    std::uint64_t epochs_checked = 0;
};

// Checks Q_augmented(t) >= Q_base(t) at every event epoch of either path,
// after validating the comparison hypotheses: base starts with at most n
// jobs, initial jobs match, base arrivals are a subsequence of augmented
// arrivals with matched processing times. Hypothesis violations raise
// ValidationError naming the failed condition.
DominanceReport dominance_check(const QueueConfig& base, const QueueConfig& augmented,
                                const CouplingPlan& plan = {});

} // namespace hwq

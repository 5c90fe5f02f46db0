#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace smartmars::analysis {

using Rational = boost::multiprecision::cpp_rational;

/// One periodic task of a single-processor fixed-priority model. Deadline
/// equals period. Larger priority values are more urgent.
struct AnalysisTask {
    std::string name;
    std::int64_t wcet_ms = 0;
    std::int64_t period_ms = 0;
    std::optional<std::int64_t> priority;
    /// Emulated periodic task or derived cyclic load rather than a realtime task.
    bool emulated = false;

    friend bool operator==(const AnalysisTask&, const AnalysisTask&) = default;
};

struct AnalysisTaskSet {
    std::map<std::string, std::vector<AnalysisTask>> per_platform;

    std::size_t size() const;
    friend bool operator==(const AnalysisTaskSet&, const AnalysisTaskSet&) = default;
};

/// n(2^(1/n) - 1). Throws InvalidArgument for n < 1.
double utilization_bound(std::int64_t n);

/// Exact sum of C/T.
Rational utilization(const std::vector<AnalysisTask>& tasks);

/// Highest priority first; equal priorities fall back to shorter period,
/// then name. Throws InvalidTaskSet for missing priorities, C <= 0, T <= 0,
/// C > T or duplicate names.
std::vector<AnalysisTask> priority_order(const std::vector<AnalysisTask>& tasks);

enum class LlVerdict { SchedulableByBound, Inconclusive };
std::string_view to_string(LlVerdict v);

struct TaskResponse {
    std::string name;
    std::int64_t wcet_ms = 0;
    std::int64_t period_ms = 0;
    std::int64_t priority = 0;
    /// nullopt is Unbounded: the recurrence passed the period.
    std::optional<std::int64_t> response_ms;
    bool schedulable = false;

    friend bool operator==(const TaskResponse&, const TaskResponse&) = default;
};

struct RtaResult {
    /// In priority order.
    std::vector<TaskResponse> tasks;
    bool set_schedulable = true;
    Rational utilization;
    double ll_bound = 1.0;
    LlVerdict ll_verdict = LlVerdict::SchedulableByBound;

    const TaskResponse* find(std::string_view name) const;
};

/// Response-time analysis of one processor's task set.
RtaResult rta(const std::vector<AnalysisTask>& tasks);

struct SimulatedResponse {
    std::string name;
    /// Worst completion minus release over all jobs released in one
    /// hyperperiod; nullopt if some job never completed.
    std::optional<std::int64_t> worst_response_ms;
    std::int64_t deadline_misses = 0;

    friend bool operator==(const SimulatedResponse&, const SimulatedResponse&) = default;
};

inline constexpr std::int64_t kDefaultHyperperiodCap = 1'000'000;

/// Least common multiple of the periods, or nullopt once it exceeds `cap`.
std::optional<std::int64_t> hyperperiod(const std::vector<AnalysisTask>& tasks, std::int64_t cap);

/// Preemptive fixed-priority schedule from a synchronous release at t=0.
/// Jobs released in [0, H) are followed to completion; the run gives up at
/// 2H, leaving the unfinished tasks without a worst response. Results are
/// in priority order. Throws HyperperiodTooLarge and InvalidTaskSet.
std::vector<SimulatedResponse> simulate_hyperperiod(const std::vector<AnalysisTask>& tasks,
                                                    std::int64_t cap = kDefaultHyperperiodCap);

/// Rate-monotonic priorities: shorter period is more urgent, equal periods
/// by name. A set where every task already has a priority is returned as is.
std::vector<AnalysisTask> assign_rm_priorities(std::vector<AnalysisTask> tasks);

/// Per-platform analysis. Emulated tasks take part only with `include_emulated`.
std::map<std::string, RtaResult> analyze(const AnalysisTaskSet& set, bool include_emulated = false);

enum class ExportFormat { Native, CheddarXml };

std::string export_analysis_model(const AnalysisTaskSet& set, ExportFormat format);
/// Reads the Native format. Throws InvalidArgument naming the line.
AnalysisTaskSet import_analysis_model(std::string_view text);

/// "n/d", or "n" for whole numbers.
std::string to_string(const Rational& r);

}  // namespace smartmars::analysis

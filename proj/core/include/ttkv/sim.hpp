#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace ttkv {

struct LinkModel {
  double bandwidth = 3.2e10;   // bytes/s
  double fixed_latency = 0.0;  // s per transfer initiation
};

struct WorkItem {
  std::string label;
  double amount = 0.0;  // attention elements (compute) or bytes (transfer)
};

/// One decode step's workload: the fast-tier compute chunk plus one compute
/// and one transfer entry per fetched block, both in prefetch-schedule order.
struct StepWorkload {
  std::vector<WorkItem> compute_items;
  std::vector<WorkItem> transfer_items;
};

struct TimelineEvent {
  enum class Lane { Transfer, Compute };
  Lane lane = Lane::Compute;
  std::string label;
  double start = 0.0;
  double finish = 0.0;
};

struct PipelineTimeline {
  std::vector<TimelineEvent> events;
  double total_latency = 0.0;
  double total_compute = 0.0;
  double total_transfer = 0.0;
  /// Compute-lane idle time divided by total latency.
  double idle_fraction = 0.0;
  /// Mean over transferred blocks of the delay their compute start suffers
  /// relative to a zero-transfer schedule. The effective per-block transfer
  /// latency of the schedule.
  double mean_transfer_stall = 0.0;
};

/// Bulk baseline: all transfers complete before any compute starts.
PipelineTimeline simulate_serial(const StepWorkload& workload,
                                 const LinkModel& link, double compute_rate);

/// Two-lane overlapped schedule: the transfer lane streams blocks
/// back-to-back; the compute lane runs the fast chunk first, then each block
/// no earlier than max(previous compute finish, its transfer finish).
PipelineTimeline simulate_pipelined(const StepWorkload& workload,
                                    const LinkModel& link,
                                    double compute_rate);

/// Byte-exact host-to-GPU accounting, one entry per decode step.
struct TrafficLedger {
  std::vector<double> step_bytes;           // method under test
  std::vector<double> baseline_step_bytes;  // full-precision full fetch

  double total_bytes() const;
  double total_baseline_bytes() const;
};

struct RunSummary {
  std::size_t steps = 0;
  double p95_latency = 0.0;   // nearest-rank over warm steps
  double mean_latency = 0.0;
  double tokens_per_second = 0.0;
  double total_h2g_bytes = 0.0;
  double traffic_reduction_vs_baseline = 0.0;
};

/// Aggregates per-step timelines into run-level statistics. With 25 or more
/// steps the first 5 are treated as warm-up and excluded from latency stats.
RunSummary aggregate_run(const std::vector<PipelineTimeline>& timelines,
                         const TrafficLedger& ledger);

/// Line-delimited event records: lane<TAB>label<TAB>start<TAB>finish.
void dump_timeline(std::ostream& os, const PipelineTimeline& timeline);

}  // namespace ttkv

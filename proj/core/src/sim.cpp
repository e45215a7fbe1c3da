#include "ttkv/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "ttkv/errors.hpp"

namespace ttkv {
namespace {

double compute_time(const WorkItem& item, double rate) {
  return item.amount / rate;
}

double transfer_time(const WorkItem& item, const LinkModel& link) {
  return link.fixed_latency + item.amount / link.bandwidth;
}

void check_rates(const LinkModel& link, double compute_rate) {
  if (link.bandwidth <= 0 || compute_rate <= 0)
    throw ConfigError("simulate: bandwidth and compute_rate must be positive");
  if (link.fixed_latency < 0)
    throw ConfigError("simulate: fixed_latency must be non-negative");
}

std::unordered_map<std::string, double> transfer_finish_map(
    const StepWorkload& w, const LinkModel& link,
    std::vector<TimelineEvent>& events, double& total_transfer) {
  std::unordered_map<std::string, double> finish;
  double t = 0.0;
  for (const WorkItem& item : w.transfer_items) {
    const double dur = transfer_time(item, link);
    events.push_back({TimelineEvent::Lane::Transfer, item.label, t, t + dur});
    t += dur;
    finish[item.label] = t;
  }
  total_transfer = t;
  return finish;
}

// Compute-lane starts of the zero-transfer schedule, used as the reference
// for the per-block transfer stall.
std::vector<double> ideal_starts(const StepWorkload& w, double rate) {
  std::vector<double> starts(w.compute_items.size());
  double t = 0.0;
  for (std::size_t i = 0; i < w.compute_items.size(); ++i) {
    starts[i] = t;
    t += compute_time(w.compute_items[i], rate);
  }
  return starts;
}

void finish_stats(PipelineTimeline& tl, const StepWorkload& w, double rate,
                  const std::unordered_map<std::string, double>& transferred,
                  const std::vector<double>& actual_starts) {
  const auto ideal = ideal_starts(w, rate);
  double stall_sum = 0.0;
  std::size_t stall_n = 0;
  for (std::size_t i = 0; i < w.compute_items.size(); ++i) {
    if (transferred.count(w.compute_items[i].label)) {
      stall_sum += actual_starts[i] - ideal[i];
      ++stall_n;
    }
  }
  tl.mean_transfer_stall = stall_n ? stall_sum / stall_n : 0.0;
  tl.idle_fraction =
      tl.total_latency > 0
          ? (tl.total_latency - tl.total_compute) / tl.total_latency
          : 0.0;
}

void check_labels(const StepWorkload& w) {
  for (const WorkItem& t : w.transfer_items) {
    const bool found =
        std::any_of(w.compute_items.begin(), w.compute_items.end(),
                    [&](const WorkItem& c) { return c.label == t.label; });
    if (!found)
      throw Error("workload: transfer item '" + t.label +
                  "' has no matching compute item");
  }
}

}  // namespace

PipelineTimeline simulate_serial(const StepWorkload& workload,
                                 const LinkModel& link, double compute_rate) {
  check_rates(link, compute_rate);
  check_labels(workload);

  PipelineTimeline tl;
  auto transferred =
      transfer_finish_map(workload, link, tl.events, tl.total_transfer);

  std::vector<double> starts(workload.compute_items.size());
  double t = tl.total_transfer;
  for (std::size_t i = 0; i < workload.compute_items.size(); ++i) {
    const WorkItem& item = workload.compute_items[i];
    const double dur = compute_time(item, compute_rate);
    tl.events.push_back({TimelineEvent::Lane::Compute, item.label, t, t + dur});
    starts[i] = t;
    t += dur;
    tl.total_compute += dur;
  }
  tl.total_latency = t;
  finish_stats(tl, workload, compute_rate, transferred, starts);
  return tl;
}

PipelineTimeline simulate_pipelined(const StepWorkload& workload,
                                    const LinkModel& link,
                                    double compute_rate) {
  check_rates(link, compute_rate);
  check_labels(workload);

  PipelineTimeline tl;
  auto transferred =
      transfer_finish_map(workload, link, tl.events, tl.total_transfer);

  std::vector<double> starts(workload.compute_items.size());
  double lane = 0.0;
  for (std::size_t i = 0; i < workload.compute_items.size(); ++i) {
    const WorkItem& item = workload.compute_items[i];
    double start = lane;
    if (auto it = transferred.find(item.label); it != transferred.end())
      start = std::max(start, it->second);
    const double dur = compute_time(item, compute_rate);
    tl.events.push_back(
        {TimelineEvent::Lane::Compute, item.label, start, start + dur});
    starts[i] = start;
    lane = start + dur;
    tl.total_compute += dur;
  }
  tl.total_latency = std::max(lane, tl.total_transfer);
  finish_stats(tl, workload, compute_rate, transferred, starts);
  return tl;
}

double TrafficLedger::total_bytes() const {
  return std::accumulate(step_bytes.begin(), step_bytes.end(), 0.0);
}

double TrafficLedger::total_baseline_bytes() const {
  return std::accumulate(baseline_step_bytes.begin(),
                         baseline_step_bytes.end(), 0.0);
}

RunSummary aggregate_run(const std::vector<PipelineTimeline>& timelines,
                         const TrafficLedger& ledger) {
  if (timelines.empty()) throw Error("aggregate_run: no timelines");

  // Discard warm-up steps when the run is long enough to afford them.
  const std::size_t warmup = timelines.size() >= 25 ? 5 : 0;
  std::vector<double> lat;
  lat.reserve(timelines.size() - warmup);
  for (std::size_t i = warmup; i < timelines.size(); ++i)
    lat.push_back(timelines[i].total_latency);

  std::vector<double> sorted = lat;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t rank = static_cast<std::size_t>(
      std::ceil(0.95 * static_cast<double>(sorted.size())));

  RunSummary s;
  s.steps = timelines.size();
  s.p95_latency = sorted[rank == 0 ? 0 : rank - 1];
  const double total = std::accumulate(lat.begin(), lat.end(), 0.0);
  s.mean_latency = total / static_cast<double>(lat.size());
  s.tokens_per_second =
      total > 0 ? static_cast<double>(lat.size()) / total : 0.0;
  s.total_h2g_bytes = ledger.total_bytes();

  const double baseline = ledger.total_baseline_bytes();
  if (s.total_h2g_bytes > 0)
    s.traffic_reduction_vs_baseline = baseline / s.total_h2g_bytes;
  else
    s.traffic_reduction_vs_baseline =
        baseline > 0 ? std::numeric_limits<double>::infinity() : 1.0;
  return s;
}

void dump_timeline(std::ostream& os, const PipelineTimeline& timeline) {
  char buf[64];
  for (const TimelineEvent& e : timeline.events) {
    os << (e.lane == TimelineEvent::Lane::Transfer ? "transfer" : "compute")
       << '\t' << e.label << '\t';
    std::snprintf(buf, sizeof(buf), "%.9e", e.start);
    os << buf << '\t';
    std::snprintf(buf, sizeof(buf), "%.9e", e.finish);
    os << buf << '\n';
  }
}

}  // namespace ttkv

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ttkv/config.hpp"
#include "ttkv/engine.hpp"
#include "ttkv/relevance.hpp"
#include "ttkv/sim.hpp"
#include "ttkv/workload.hpp"

namespace ttkv {

/// Method under test. Exactly one per run; the non-ttkv entries emulate the
/// ablation variants.
enum class Baseline {
  Ttkv,
  Fp16FullFetch,   // lossless storage, fetches the whole slow range, serial
  UniformQuant88,  // value_bits raised to 8
  NoPipeline,      // ttkv storage/selection, serial timeline
  SingleTier,      // fast tier shrunk to one block, fetches all slow blocks
};

const char* baseline_name(Baseline b);
std::optional<Baseline> baseline_from_name(const std::string& name);

enum class ReportFormat { Csv, Json };

struct RunConfig {
  TierConfig tier;
  SelectionPolicy policy;
  Baseline baseline = Baseline::Ttkv;
  ReportFormat format = ReportFormat::Csv;
  std::string out_dir = ".";
  bool literal_merge = false;
};

/// One report row plus its per-step artifacts.
struct RunRecord {
  std::string method;
  WorkloadSpec spec;
  TierConfig effective_tier;
  SelectionPolicy effective_policy;
  RunSummary summary;
  double oracle_error = 0.0;          // mean relative error vs dense oracle
  double needle_recall = -1.0;        // fraction of steps; -1 when n/a
  std::vector<double> step_oracle_errors;
  std::vector<DecodeStepReport> steps;
  std::vector<PipelineTimeline> timelines;
};

/// The tier config / policy actually executed for a baseline variant.
TierConfig effective_tier_config(const RunConfig& config);
SelectionPolicy effective_policy(const RunConfig& config);

RunRecord run_benchmark(const RunConfig& config, const WorkloadSpec& spec);

struct SweepGrid {
  std::vector<std::size_t> context_lengths;
  std::vector<std::size_t> block_sizes;
  std::vector<unsigned> key_bits;
  std::vector<unsigned> value_bits;
  std::vector<double> fetch_fractions;
};

/// Grid sweep in deterministic order: context, block, bits, fraction.
std::vector<RunRecord> run_sweep(const RunConfig& base,
                                 const WorkloadSpec& base_spec,
                                 const SweepGrid& grid);

/// All baseline variants plus ttkv on one fixed config/workload.
std::vector<RunRecord> run_ablation(const RunConfig& base,
                                    const WorkloadSpec& spec);

void write_report(std::ostream& os, const std::vector<RunRecord>& records,
                  ReportFormat format);
void write_step_records(std::ostream& os, const RunRecord& record);
void write_run_timelines(std::ostream& os, const RunRecord& record);

/// Writes report.{csv,json} (and steps.csv per run) under out_dir.
/// Byte-identical output for identical inputs. Empty input is a usage error.
void emit_report(const std::vector<RunRecord>& records,
                 const std::filesystem::path& out_dir, ReportFormat format);

/// Flat `key = value` config file; '#' starts a comment.
std::map<std::string, std::string> parse_config_file(
    const std::filesystem::path& path);

/// Applies file values to config/spec. CLI flags are expected to be applied
/// after this, so they take precedence.
void apply_config_values(const std::map<std::string, std::string>& values,
                         RunConfig& config, WorkloadSpec& spec);

}  // namespace ttkv

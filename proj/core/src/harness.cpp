#include "ttkv/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ttkv/reference.hpp"

namespace ttkv {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

bool serial_schedule(Baseline b) {
  return b == Baseline::Fp16FullFetch || b == Baseline::NoPipeline;
}

// Fast-tier occupancy and slow-tier token count after n sequential appends.
std::size_t slow_tokens_after(std::size_t n, std::size_t l_fast,
                              std::size_t block) {
  if (n <= l_fast) return 0;
  const std::size_t evictions = (n - l_fast - 1) / block + 1;
  return evictions * block;
}

}  // namespace

const char* baseline_name(Baseline b) {
  switch (b) {
    case Baseline::Ttkv: return "ttkv";
    case Baseline::Fp16FullFetch: return "fp16_full_fetch";
    case Baseline::UniformQuant88: return "uniform_quant_8_8";
    case Baseline::NoPipeline: return "no_pipeline";
    case Baseline::SingleTier: return "single_tier";
  }
  return "unknown";
}

std::optional<Baseline> baseline_from_name(const std::string& name) {
  for (Baseline b : {Baseline::Ttkv, Baseline::Fp16FullFetch,
                     Baseline::UniformQuant88, Baseline::NoPipeline,
                     Baseline::SingleTier}) {
    if (name == baseline_name(b)) return b;
  }
  return std::nullopt;
}

TierConfig effective_tier_config(const RunConfig& config) {
  TierConfig t = config.tier;
  if (t.hbm_budget_bytes == 0)
    t.hbm_budget_bytes = 1024 * t.d_kv() * t.bytes_full_precision;
  switch (config.baseline) {
    case Baseline::Fp16FullFetch:
      t.key_bits = 16;
      t.value_bits = 16;
      break;
    case Baseline::UniformQuant88:
      t.key_bits = 8;
      t.value_bits = 8;
      break;
    case Baseline::SingleTier:
      t.hbm_budget_bytes = t.block_bytes_full_precision();
      break;
    case Baseline::Ttkv:
    case Baseline::NoPipeline:
      break;
  }
  t.validate();
  return t;
}

SelectionPolicy effective_policy(const RunConfig& config) {
  if (config.baseline == Baseline::Fp16FullFetch ||
      config.baseline == Baseline::SingleTier) {
    return SelectionPolicy{std::nullopt, 1.0};  // fetch the whole slow range
  }
  return config.policy;
}

RunRecord run_benchmark(const RunConfig& config, const WorkloadSpec& spec) {
  spec.validate();
  const TierConfig tier = effective_tier_config(config);
  const SelectionPolicy policy = effective_policy(config);
  const std::size_t l_fast = fast_capacity(tier);

  if (tier.nonstandard_block_size())
    std::cerr << "warning: block_size " << tier.block_size
              << " is outside the supported grid {32, 64, 128, 256}\n";

  if (spec.kind == WorkloadSpec::Kind::PlantedNeedle) {
    const std::size_t needle_end =
        (spec.needle_block_position + 1) * kNeedleSpanTokens;
    if (needle_end >
        slow_tokens_after(spec.context_length, l_fast, tier.block_size))
      throw ConfigError(
          "needle span does not land in the slow tier for this config");
  }

  const WorkloadStream stream = generate_workload(spec);

  Engine engine(tier, policy, EngineOptions{config.literal_merge});
  engine.prefill(stream.prefill);

  std::vector<TokenKV> history = stream.prefill;
  history.reserve(stream.prefill.size() + stream.decode.size());

  const LinkModel link{tier.pcie_bandwidth, tier.transfer_latency};
  const std::size_t needle_first =
      spec.needle_block_position * kNeedleSpanTokens;

  RunRecord record;
  record.method = baseline_name(config.baseline);
  record.spec = spec;
  record.effective_tier = tier;
  record.effective_policy = policy;

  TrafficLedger ledger;
  std::size_t needle_hits = 0;

  for (const DecodeInput& in : stream.decode) {
    const double baseline_bytes =
        static_cast<double>(engine.store().slow_token_count()) *
        tier.d_kv() * tier.bytes_full_precision;

    DecodeStepReport report = engine.decode_step(in.query, in.kv);
    history.push_back(in.kv);

    const auto oracle = reference::dense_attention(in.query, history);
    record.step_oracle_errors.push_back(
        reference::relative_error(report.output, oracle));

    record.timelines.push_back(
        serial_schedule(config.baseline)
            ? simulate_serial(report.workload, link, tier.compute_rate)
            : simulate_pipelined(report.workload, link, tier.compute_rate));

    ledger.step_bytes.push_back(report.bytes_transferred);
    ledger.baseline_step_bytes.push_back(baseline_bytes);

    if (spec.kind == WorkloadSpec::Kind::PlantedNeedle) {
      if (auto id = engine.store().block_index().find(needle_first)) {
        if (std::find(report.fetched_blocks.begin(),
                      report.fetched_blocks.end(),
                      *id) != report.fetched_blocks.end())
          ++needle_hits;
      }
    }
    record.steps.push_back(std::move(report));
  }

  record.summary = aggregate_run(record.timelines, ledger);

  double err_sum = 0.0;
  for (double e : record.step_oracle_errors) err_sum += e;
  record.oracle_error =
      record.step_oracle_errors.empty()
          ? 0.0
          : err_sum / static_cast<double>(record.step_oracle_errors.size());
  if (spec.kind == WorkloadSpec::Kind::PlantedNeedle && !stream.decode.empty())
    record.needle_recall = static_cast<double>(needle_hits) /
                           static_cast<double>(stream.decode.size());
  return record;
}

std::vector<RunRecord> run_sweep(const RunConfig& base,
                                 const WorkloadSpec& base_spec,
                                 const SweepGrid& grid) {
  auto or_default = [](auto values, auto fallback) {
    if (values.empty()) values.push_back(fallback);
    return values;
  };
  const auto contexts =
      or_default(grid.context_lengths, base_spec.context_length);
  const auto blocks = or_default(grid.block_sizes, base.tier.block_size);
  const auto kbits = or_default(grid.key_bits, base.tier.key_bits);
  const auto vbits = or_default(grid.value_bits, base.tier.value_bits);
  const auto fracs =
      or_default(grid.fetch_fractions, base.policy.fetch_fraction);

  std::vector<RunRecord> records;
  for (std::size_t ctx : contexts) {
    for (std::size_t blk : blocks) {
      for (unsigned kb : kbits) {
        for (unsigned vb : vbits) {
          for (double frac : fracs) {
            RunConfig cfg = base;
            cfg.tier.block_size = blk;
            cfg.tier.key_bits = kb;
            cfg.tier.value_bits = vb;
            cfg.policy.fetch_fraction = frac;
            WorkloadSpec spec = base_spec;
            spec.context_length = ctx;
            records.push_back(run_benchmark(cfg, spec));
          }
        }
      }
    }
  }
  return records;
}

std::vector<RunRecord> run_ablation(const RunConfig& base,
                                    const WorkloadSpec& spec) {
  std::vector<RunRecord> records;
  for (Baseline b : {Baseline::Fp16FullFetch, Baseline::SingleTier,
                     Baseline::UniformQuant88, Baseline::NoPipeline,
                     Baseline::Ttkv}) {
    RunConfig cfg = base;
    cfg.baseline = b;
    records.push_back(run_benchmark(cfg, spec));
  }
  return records;
}

namespace {

void write_csv(std::ostream& os, const std::vector<RunRecord>& records) {
  os << "method,context_length,block_size,key_bits,value_bits,fetch_fraction,"
        "h2g_bytes,traffic_reduction,p95_latency_model,throughput_model,"
        "oracle_error,needle_recall\n";
  for (const RunRecord& r : records) {
    os << r.method << ',' << r.spec.context_length << ','
       << r.effective_tier.block_size << ',' << r.effective_tier.key_bits
       << ',' << r.effective_tier.value_bits << ','
       << fmt(r.effective_policy.fetch_fraction) << ','
       << fmt(r.summary.total_h2g_bytes) << ','
       << fmt(r.summary.traffic_reduction_vs_baseline) << ','
       << fmt(r.summary.p95_latency) << ','
       << fmt(r.summary.tokens_per_second) << ',' << fmt(r.oracle_error)
       << ',' << (r.needle_recall < 0 ? std::string()
                                      : fmt(r.needle_recall))
       << '\n';
  }
}

void write_json(std::ostream& os, const std::vector<RunRecord>& records) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const RunRecord& r : records) {
    nlohmann::ordered_json row;
    row["method"] = r.method;
    row["context_length"] = r.spec.context_length;
    row["block_size"] = r.effective_tier.block_size;
    row["key_bits"] = r.effective_tier.key_bits;
    row["value_bits"] = r.effective_tier.value_bits;
    row["fetch_fraction"] = r.effective_policy.fetch_fraction;
    row["h2g_bytes"] = r.summary.total_h2g_bytes;
    row["traffic_reduction"] = r.summary.traffic_reduction_vs_baseline;
    row["p95_latency_model"] = r.summary.p95_latency;
    row["throughput_model"] = r.summary.tokens_per_second;
    row["oracle_error"] = r.oracle_error;
    if (r.needle_recall >= 0)
      row["needle_recall"] = r.needle_recall;
    else
      row["needle_recall"] = nullptr;
    rows.push_back(std::move(row));
  }
  os << rows.dump(2) << '\n';
}

}  // namespace

void write_report(std::ostream& os, const std::vector<RunRecord>& records,
                  ReportFormat format) {
  if (records.empty()) throw Error("write_report: no run records");
  if (format == ReportFormat::Csv)
    write_csv(os, records);
  else
    write_json(os, records);
}

void write_step_records(std::ostream& os, const RunRecord& record) {
  os << "step,latency_model,bytes_transferred,blocks_scored,blocks_fetched,"
        "eviction,oracle_error\n";
  for (std::size_t i = 0; i < record.steps.size(); ++i) {
    const DecodeStepReport& s = record.steps[i];
    os << i << ',' << fmt(record.timelines[i].total_latency) << ','
       << fmt(s.bytes_transferred) << ',' << s.blocks_scored << ','
       << s.blocks_fetched << ',' << (s.eviction_occurred ? 1 : 0) << ','
       << fmt(record.step_oracle_errors[i]) << '\n';
  }
}

void write_run_timelines(std::ostream& os, const RunRecord& record) {
  for (std::size_t i = 0; i < record.timelines.size(); ++i) {
    for (const TimelineEvent& e : record.timelines[i].events) {
      os << i << '\t'
         << (e.lane == TimelineEvent::Lane::Transfer ? "transfer" : "compute")
         << '\t' << e.label << '\t' << fmt(e.start) << '\t' << fmt(e.finish)
         << '\n';
    }
  }
}

void emit_report(const std::vector<RunRecord>& records,
                 const std::filesystem::path& out_dir, ReportFormat format) {
  if (records.empty()) throw Error("emit_report: no run records");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string());

  const auto report_path =
      out_dir / (format == ReportFormat::Csv ? "report.csv" : "report.json");
  std::ofstream os(report_path);
  if (!os) throw IoError("cannot write " + report_path.string());
  write_report(os, records, format);

  for (std::size_t i = 0; i < records.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "steps-%03zu.csv", i);
    std::ofstream ss(out_dir / name);
    if (!ss) throw IoError("cannot write step records in " + out_dir.string());
    write_step_records(ss, records[i]);
  }
}

std::map<std::string, std::string> parse_config_file(
    const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file " + path.string());
  std::map<std::string, std::string> values;
  std::string line;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": expected key = value");
    values[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return values;
}

void apply_config_values(const std::map<std::string, std::string>& values,
                         RunConfig& config, WorkloadSpec& spec) {
  for (const auto& [key, value] : values) {
    try {
      if (key == "seed") spec.seed = std::stoull(value);
      else if (key == "context_length") spec.context_length = std::stoull(value);
      else if (key == "decode_steps") spec.decode_steps = std::stoull(value);
      else if (key == "d_k") spec.d_k = std::stoull(value);
      else if (key == "d_v") spec.d_v = std::stoull(value);
      else if (key == "workload") {
        if (value == "gaussian") spec.kind = WorkloadSpec::Kind::Gaussian;
        else if (value == "planted_needle")
          spec.kind = WorkloadSpec::Kind::PlantedNeedle;
        else throw ConfigError("unknown workload kind: " + value);
      }
      else if (key == "needle_block_position")
        spec.needle_block_position = std::stoull(value);
      else if (key == "needle_alignment_strength")
        spec.needle_alignment_strength = std::stod(value);
      else if (key == "hbm_budget_bytes")
        config.tier.hbm_budget_bytes = std::stoull(value);
      else if (key == "block_size") config.tier.block_size = std::stoull(value);
      else if (key == "key_bits")
        config.tier.key_bits = static_cast<unsigned>(std::stoul(value));
      else if (key == "value_bits")
        config.tier.value_bits = static_cast<unsigned>(std::stoul(value));
      else if (key == "bytes_full_precision")
        config.tier.bytes_full_precision = std::stoull(value);
      else if (key == "fetch_fraction") {
        config.tier.fetch_fraction = std::stod(value);
        config.policy.fetch_fraction = std::stod(value);
      }
      else if (key == "top_k_blocks") {
        config.tier.top_k_blocks = std::stoull(value);
        config.policy.top_k = std::stoull(value);
      }
      else if (key == "hbm_bandwidth") config.tier.hbm_bandwidth = std::stod(value);
      else if (key == "pcie_bandwidth")
        config.tier.pcie_bandwidth = std::stod(value);
      else if (key == "transfer_latency")
        config.tier.transfer_latency = std::stod(value);
      else if (key == "compute_rate") config.tier.compute_rate = std::stod(value);
      else if (key == "baseline") {
        const auto b = baseline_from_name(value);
        if (!b) throw ConfigError("unknown baseline: " + value);
        config.baseline = *b;
      }
      else if (key == "format") {
        if (value == "csv") config.format = ReportFormat::Csv;
        else if (value == "json") config.format = ReportFormat::Json;
        else throw ConfigError("unknown format: " + value);
      }
      else if (key == "out_dir") config.out_dir = value;
      else if (key == "literal_merge")
        config.literal_merge = (value == "1" || value == "true");
      else throw ConfigError("unknown config key: " + key);
    } catch (const std::invalid_argument&) {
      throw ConfigError("bad value for " + key + ": " + value);
    } catch (const std::out_of_range&) {
      throw ConfigError("value out of range for " + key + ": " + value);
    }
  }
}

}  // namespace ttkv

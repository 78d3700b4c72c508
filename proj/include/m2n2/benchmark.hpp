#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "m2n2/eval.hpp"
#include "m2n2/markov.hpp"
#include "m2n2/segmenter.hpp"
#include "m2n2/synthetic.hpp"

namespace m2n2 {

/// One row of <dataset>/manifest.csv. Paths are relative to the dataset dir.
struct DatasetEntry {
  std::string instance_id;
  std::filesystem::path image;
  std::filesystem::path mask;
  std::filesystem::path attention;
};

inline constexpr const char* kManifestName = "manifest.csv";

std::vector<DatasetEntry> read_manifest(const std::filesystem::path& dataset_dir);
void write_manifest(const std::filesystem::path& dataset_dir, const std::vector<DatasetEntry>& entries);

struct BenchmarkReport {
  std::string method;
  EvalConfig config;
  std::vector<InstanceResult> instances;
  std::vector<double> mean_noc;        // per target, over evaluated instances
  std::vector<double> miou_per_click;  // click 1 .. max_clicks
  int failures = 0;

  std::size_t evaluated() const noexcept { return instances.size() - static_cast<std::size_t>(failures); }
};

using ProgressLog = std::function<void(const std::string&)>;

BenchmarkReport run_benchmark(const std::filesystem::path& dataset_dir, MapMethod method, const EvalConfig& config,
                              const MarkovParams& params = {}, const ProgressLog& log = {});

/// Recomputes the aggregates from report.instances.
void summarize(BenchmarkReport& report);

/// Writes <out> (per-instance CSV) plus <stem>.summary.txt,
/// <stem>.noc_hist.csv and <stem>.miou.csv next to it.
void write_report(const BenchmarkReport& report, const std::filesystem::path& out_csv);
void print_table(const BenchmarkReport& report, std::ostream& os);

std::string method_name(MapMethod method);
MapMethod parse_method(const std::string& name);

/// Converts a DAVIS-style directory (img/*.jpg|png, gt/*.png with the same
/// stem) into the manifest layout. Attention files are expected under
/// attention/<stem>.atn1 and have to be produced by the exporter.
std::size_t import_davis(const std::filesystem::path& src, const std::filesystem::path& dst);

/// Writes `worlds` synthetic worlds as a dataset, one instance per object.
std::size_t write_synthetic_dataset(const std::filesystem::path& dst, int worlds, std::uint64_t seed,
                                    const WorldOptions& options = {});

}  // namespace m2n2

#include "m2n2/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>

#include "m2n2/error.hpp"
#include "m2n2/image_io.hpp"
#include "m2n2/tensor_io.hpp"

namespace m2n2 {
namespace fs = std::filesystem;
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

int percent(double v) { return static_cast<int>(std::lround(v * 100.0)); }

}  // namespace

std::vector<DatasetEntry> read_manifest(const fs::path& dataset_dir) {
  const fs::path path = dataset_dir / kManifestName;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty manifest " + path.string());
  const auto header = split_csv(line);
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw FormatError("manifest lacks column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_id = column("instance_id");
  const std::size_t c_image = column("image");
  const std::size_t c_mask = column("mask");
  const std::size_t c_attn = column("attention");
  std::vector<DatasetEntry> entries;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() < header.size())
      throw FormatError("manifest line " + std::to_string(line_no) + " has too few columns");
    entries.push_back({cells[c_id], cells[c_image], cells[c_mask], cells[c_attn]});
  }
  return entries;
}

void write_manifest(const fs::path& dataset_dir, const std::vector<DatasetEntry>& entries) {
  std::ofstream out(dataset_dir / kManifestName, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest in " + dataset_dir.string());
  out << "instance_id,image,mask,attention\n";
  for (const auto& e : entries)
    out << e.instance_id << ',' << e.image.generic_string() << ',' << e.mask.generic_string() << ','
        << e.attention.generic_string() << '\n';
}

std::string method_name(MapMethod method) {
  switch (method) {
    case MapMethod::m2n2: return "m2n2";
    case MapMethod::attention_nn: return "attention-nn";
    case MapMethod::kl_nn: return "kl-nn";
  }
  return "unknown";
}

MapMethod parse_method(const std::string& name) {
  for (MapMethod m : {MapMethod::m2n2, MapMethod::attention_nn, MapMethod::kl_nn}) {
    if (method_name(m) == name) return m;
  }
  throw ValidationError("unknown method '" + name + "' (expected m2n2, attention-nn or kl-nn)");
}

void summarize(BenchmarkReport& report) {
  const std::size_t targets = report.config.iou_targets.size();
  const auto clicks = static_cast<std::size_t>(report.config.max_clicks);
  report.mean_noc.assign(targets, 0.0);
  report.miou_per_click.assign(clicks, 0.0);
  report.failures = 0;
  std::size_t ok = 0;
  for (const auto& r : report.instances) {
    if (r.error) {
      ++report.failures;
      continue;
    }
    ++ok;
    for (std::size_t t = 0; t < targets; ++t) report.mean_noc[t] += r.noc[t];
    for (std::size_t c = 0; c < clicks && c < r.ious.size(); ++c) report.miou_per_click[c] += r.ious[c];
  }
  if (ok > 0) {
    for (double& v : report.mean_noc) v /= static_cast<double>(ok);
    for (double& v : report.miou_per_click) v /= static_cast<double>(ok);
  }
}

BenchmarkReport run_benchmark(const fs::path& dataset_dir, MapMethod method, const EvalConfig& config,
                              const MarkovParams& params, const ProgressLog& log) {
  config.validate();
  params.validate();
  BenchmarkReport report;
  report.method = method_name(method);
  report.config = config;

  const auto entries = read_manifest(dataset_dir);
  // instances of one image share the prepared operator
  std::map<std::pair<fs::path, fs::path>, std::unique_ptr<SessionContext>> contexts;
  SegmenterOptions options;
  options.method = method;

  for (const auto& entry : entries) {
    InstanceResult failed;
    failed.id = entry.instance_id;
    try {
      const auto key = std::make_pair(entry.image, entry.attention);
      auto it = contexts.find(key);
      if (it == contexts.end()) {
        contexts.clear();
        GuideImage guide = to_guide(read_image(dataset_dir / entry.image, 3));
        const AttentionStack stack = read_attention_file(dataset_dir / entry.attention);
        it = contexts
                 .emplace(key, std::make_unique<SessionContext>(
                                   SessionContext::build(std::move(guide), stack, params, options)))
                 .first;
      }
      SessionContext& ctx = *it->second;
      ctx.clear_points();
      InstanceRecord record{entry.instance_id, mask_from_image(read_image(dataset_dir / entry.mask, 1))};
      if (record.gt.height() != ctx.height() || record.gt.width() != ctx.width())
        throw ValidationError("mask size differs from image size");
      InstanceResult result = simulate_instance(record, session_callback(ctx), config);
      if (log) {
        std::ostringstream msg;
        msg << entry.instance_id;
        if (result.error) {
          msg << ": error: " << *result.error;
        } else {
          for (std::size_t t = 0; t < config.iou_targets.size(); ++t)
            msg << " NoC" << percent(config.iou_targets[t]) << "=" << result.noc[t];
        }
        log(msg.str());
      }
      report.instances.push_back(std::move(result));
    } catch (const std::exception& e) {
      failed.error = e.what();
      if (log) log(entry.instance_id + ": skipped: " + e.what());
      report.instances.push_back(std::move(failed));
    }
  }
  summarize(report);
  return report;
}

void print_table(const BenchmarkReport& report, std::ostream& os) {
  os << "method: " << report.method << "  instances: " << report.instances.size()
     << "  evaluated: " << report.evaluated() << "  failed: " << report.failures << '\n';
  os << std::fixed << std::setprecision(2);
  for (std::size_t t = 0; t < report.config.iou_targets.size(); ++t)
    os << "  NoC" << percent(report.config.iou_targets[t]) << ": " << report.mean_noc[t] << '\n';
  os << "  mIoU per click:";
  for (std::size_t c = 0; c < report.miou_per_click.size(); ++c) {
    if (c % 10 == 0) os << "\n   ";
    os << ' ' << std::setw(5) << report.miou_per_click[c];
  }
  os << '\n';
  os.unsetf(std::ios::floatfield);
}

void write_report(const BenchmarkReport& report, const fs::path& out_csv) {
  const auto& cfg = report.config;
  {
    std::ofstream out(out_csv, std::ios::trunc);
    if (!out) throw IoError("cannot write " + out_csv.string());
    out << "instance_id,status";
    for (double t : cfg.iou_targets) out << ",noc" << percent(t);
    for (int c = 1; c <= cfg.max_clicks; ++c) out << ",iou_" << c;
    out << '\n';
    out << std::setprecision(6);
    for (const auto& r : report.instances) {
      out << r.id << ',' << (r.error ? "error" : "ok");
      for (std::size_t t = 0; t < cfg.iou_targets.size(); ++t) out << ',' << (r.error ? 0 : r.noc[t]);
      for (int c = 0; c < cfg.max_clicks; ++c)
        out << ',' << (static_cast<std::size_t>(c) < r.ious.size() ? r.ious[static_cast<std::size_t>(c)] : 0.0);
      out << '\n';
    }
  }
  const fs::path stem = out_csv.parent_path() / out_csv.stem();
  {
    std::ofstream out(stem.string() + ".summary.txt", std::ios::trunc);
    print_table(report, out);
    for (const auto& r : report.instances)
      if (r.error) out << "failed " << r.id << ": " << *r.error << '\n';
  }
  {
    std::ofstream out(stem.string() + ".noc_hist.csv", std::ios::trunc);
    out << "noc";
    for (double t : cfg.iou_targets) out << ",count_noc" << percent(t);
    out << '\n';
    for (int n = 1; n <= cfg.max_clicks; ++n) {
      out << n;
      for (std::size_t t = 0; t < cfg.iou_targets.size(); ++t) {
        const auto count = std::count_if(report.instances.begin(), report.instances.end(),
                                         [&](const InstanceResult& r) { return !r.error && r.noc[t] == n; });
        out << ',' << count;
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(stem.string() + ".miou.csv", std::ios::trunc);
    out << "click,miou\n" << std::setprecision(6);
    for (std::size_t c = 0; c < report.miou_per_click.size(); ++c)
      out << c + 1 << ',' << report.miou_per_click[c] << '\n';
  }
}

std::size_t import_davis(const fs::path& src, const fs::path& dst) {
  const fs::path img_dir = src / "img";
  const fs::path gt_dir = src / "gt";
  if (!fs::is_directory(img_dir) || !fs::is_directory(gt_dir))
    throw IoError("expected img/ and gt/ directories under " + src.string());
  fs::create_directories(dst / "images");
  fs::create_directories(dst / "masks");
  fs::create_directories(dst / "attention");

  std::vector<fs::path> images;
  for (const auto& e : fs::directory_iterator(img_dir)) {
    if (e.is_regular_file()) images.push_back(e.path());
  }
  std::sort(images.begin(), images.end());
  std::vector<DatasetEntry> entries;
  for (const auto& image_path : images) {
    const std::string stem = image_path.stem().string();
    const fs::path gt_path = gt_dir / (stem + ".png");
    if (!fs::exists(gt_path)) continue;
    const Image8 rgb = read_image(image_path, 3);
    const Image8 gray = read_image(gt_path, 1);
    if (rgb.height != gray.height || rgb.width != gray.width)
      throw ValidationError("image and mask size differ for " + stem);
    Mask mask(gray.height, gray.width, 0);
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = gray.data[i] > 127 ? 1 : 0;
    write_png(rgb, dst / "images" / (stem + ".png"));
    write_png(mask_to_image(mask), dst / "masks" / (stem + ".png"));
    entries.push_back({stem, fs::path("images") / (stem + ".png"), fs::path("masks") / (stem + ".png"),
                       fs::path("attention") / (stem + ".atn1")});
  }
  write_manifest(dst, entries);
  return entries.size();
}

std::size_t write_synthetic_dataset(const fs::path& dst, int worlds, std::uint64_t seed, const WorldOptions& options) {
  fs::create_directories(dst / "images");
  fs::create_directories(dst / "masks");
  fs::create_directories(dst / "attention");
  std::vector<DatasetEntry> entries;
  for (int w = 0; w < worlds; ++w) {
    const SyntheticWorld world = make_world(seed + static_cast<std::uint64_t>(w), options);
    const std::string name = "world" + std::to_string(w);
    write_png(from_guide(world.image), dst / "images" / (name + ".png"));
    write_attention_file(world.stack, dst / "attention" / (name + ".atn1"));
    for (std::size_t k = 0; k < world.objects.size(); ++k) {
      const std::string id = name + "_obj" + std::to_string(k + 1);
      write_png(mask_to_image(world.objects[k]), dst / "masks" / (id + ".png"));
      entries.push_back({id, fs::path("images") / (name + ".png"), fs::path("masks") / (id + ".png"),
                         fs::path("attention") / (name + ".atn1")});
    }
  }
  write_manifest(dst, entries);
  return entries.size();
}

}  // namespace m2n2

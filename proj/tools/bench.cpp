#include <CLI11.hpp>
#include <iostream>

#include "m2n2/benchmark.hpp"
#include "m2n2/kernels.hpp"

using namespace m2n2;

int main(int argc, char** argv) {
  CLI::App app{"NoC benchmark for interactive segmentation"};
  app.require_subcommand(1);

  std::string dataset;
  std::string method = "m2n2";
  int max_clicks = 20;
  std::vector<double> targets{0.85, 0.90};
  std::string out = "report.csv";
  std::string backend;
  auto* run = app.add_subcommand("run", "simulate clicks over a dataset and report NoC");
  run->add_option("--dataset", dataset, "directory with manifest.csv")->required();
  run->add_option("--method", method, "m2n2 | attention-nn | kl-nn");
  run->add_option("--max-clicks", max_clicks);
  run->add_option("--targets", targets)->delimiter(',');
  run->add_option("--out", out);
  run->add_option("--kernels", backend, "scalar | avx2 | neon");

  std::string src;
  std::string dst;
  auto* davis = app.add_subcommand("import-davis", "convert a DAVIS-style folder to the manifest layout");
  davis->add_option("src", src)->required();
  davis->add_option("dst", dst)->required();

  int worlds = 50;
  std::uint64_t seed = 1;
  std::string synth_dst;
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset with matching attention");
  synth->add_option("--worlds", worlds);
  synth->add_option("--seed", seed);
  synth->add_option("--out", synth_dst)->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) {
      if (!backend.empty()) {
        const auto b = kernels::parse_backend(backend);
        if (!b) throw std::invalid_argument("unknown kernel variant '" + backend + "'");
        kernels::set_backend(*b);
      }
      EvalConfig config;
      config.max_clicks = max_clicks;
      config.iou_targets = targets;
      config.validate();
      auto report = run_benchmark(dataset, parse_method(method), config, {},
                                  [](const std::string& line) { std::cerr << line << "\n"; });
      write_report(report, out);
      print_table(report, std::cout);
      if (report.failures) return 1;
    } else if (*davis) {
      std::cout << import_davis(src, dst) << " instances imported\n";
    } else if (*synth) {
      std::cout << write_synthetic_dataset(synth_dst, worlds, seed) << " instances written\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "bench: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

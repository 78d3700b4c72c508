#include <httplib.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "m2n2/error.hpp"
#include "m2n2/image_io.hpp"
#include "m2n2/kernels.hpp"
#include "m2n2/segmenter.hpp"
#include "m2n2/service.hpp"
#include "m2n2/synthetic.hpp"
#include "m2n2/tensor_io.hpp"

namespace fs = std::filesystem;
using namespace m2n2;

namespace {

std::vector<std::pair<Pixel, Label>> parse_clicks(const std::string& text) {
  std::vector<std::pair<Pixel, Label>> clicks;
  std::stringstream all(text);
  std::string item;
  while (std::getline(all, item, ';')) {
    if (item.empty()) continue;
    std::stringstream parts(item);
    std::string x, y, label;
    if (!std::getline(parts, x, ',') || !std::getline(parts, y, ',') || !std::getline(parts, label, ','))
      throw ValidationError("click '" + item + "' is not x,y,fg|bg");
    Label l;
    if (label == "fg" || label == "1") l = Label::foreground;
    else if (label == "bg" || label == "0") l = Label::background;
    else throw ValidationError("click label '" + label + "' is not fg or bg");
    clicks.push_back({{std::stoi(x), std::stoi(y)}, l});
  }
  return clicks;
}

struct Inputs {
  std::string image;
  std::string attn;
  std::string method = "m2n2";
  std::uint64_t demo_seed = 0;
  bool demo = false;
  std::string backend;
};

void add_input_options(CLI::App* cmd, Inputs& in) {
  cmd->add_option("--image", in.image, "RGB image (PNG or JPEG)");
  cmd->add_option("--attn", in.attn, "attention tensor (.atn1)");
  cmd->add_option("--method", in.method, "m2n2 | attention-nn | kl-nn");
  cmd->add_option("--demo", in.demo_seed, "use a synthetic world with this seed instead of --image/--attn")
      ->each([&in](const std::string&) { in.demo = true; });
}

SessionContext load_context(const Inputs& in) {
  SegmenterOptions options;
  if (in.method == "m2n2") options.method = MapMethod::m2n2;
  else if (in.method == "attention-nn") options.method = MapMethod::attention_nn;
  else if (in.method == "kl-nn") options.method = MapMethod::kl_nn;
  else throw ValidationError("unknown method '" + in.method + "'");
  if (in.demo) {
    WorldOptions wo;
    wo.scale = 8;
    SyntheticWorld world = make_world(in.demo_seed, wo);
    return SessionContext::build(std::move(world.image), world.stack, {}, options);
  }
  if (in.image.empty() || in.attn.empty()) throw ValidationError("--image and --attn are required");
  return SessionContext::build(to_guide(read_image(in.image)), read_attention_file(in.attn), {}, options);
}

void apply_clicks(SessionContext& ctx, const std::string& clicks) {
  for (const auto& [p, label] : parse_clicks(clicks)) {
    if (p.x < 0 || p.y < 0 || p.x >= ctx.width() || p.y >= ctx.height())
      throw ValidationError("click (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ") is outside the image");
    ctx.add_point(p.x, p.y, label);
  }
}

Image8 upscale(const Image8& img, int height, int width) { return resize_nearest(img, height, width); }

int run_serve(int port, const std::string& host, int ttl, std::size_t max_mb) {
  service::ServiceOptions options;
  options.session_ttl = std::chrono::seconds(ttl);
  options.max_payload_bytes = max_mb << 20;
  service::SessionStore store(options);
  httplib::Server server;
  service::mount(server, store);
  std::cerr << "m2n2: listening on " << host << ":" << port << " (kernels: "
            << kernels::backend_name(kernels::active_backend()) << ")\n";
  if (!server.listen(host, port)) {
    std::cerr << "m2n2: cannot listen on " << host << ":" << port << "\n";
    return 1;
  }
  return 0;
}

int run_segment(const Inputs& in, const std::string& clicks, const std::string& out) {
  SessionContext ctx = load_context(in);
  apply_clicks(ctx, clicks);
  const Segmentation seg = ctx.segment();
  if (const auto parent = fs::path(out).parent_path(); !parent.empty()) fs::create_directories(parent);
  write_png(mask_to_image(seg.mask), out);
  for (const auto& [id, lambda] : seg.per_point_lambda) std::cout << "point " << id << " lambda " << lambda << "\n";
  return 0;
}

int run_diagnostics(const Inputs& in, const std::string& clicks, const fs::path& out_dir, std::vector<int> steps) {
  SessionContext ctx = load_context(in);
  apply_clicks(ctx, clicks);
  fs::create_directories(out_dir);
  const auto& points = ctx.points();
  const int H = ctx.height();
  const int W = ctx.width();
  const std::set<int> wanted(steps.begin(), steps.end());

  if (ctx.options().method == MapMethod::m2n2) {
    const auto& m = ctx.matrix();
    for (const auto& p : points) {
      const std::size_t cell = ctx.cell_of(p.pixel());
      const std::string tag = "p" + std::to_string(p.id);
      markov_map(m, cell, ctx.params(), [&](int t, std::span<const double> state, const MarkovGrid& partial) {
        if (!wanted.count(t)) return;
        FloatMap pt(static_cast<int>(m.h), static_cast<int>(m.w));
        double peak = 0.0;
        for (double v : state) peak = std::max(peak, v);
        for (std::size_t k = 0; k < state.size(); ++k)
          pt[k] = static_cast<float>(peak > 0 ? state[k] / peak : 0.0);
        write_png(upscale(float_to_gray(pt, 0.0f, 1.0f), H, W),
                  out_dir / (tag + "_state_t" + std::to_string(t) + ".png"));
        FloatMap known(static_cast<int>(m.h), static_cast<int>(m.w));
        for (std::size_t k = 0; k < partial.values.size(); ++k)
          known[k] = partial.saturated[k] ? partial.values[k] : static_cast<float>(t);
        write_png(upscale(float_to_gray(known, 0.0f, static_cast<float>(std::max(t, 1))), H, W),
                  out_dir / (tag + "_map_t" + std::to_string(t) + ".png"));
      });
    }
  }

  for (const auto& p : points) {
    const std::string tag = "p" + std::to_string(p.id);
    const PointMap& pm = ctx.compute_point_map(p);
    const auto curve = score_curve(pm, points, p.id);
    const double lambda = select_lambda(curve);
    std::ofstream csv(out_dir / (tag + "_scores.csv"));
    csv << "lambda,s_prior,s_edge,s_pos,s_neg,total\n";
    for (const auto& s : curve)
      csv << s.lambda << ',' << s.s_prior << ',' << s.s_edge << ',' << s.s_pos << ',' << s.s_neg << ',' << s.total
          << '\n';
    write_png(float_to_gray(pm.map, 0.0f, 1.0f), out_dir / (tag + "_map.png"));
    Mask segment(H, W);
    for (std::size_t q = 0; q < segment.size(); ++q) segment[q] = pm.map[q] <= lambda ? 1 : 0;
    write_png(mask_to_image(segment), out_dir / (tag + "_segment.png"));
    std::cout << tag << " (" << p.x << ", " << p.y << ", " << (p.label == Label::foreground ? "fg" : "bg")
              << ") lambda " << lambda << "\n";
  }
  write_png(mask_to_image(ctx.segment().mask), out_dir / "mask.png");
  write_png(from_guide(ctx.guide()), out_dir / "image.png");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training-free interactive point-prompt segmentation"};
  app.require_subcommand(1);
  std::string backend;
  app.add_option("--kernels", backend, "force a kernel variant: scalar | avx2 | neon");

  int port = 8080;
  int ttl = 1800;
  std::size_t max_mb = 1024;
  std::string host = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "run the HTTP session service");
  serve->add_option("--port", port);
  serve->add_option("--host", host);
  serve->add_option("--ttl", ttl, "session idle timeout in seconds");
  serve->add_option("--max-upload-mb", max_mb);

  Inputs seg_in;
  std::string seg_clicks;
  std::string seg_out;
  auto* segment = app.add_subcommand("segment", "segment an image from a list of clicks");
  add_input_options(segment, seg_in);
  segment->add_option("--clicks", seg_clicks, "x,y,fg|bg;...")->required();
  segment->add_option("--out", seg_out, "output mask PNG")->required();

  Inputs diag_in;
  std::string diag_clicks;
  std::string diag_out;
  std::vector<int> steps{1, 2, 3, 5, 10, 20};
  auto* diag = app.add_subcommand("export-diagnostics", "dump chain snapshots, score curves and previews");
  add_input_options(diag, diag_in);
  diag->add_option("--clicks", diag_clicks, "x,y,fg|bg;...")->required();
  diag->add_option("--out-dir", diag_out)->required();
  diag->add_option("--steps", steps, "chain steps to snapshot")->delimiter(',');

  CLI11_PARSE(app, argc, argv);
  try {
    if (!backend.empty()) {
      const auto b = kernels::parse_backend(backend);
      if (!b) throw ValidationError("unknown kernel variant '" + backend + "'");
      kernels::set_backend(*b);
    }
    if (*serve) return run_serve(port, host, ttl, max_mb);
    if (*segment) return run_segment(seg_in, seg_clicks, seg_out);
    if (*diag) return run_diagnostics(diag_in, diag_clicks, diag_out, steps);
  } catch (const std::exception& e) {
    std::cerr << "m2n2: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

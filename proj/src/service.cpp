#include "m2n2/service.hpp"

#include <httplib.h>

#include <iomanip>
#include <json.hpp>
#include <random>
#include <sstream>

#include "m2n2/error.hpp"
#include "m2n2/image_io.hpp"
#include "m2n2/rle.hpp"
#include "m2n2/synthetic.hpp"
#include "m2n2/tensor_io.hpp"

namespace m2n2::service {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

const char* label_name(Label l) { return l == Label::foreground ? "fg" : "bg"; }

Label parse_label(const json& v) {
  if (v.is_number_integer()) {
    const int i = v.get<int>();
    if (i == 0 || i == 1) return static_cast<Label>(i);
  } else if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "fg" || s == "foreground" || s == "1") return Label::foreground;
    if (s == "bg" || s == "background" || s == "0") return Label::background;
  }
  throw HttpError(400, "label must be fg/bg (or 1/0)");
}

json points_json(const std::vector<PromptPoint>& points) {
  json arr = json::array();
  for (const auto& p : points) arr.push_back({{"id", p.id}, {"x", p.x}, {"y", p.y}, {"label", label_name(p.label)}});
  return arr;
}

json mask_json(const Mask& mask) {
  return {{"height", mask.height()},
          {"width", mask.width()},
          {"encoding", "rle-row-major-zero-first"},
          {"rle", rle_encode(mask)},
          {"hash", hex64(mask_hash(mask))}};
}

json state_json(const SessionStore::Session& s) {
  json lambdas = json::array();
  for (const auto& [id, lambda] : s.current.per_point_lambda) lambdas.push_back({{"id", id}, {"lambda", lambda}});
  return {{"points", points_json(s.ctx.points())},
          {"mask", mask_json(s.current.mask)},
          {"lambdas", lambdas},
          {"cache_size", s.ctx.cache_size()}};
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

Mask current_mask(SessionStore::Session& s) {
  if (s.current.mask.empty()) s.current = s.ctx.segment();
  return s.current.mask;
}

SyntheticSpec parse_synthetic(const json& j) {
  SyntheticSpec spec;
  spec.h = j.at("h").get<std::uint32_t>();
  spec.w = j.at("w").get<std::uint32_t>();
  spec.partition = j.at("partition").get<std::vector<int>>();
  spec.in_region_mass = j.value("in_region_mass", 0.8);
  spec.noise_seed = j.value("noise_seed", std::uint64_t{0});
  spec.noise_amplitude = j.value("noise_amplitude", 0.0);
  return spec;
}

const httplib::MultipartFormData* field(const httplib::Request& req, const char* name) {
  const auto it = req.files.find(name);
  return it == req.files.end() ? nullptr : &it->second;
}

/// Runs `body`, mapping library errors onto HTTP statuses.
template <class F>
void guarded(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const HttpError& e) {
    send_json(res, e.status(), {{"error", e.what()}});
  } catch (const StateError& e) {
    send_json(res, 409, {{"error", e.what()}});
  } catch (const json::exception& e) {
    send_json(res, 400, {{"error", std::string("malformed JSON: ") + e.what()}});
  } catch (const FormatError& e) {
    send_json(res, 422, {{"error", e.what()}});
  } catch (const CorruptionError& e) {
    send_json(res, 422, {{"error", e.what()}});
  } catch (const ValidationError& e) {
    send_json(res, 422, {{"error", e.what()}});
  } catch (const std::exception& e) {
    send_json(res, 500, {{"error", e.what()}});
  }
}

}  // namespace

std::uint64_t mask_hash(const Mask& mask) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](std::uint8_t b) {
    h ^= b;
    h *= 1099511628211ULL;
  };
  for (int shift = 0; shift < 32; shift += 8) mix(static_cast<std::uint8_t>(mask.height() >> shift));
  for (int shift = 0; shift < 32; shift += 8) mix(static_cast<std::uint8_t>(mask.width() >> shift));
  for (std::uint8_t v : mask.values()) mix(v ? 1 : 0);
  return h;
}

void FifoMutex::lock() {
  std::unique_lock lock(mutex_);
  const std::uint64_t ticket = next_++;
  turn_.wait(lock, [&] { return serving_ == ticket; });
}

void FifoMutex::unlock() {
  {
    std::lock_guard lock(mutex_);
    ++serving_;
  }
  turn_.notify_all();
}

SessionStore::Session::Session(SessionContext c) : ctx(std::move(c)), last_access(Clock::now()) {}

SessionStore::SessionStore(ServiceOptions options) : options_(std::move(options)), salt_(std::random_device{}()) {
  salt_ = (salt_ << 32) ^ std::random_device{}();
}

std::string SessionStore::create(SessionContext ctx) {
  auto session = std::make_shared<Session>(std::move(ctx));
  session->current = session->ctx.segment();
  std::lock_guard lock(mutex_);
  purge_expired_locked();
  if (sessions_.size() >= options_.max_sessions) throw HttpError(503, "session limit reached");
  std::mt19937_64 mix(salt_ ^ ++counter_);
  const std::string id = hex64(mix()) + hex64(counter_).substr(12);
  sessions_.emplace(id, std::move(session));
  return id;
}

std::shared_ptr<SessionStore::Session> SessionStore::get(const std::string& id) {
  std::lock_guard lock(mutex_);
  purge_expired_locked();
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw HttpError(404, "unknown session '" + id + "'");
  it->second->last_access = Clock::now();
  return it->second;
}

bool SessionStore::erase(const std::string& id) {
  std::lock_guard lock(mutex_);
  return sessions_.erase(id) > 0;
}

std::size_t SessionStore::size() {
  std::lock_guard lock(mutex_);
  purge_expired_locked();
  return sessions_.size();
}

void SessionStore::purge_expired_locked() {
  const auto now = Clock::now();
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (now - it->second->last_access > options_.session_ttl)
      it = sessions_.erase(it);
    else
      ++it;
  }
}

void mount(httplib::Server& server, SessionStore& store) {
  server.set_payload_max_length(store.options().max_payload_bytes);

  server.Get("/healthz", [&store](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}, {"sessions", store.size()}});
  });

  server.Post("/sessions", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.is_multipart_form_data()) throw HttpError(400, "expected multipart/form-data");
      SegmenterOptions options;
      if (const auto* m = field(req, "method")) {
        if (m->content == "m2n2") options.method = MapMethod::m2n2;
        else if (m->content == "attention-nn") options.method = MapMethod::attention_nn;
        else if (m->content == "kl-nn") options.method = MapMethod::kl_nn;
        else throw HttpError(400, "unknown method '" + m->content + "'");
      }
      GuideImage guide;
      AttentionStack stack;
      if (const auto* demo = field(req, "demo")) {
        const json j = demo->content.empty() ? json::object() : json::parse(demo->content);
        WorldOptions wo;
        wo.grid = j.value("grid", wo.grid);
        wo.scale = j.value("scale", 8);
        const SyntheticWorld world = make_world(j.value("seed", std::uint64_t{1}), wo);
        guide = world.image;
        stack = world.stack;
      } else {
        const auto* image = field(req, "image");
        if (!image) throw HttpError(400, "missing 'image' part");
        const std::string& bytes = image->content;
        guide = to_guide(decode_image(
            {reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()}, 3));
        if (const auto* attn = field(req, "attention")) {
          stack = decode_attention(
              {reinterpret_cast<const std::uint8_t*>(attn->content.data()), attn->content.size()});
        } else if (const auto* synth = field(req, "synthetic")) {
          stack = generate_synthetic_stack(parse_synthetic(json::parse(synth->content)));
        } else {
          throw HttpError(400, "missing 'attention' or 'synthetic' part");
        }
      }
      const auto start = Clock::now();
      const std::string id =
          store.create(SessionContext::build(std::move(guide), stack, store.options().params, options));
      auto s = store.get(id);
      std::lock_guard lock(s->mutex);
      send_json(res, 201,
                {{"id", id},
                 {"height", s->ctx.height()},
                 {"width", s->ctx.width()},
                 {"attention", {{"h", s->ctx.matrix().h}, {"w", s->ctx.matrix().w}}},
                 {"method", options.method == MapMethod::m2n2           ? "m2n2"
                            : options.method == MapMethod::attention_nn ? "attention-nn"
                                                                        : "kl-nn"},
                 {"setup_ms", ms_since(start)}});
    });
  });

  server.Post(R"(/sessions/([0-9a-f]+)/clicks)", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto s = store.get(req.matches[1]);
      const json body = json::parse(req.body);
      if (!body.contains("x") || !body.contains("y") || !body.contains("label"))
        throw HttpError(400, "click needs x, y and label");
      if (!body["x"].is_number_integer() || !body["y"].is_number_integer())
        throw HttpError(400, "x and y must be integers");
      const int x = body["x"].get<int>();
      const int y = body["y"].get<int>();
      const Label label = parse_label(body["label"]);
      std::lock_guard lock(s->mutex);
      if (x < 0 || y < 0 || x >= s->ctx.width() || y >= s->ctx.height())
        throw HttpError(400, "click (" + std::to_string(x) + ", " + std::to_string(y) + ") is outside the image");
      const auto start = Clock::now();
      s->ctx.add_point(x, y, label);
      const double map_ms = ms_since(start);
      const auto seg_start = Clock::now();
      s->current = s->ctx.segment();
      json out = state_json(*s);
      out["timing_ms"] = {{"map", map_ms}, {"segment", ms_since(seg_start)}, {"total", ms_since(start)}};
      send_json(res, 200, out);
    });
  });

  server.Post(R"(/sessions/([0-9a-f]+)/undo)", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto s = store.get(req.matches[1]);
      std::lock_guard lock(s->mutex);
      const auto start = Clock::now();
      s->ctx.remove_last_point();
      s->current = s->ctx.segment();
      json out = state_json(*s);
      out["timing_ms"] = {{"total", ms_since(start)}};
      send_json(res, 200, out);
    });
  });

  server.Get(R"(/sessions/([0-9a-f]+))", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto s = store.get(req.matches[1]);
      std::lock_guard lock(s->mutex);
      current_mask(*s);
      send_json(res, 200, state_json(*s));
    });
  });

  server.Delete(R"(/sessions/([0-9a-f]+))", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!store.erase(req.matches[1])) throw HttpError(404, "unknown session");
      res.status = 204;
    });
  });

  server.Get(R"(/sessions/([0-9a-f]+)/mask\.png)", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto s = store.get(req.matches[1]);
      std::lock_guard lock(s->mutex);
      const auto png = encode_png(mask_to_image(current_mask(*s)));
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    });
  });

  server.Get(R"(/sessions/([0-9a-f]+)/image\.png)", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto s = store.get(req.matches[1]);
      std::lock_guard lock(s->mutex);
      const auto png = encode_png(from_guide(s->ctx.guide()));
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    });
  });

  server.Get(R"(/sessions/([0-9a-f]+)/diagnostics)", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto s = store.get(req.matches[1]);
      std::lock_guard lock(s->mutex);
      const auto& points = s->ctx.points();
      json arr = json::array();
      for (const auto& p : points) {
        const auto curve = score_curve(s->ctx.compute_point_map(p), points, p.id);
        json c = json::array();
        for (const auto& sc : curve)
          c.push_back({sc.lambda, sc.s_prior, sc.s_edge, sc.s_pos, sc.s_neg, sc.total});
        arr.push_back({{"id", p.id},
                       {"lambda", select_lambda(curve)},
                       {"columns", {"lambda", "s_prior", "s_edge", "s_pos", "s_neg", "total"}},
                       {"curve", c}});
      }
      send_json(res, 200, {{"points", arr}});
    });
  });
}

}  // namespace m2n2::service

#include "tilecast/config.hpp"

#include <cstdint>
#include <initializer_list>
#include <utility>

#include <json.hpp>

#include "tilecast/partition.hpp"

namespace tilecast {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
}

// Cursor into the document carrying its dotted path for error messages.
struct Node {
  const json* j;
  std::string path;

  void require_object() const {
    if (!j->is_object()) fail(path, "expected an object");
  }

  void check_keys(std::initializer_list<const char*> allowed) const {
    require_object();
    for (auto it = j->begin(); it != j->end(); ++it) {
      bool known = false;
      for (const char* k : allowed)
        if (it.key() == k) {
          known = true;
          break;
        }
      if (!known) fail(path + "." + it.key(), "unknown key");
    }
  }

  bool has(const char* key) const { return j->is_object() && j->contains(key); }

  Node child(const char* key) const {
    require_object();
    if (!j->contains(key)) fail(path + "." + key, "missing required key");
    return {&j->at(key), path + "." + key};
  }

  Node element(size_t i) const { return {&j->at(i), path + "[" + std::to_string(i) + "]"}; }

  size_t length() const {
    if (!j->is_array()) fail(path, "expected an array");
    return j->size();
  }

  double as_number() const {
    if (!j->is_number()) fail(path, "expected a number");
    return j->get<double>();
  }

  int as_integer() const {
    if (!j->is_number_integer()) fail(path, "expected an integer");
    return j->get<int>();
  }

  std::string as_string() const {
    if (!j->is_string()) fail(path, "expected a string");
    return j->get<std::string>();
  }

  double num(const char* key) const { return child(key).as_number(); }
  double num_or(const char* key, double fallback) const {
    return has(key) ? num(key) : fallback;
  }

  int integer(const char* key) const { return child(key).as_integer(); }
  int integer_or(const char* key, int fallback) const {
    return has(key) ? integer(key) : fallback;
  }

  uint64_t u64_or(const char* key, uint64_t fallback) const {
    if (!has(key)) return fallback;
    Node c = child(key);
    if (!c.j->is_number_integer() && !c.j->is_number_unsigned())
      fail(c.path, "expected a nonnegative integer");
    if (c.j->is_number_integer() && c.j->get<int64_t>() < 0)
      fail(c.path, "expected a nonnegative integer");
    return c.j->get<uint64_t>();
  }

  std::string str(const char* key) const { return child(key).as_string(); }

  std::vector<double> num_array(const char* key) const {
    Node c = child(key);
    std::vector<double> out(c.length());
    for (size_t i = 0; i < out.size(); ++i) out[i] = c.element(i).as_number();
    return out;
  }

  std::vector<int> int_array(const char* key) const {
    Node c = child(key);
    std::vector<int> out(c.length());
    for (size_t i = 0; i < out.size(); ++i) out[i] = c.element(i).as_integer();
    return out;
  }
};

VideoConfig parse_video(const Node& n) {
  n.check_keys({"rows", "cols", "levels", "encoding_rates"});
  VideoConfig v;
  v.rows = n.integer("rows");
  v.cols = n.integer("cols");
  v.levels = n.integer("levels");
  v.encoding_rates = n.num_array("encoding_rates");
  return v;
}

std::vector<TileIndex> parse_tiles(const Node& n) {
  std::vector<TileIndex> out(n.length());
  for (size_t i = 0; i < out.size(); ++i) {
    Node e = n.element(i);
    if (!e.j->is_array() || e.j->size() != 2) fail(e.path, "expected a [row, col] pair");
    out[i] = {e.element(0).as_integer(), e.element(1).as_integer()};
  }
  return out;
}

std::vector<UserDemand> parse_demands(const Node& n) {
  std::vector<UserDemand> out(n.length());
  for (size_t i = 0; i < out.size(); ++i) {
    Node e = n.element(i);
    e.check_keys({"user", "quality", "tiles"});
    out[i].user = e.integer("user");
    out[i].quality = e.integer("quality");
    out[i].tiles = parse_tiles(e.child("tiles"));
  }
  return out;
}

UserChannel parse_user_channel(const Node& n) {
  n.check_keys({"gains", "probs"});
  return {n.num_array("gains"), n.num_array("probs")};
}

SystemParams parse_params(const Node& n, int user_count) {
  n.check_keys(
      {"bandwidth_hz", "frame_seconds", "noise_watts", "transcode_joule_per_step", "beta"});
  SystemParams p;
  p.bandwidth_hz = n.num("bandwidth_hz");
  p.frame_seconds = n.num("frame_seconds");
  p.noise_watts = n.num("noise_watts");
  Node e = n.child("transcode_joule_per_step");
  if (e.j->is_number()) {
    p.transcode_joule_per_step.assign(user_count, e.as_number());
  } else {
    p.transcode_joule_per_step = n.num_array("transcode_joule_per_step");
  }
  p.beta = n.num_or("beta", 1.0);
  return p;
}

SolverOptions parse_solver(const Node& n, SolverOptions base) {
  n.check_keys({"feasibility_tol", "stationarity_tol", "max_newton", "barrier_growth",
                "snap_time_rel", "snap_energy_rel"});
  base.feasibility_tol = n.num_or("feasibility_tol", base.feasibility_tol);
  base.stationarity_tol = n.num_or("stationarity_tol", base.stationarity_tol);
  base.max_newton = n.integer_or("max_newton", base.max_newton);
  base.barrier_growth = n.num_or("barrier_growth", base.barrier_growth);
  base.snap_time_rel = n.num_or("snap_time_rel", base.snap_time_rel);
  base.snap_energy_rel = n.num_or("snap_energy_rel", base.snap_energy_rel);
  return base;
}

DcOptions parse_dc(const Node& n, DcOptions base) {
  n.check_keys({"restarts", "max_iterations", "max_rho_escalations", "rho_growth", "rho0_factor",
                "objective_tol", "penalty_tol", "seed", "solver"});
  base.restarts = n.integer_or("restarts", base.restarts);
  base.max_iterations = n.integer_or("max_iterations", base.max_iterations);
  base.max_rho_escalations = n.integer_or("max_rho_escalations", base.max_rho_escalations);
  base.rho_growth = n.num_or("rho_growth", base.rho_growth);
  base.rho0_factor = n.num_or("rho0_factor", base.rho0_factor);
  base.objective_tol = n.num_or("objective_tol", base.objective_tol);
  base.penalty_tol = n.num_or("penalty_tol", base.penalty_tol);
  base.seed = n.u64_or("seed", base.seed);
  if (n.has("solver")) base.solver = parse_solver(n.child("solver"), base.solver);
  return base;
}

ScenarioConfig parse_scenario(const Node& n) {
  n.check_keys({"users", "zipf_gamma", "r_lb", "r_ub", "catalog", "popularity_rank", "video",
                "bandwidth_hz", "frame_seconds", "noise_watts", "transcode_joule_per_step",
                "beta", "user_channel", "fov_horizontal_deg", "fov_vertical_deg",
                "fov_margin_deg", "realizations", "seed"});
  ScenarioConfig cfg;
  cfg.users = n.integer_or("users", cfg.users);
  cfg.zipf_gamma = n.num_or("zipf_gamma", cfg.zipf_gamma);
  cfg.r_lb = n.integer_or("r_lb", cfg.r_lb);
  cfg.r_ub = n.integer_or("r_ub", cfg.r_ub);
  if (n.has("catalog")) {
    Node c = n.child("catalog");
    cfg.catalog.resize(c.length());
    for (size_t i = 0; i < cfg.catalog.size(); ++i) {
      Node e = c.element(i);
      e.check_keys({"lat_deg", "lon_deg"});
      cfg.catalog[i] = {e.num("lat_deg"), e.num("lon_deg")};
    }
    cfg.popularity_rank.resize(cfg.catalog.size());
    for (size_t i = 0; i < cfg.catalog.size(); ++i)
      cfg.popularity_rank[i] = static_cast<int>(i) + 1;
  }
  if (n.has("popularity_rank")) cfg.popularity_rank = n.int_array("popularity_rank");
  if (n.has("video")) cfg.video = parse_video(n.child("video"));
  cfg.bandwidth_hz = n.num_or("bandwidth_hz", cfg.bandwidth_hz);
  cfg.frame_seconds = n.num_or("frame_seconds", cfg.frame_seconds);
  cfg.noise_watts = n.num_or("noise_watts", cfg.noise_watts);
  cfg.transcode_joule_per_step = n.num_or("transcode_joule_per_step", cfg.transcode_joule_per_step);
  cfg.beta = n.num_or("beta", cfg.beta);
  if (n.has("user_channel")) cfg.user_channel = parse_user_channel(n.child("user_channel"));
  cfg.fov_horizontal_deg = n.num_or("fov_horizontal_deg", cfg.fov_horizontal_deg);
  cfg.fov_vertical_deg = n.num_or("fov_vertical_deg", cfg.fov_vertical_deg);
  cfg.fov_margin_deg = n.num_or("fov_margin_deg", cfg.fov_margin_deg);
  cfg.realizations = n.integer_or("realizations", cfg.realizations);
  cfg.seed = n.u64_or("seed", cfg.seed);
  return cfg;
}

}  // namespace

Instance load_instance(const std::string& json_text) {
  const json root = parse_text(json_text);
  Node n{&root, "$"};
  n.check_keys({"video", "demands", "channel", "params"});

  Instance inst;
  inst.video = parse_video(n.child("video"));
  inst.demands = parse_demands(n.child("demands"));

  Node c = n.child("channel");
  c.check_keys({"users"});
  Node users = c.child("users");
  std::vector<UserChannel> marginals(users.length());
  for (size_t i = 0; i < marginals.size(); ++i)
    marginals[i] = parse_user_channel(users.element(i));
  try {
    inst.channel = joint_channel_states(marginals);
  } catch (const std::invalid_argument& e) {
    fail("$.channel.users", e.what());
  }

  inst.params = parse_params(n.child("params"), static_cast<int>(inst.demands.size()));
  inst.partition = compute_partition(inst.demands);
  return inst;
}

std::string save_instance(const Instance& inst) {
  json root = json::object();
  root["video"] = {{"rows", inst.video.rows},
                   {"cols", inst.video.cols},
                   {"levels", inst.video.levels},
                   {"encoding_rates", inst.video.encoding_rates}};
  json demands = json::array();
  for (const auto& d : inst.demands) {
    json tiles = json::array();
    for (const auto& t : d.tiles) tiles.push_back({t.row, t.col});
    demands.push_back({{"user", d.user}, {"quality", d.quality}, {"tiles", std::move(tiles)}});
  }
  root["demands"] = std::move(demands);
  json users = json::array();
  for (const auto& u : inst.channel.users)
    users.push_back({{"gains", u.gains}, {"probs", u.probs}});
  root["channel"] = {{"users", std::move(users)}};
  root["params"] = {{"bandwidth_hz", inst.params.bandwidth_hz},
                    {"frame_seconds", inst.params.frame_seconds},
                    {"noise_watts", inst.params.noise_watts},
                    {"transcode_joule_per_step", inst.params.transcode_joule_per_step},
                    {"beta", inst.params.beta}};
  return root.dump(2) + "\n";
}

DemandFile load_demands(const std::string& json_text) {
  const json root = parse_text(json_text);
  Node n{&root, "$"};
  n.check_keys({"video", "demands", "channel", "params"});
  DemandFile out;
  out.video = parse_video(n.child("video"));
  out.demands = parse_demands(n.child("demands"));
  return out;
}

ScenarioConfig load_scenario(const std::string& json_text) {
  const json root = parse_text(json_text);
  return parse_scenario(Node{&root, "$"});
}

SweepSpec load_sweep(const std::string& json_text) {
  const json root = parse_text(json_text);
  Node n{&root, "$"};
  n.check_keys({"param", "values", "base", "schemes", "dc"});
  SweepSpec spec;
  try {
    spec.param = parse_sweep_param(n.str("param"));
  } catch (const std::invalid_argument& e) {
    fail("$.param", e.what());
  }
  spec.values = n.num_array("values");
  if (n.has("base")) spec.base = parse_scenario(n.child("base"));
  if (n.has("schemes")) {
    Node s = n.child("schemes");
    spec.schemes.resize(s.length());
    for (size_t i = 0; i < spec.schemes.size(); ++i) {
      Node e = s.element(i);
      try {
        spec.schemes[i] = parse_scheme(e.as_string());
      } catch (const std::invalid_argument& ex) {
        fail(e.path, ex.what());
      }
    }
  }
  if (n.has("dc")) spec.dc = parse_dc(n.child("dc"), spec.dc);
  return spec;
}

RunOptions load_run_options(const std::string& json_text) {
  const json root = parse_text(json_text);
  Node n{&root, "$"};
  n.check_keys({"solver", "dc"});
  RunOptions out;
  if (n.has("solver")) out.solver = parse_solver(n.child("solver"), out.solver);
  if (n.has("dc")) out.dc = parse_dc(n.child("dc"), out.dc);
  return out;
}

}  // namespace tilecast

#include "pasta/environments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "pasta/error.hpp"
#include "pasta/hexfloat.hpp"

namespace pasta {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double wrap_angle(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

double clip(double v, double lo, double hi) { return std::clamp(v, lo, hi); }

double wall_clearance(Vec2 p, double half_x, double half_y) {
  return std::max(0.0, std::min(half_x - std::abs(p.x), half_y - std::abs(p.y)));
}

bool outside(Vec2 p, double half) { return std::abs(p.x) > half || std::abs(p.y) > half; }

double point_rect_distance(Vec2 p, const Rect& r) {
  const double dx = std::max(0.0, std::abs(p.x - r.center.x) - r.half_extent.x);
  const double dy = std::max(0.0, std::abs(p.y - r.center.y) - r.half_extent.y);
  return std::hypot(dx, dy);
}

// Ray p + t d (d unit length), t >= 0. Returns +inf on a miss, 0 when p is inside.
double ray_circle(Vec2 p, Vec2 d, Vec2 c, double radius) {
  const double ox = p.x - c.x;
  const double oy = p.y - c.y;
  const double cc = ox * ox + oy * oy - radius * radius;
  if (cc <= 0.0) return 0.0;
  const double b = d.x * ox + d.y * oy;
  const double disc = b * b - cc;
  if (disc < 0.0) return kInf;
  const double t = -b - std::sqrt(disc);
  return t >= 0.0 ? t : kInf;
}

double ray_rect(Vec2 p, Vec2 d, const Rect& r) {
  double t_near = -kInf;
  double t_far = kInf;
  const double origin[2] = {p.x, p.y};
  const double dir[2] = {d.x, d.y};
  const double lo[2] = {r.center.x - r.half_extent.x, r.center.y - r.half_extent.y};
  const double hi[2] = {r.center.x + r.half_extent.x, r.center.y + r.half_extent.y};
  for (int k = 0; k < 2; ++k) {
    if (dir[k] == 0.0) {
      if (origin[k] < lo[k] || origin[k] > hi[k]) return kInf;
      continue;
    }
    double t0 = (lo[k] - origin[k]) / dir[k];
    double t1 = (hi[k] - origin[k]) / dir[k];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
  }
  if (t_near > t_far || t_far < 0.0) return kInf;
  return std::max(t_near, 0.0);
}

double ray_walls(Vec2 p, Vec2 d, double half_x, double half_y) {
  double t = kInf;
  if (d.x > 0.0) t = std::min(t, (half_x - p.x) / d.x);
  if (d.x < 0.0) t = std::min(t, (-half_x - p.x) / d.x);
  if (d.y > 0.0) t = std::min(t, (half_y - p.y) / d.y);
  if (d.y < 0.0) t = std::min(t, (-half_y - p.y) / d.y);
  return std::max(t, 0.0);
}

void expect_inputs(std::span<const double> inputs, std::size_t n, const std::string& env) {
  if (inputs.size() != n) {
    throw ContractError(fmt::format("{} reward inputs need {} values, got {}", env, n, inputs.size()));
  }
}

}  // namespace

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

void Environment::begin_step(std::span<const double> action) {
  if (action.size() != action_dim()) {
    throw ContractError(fmt::format("{} expects {} action values, got {}", name(), action_dim(), action.size()));
  }
  for (double a : action) {
    if (!(a >= 0.0 && a <= 1.0)) throw ContractError(fmt::format("{} action value {} outside [0, 1]", name(), a));
  }
  ++steps_;
}

void EnvironmentConfig::validate() const {
  if (name != "stealth" && name != "frogger" && name != "formation" && name != "stub") {
    throw ConfigError(fmt::format("unknown environment '{}' (expected stealth, frogger, formation or stub)", name));
  }
  if (max_steps < 0) throw ConfigError("environment.max_steps must be >= 0");
  if (stub_objectives < 1 || stub_objectives > 8) throw ConfigError("environment.stub_objectives must be in [1, 8]");
  if (stealth_targets < 1) throw ConfigError("environment.stealth_targets must be >= 1");
  if (!(stealth_safe_fraction > 0.0 && stealth_safe_fraction <= 1.0)) {
    throw ConfigError("environment.stealth_safe_fraction must be in (0, 1]");
  }
}

std::unique_ptr<Environment> make_environment(const EnvironmentConfig& config) {
  config.validate();
  if (config.name == "stealth") {
    StealthParams p;
    p.safe_x = config.stealth_safe_fraction * p.half_x;
    p.safe_y = config.stealth_safe_fraction * p.half_y;
    if (config.max_steps > 0) p.step_cap = config.max_steps;
    return std::make_unique<StealthEnv>(p, config.stealth_targets, config.stealth_circles, config.stealth_rectangles);
  }
  if (config.name == "frogger") {
    FroggerParams p;
    if (config.max_steps > 0) p.step_cap = config.max_steps;
    return std::make_unique<FroggerEnv>(p);
  }
  if (config.name == "formation") {
    FormationParams p;
    if (config.max_steps > 0) p.step_cap = config.max_steps;
    return std::make_unique<FormationEnv>(p);
  }
  return std::make_unique<StubEnv>(config.stub_objectives, config.max_steps > 0 ? config.max_steps : 16);
}

std::vector<double> rewards_from_inputs(const std::string& environment, std::span<const double> in) {
  if (environment == "stealth") {
    expect_inputs(in, 16, environment);
    const Vec2 prev{in[0], in[1]};
    const Vec2 cur{in[2], in[3]};
    const int n_new = static_cast<int>(in[4]);
    const auto vision = in.subspan(5, 6);
    const bool collided = in[11] != 0.0;
    const auto n_obj = static_cast<std::size_t>(in[12]);
    return {stealth_score_reward(n_new, vision, n_obj), stealth_stealth_reward(cur, collided, in[13], in[14], in[15]),
            stealth_exploration_reward(prev, cur)};
  }
  if (environment == "frogger") {
    expect_inputs(in, 11, environment);
    FroggerEvents ev{in[8] != 0.0, in[9] != 0.0, in[10] != 0.0};
    auto r = frogger_rewards({in[0], in[1]}, {in[2], in[3]}, {in[4], in[5]}, in[6], in[7], ev);
    return {r.begin(), r.end()};
  }
  if (environment == "formation") {
    expect_inputs(in, 24, environment);
    FormationState prev;
    FormationState cur;
    for (int i = 0; i < 3; ++i) prev.agents[i] = {in[2 * i], in[2 * i + 1]};
    prev.opponent = {in[6], in[7]};
    for (int i = 0; i < 3; ++i) cur.agents[i] = {in[8 + 2 * i], in[9 + 2 * i]};
    cur.opponent = {in[14], in[15]};
    FormationParams p;
    p.half = in[18];
    p.side = in[19];
    p.goal = {in[20], in[21]};
    p.goal_radius = in[22];
    p.collision_radius = in[23];
    auto r = formation_rewards(prev, cur, p, in[16], in[17] != 0.0);
    return {r.begin(), r.end()};
  }
  if (environment == "stub") {
    if (in.size() < 2) throw ContractError("stub reward inputs need x and at least one center");
    std::vector<double> r;
    for (std::size_t i = 1; i < in.size(); ++i) r.push_back(-std::abs(in[0] - in[i]));
    return r;
  }
  throw ContractError(fmt::format("no reward formula for environment '{}'", environment));
}

// ------------------------------------------------------------------ opponents

OpponentEvents opponent_step(PatrolOpponent& opp, Rng& rng) {
  OpponentEvents ev;
  if (rng.bernoulli(opp.reversal_probability)) {
    opp.direction = -opp.direction;
    ev.random_reversal = true;
  }
  opp.x += opp.direction * opp.speed;
  if (std::abs(opp.x) >= opp.x_lim) {
    opp.x = std::copysign(opp.x_lim, opp.x);
    opp.direction = opp.x > 0.0 ? -1 : 1;
    ev.bounce = true;
  }
  return ev;
}

PatrolOpponent spawn_opponent(double lane_y, Rng& rng) {
  PatrolOpponent opp;
  opp.y = lane_y;
  opp.x = rng.uniform(-opp.x_lim, opp.x_lim);
  opp.direction = rng.bernoulli(0.5) ? 1 : -1;
  opp.speed = rng.bernoulli(0.5) ? 0.03 : 0.04;
  return opp;
}

// -------------------------------------------------------------------- stealth

double StealthParams::d_max() const { return std::max(0.0, std::min(safe_x, safe_y)); }

double stealth_score_reward(int newly_scanned, std::span<const double> vision, std::size_t target_count) {
  double sum = 0.0;
  for (double v : vision) sum += v;
  return clip(10.0 * newly_scanned + 0.05 * sum, 0.0, 10.0 * static_cast<double>(target_count));
}

double stealth_risk_distance(Vec2 p, double safe_x, double safe_y) {
  return std::max(0.0, std::min(safe_x - std::abs(p.x), safe_y - std::abs(p.y)));
}

double stealth_stealth_reward(Vec2 p, bool collided, double safe_x, double safe_y, double d_max) {
  const double d_risk = stealth_risk_distance(p, safe_x, safe_y);
  return clip((1.0 - d_risk / d_max) - (collided ? 1.0 : 0.0), 0.0, 1.0);
}

double stealth_exploration_reward(Vec2 previous, Vec2 current) {
  return clip(2.0 * distance(previous, current), 0.0, 1.0);
}

bool stealth_collides(const StealthWorld& world, Vec2 p, const StealthParams& params) {
  const double r = params.agent_radius;
  if (std::abs(p.x) > params.half_x - r || std::abs(p.y) > params.half_y - r) return true;
  for (const auto& c : world.circles) {
    if (distance(p, c.center) < c.radius + r) return true;
  }
  for (const auto& rect : world.rectangles) {
    if (point_rect_distance(p, rect) < r) return true;
  }
  return false;
}

StealthSensors stealth_sensors(const StealthWorld& world, const StealthParams& params) {
  StealthSensors out;
  const double sector_width = params.fov / 3.0;
  std::array<int, 6> counts{};
  for (std::size_t k = 0; k < world.targets.size(); ++k) {
    if (world.scanned[k]) continue;
    const Vec2 t = world.targets[k];
    const double d = distance(world.position, t);
    if (d > params.sensor_range) continue;
    const double rel = wrap_angle(std::atan2(t.y - world.position.y, t.x - world.position.x) - world.heading);
    if (std::abs(rel) > params.fov / 2.0) continue;
    const int band = d < params.near_band ? 0 : 1;
    const int sector = std::clamp(static_cast<int>(std::floor((rel + params.fov / 2.0) / sector_width)), 0, 2);
    counts[band * 3 + sector] += 1;
  }
  for (int c = 0; c < 6; ++c) out.vision[c] = std::min(1.0, 0.5 * counts[c]);

  out.lidar.resize(params.lidar_rays);
  for (int k = 0; k < params.lidar_rays; ++k) {
    const double angle = world.heading + 2.0 * std::numbers::pi * k / params.lidar_rays;
    const Vec2 dir{std::cos(angle), std::sin(angle)};
    double t = ray_walls(world.position, dir, params.half_x, params.half_y);
    for (const auto& c : world.circles) t = std::min(t, ray_circle(world.position, dir, c.center, c.radius));
    for (const auto& r : world.rectangles) t = std::min(t, ray_rect(world.position, dir, r));
    for (std::size_t j = 0; j < world.targets.size(); ++j) {
      if (!world.scanned[j]) t = std::min(t, ray_circle(world.position, dir, world.targets[j], params.target_radius));
    }
    out.lidar[k] = std::min(t, params.lidar_range) / params.lidar_range;
  }
  return out;
}

StealthEnv::StealthEnv(StealthParams params, std::size_t targets, std::size_t circles, std::size_t rectangles)
    : params_(params), target_count_(targets), circle_count_(circles), rectangle_count_(rectangles) {
  if (params_.d_max() <= 0.0) throw ConfigError("stealth safe zone must have positive extent");
}

std::vector<double> StealthEnv::reset(std::uint64_t seed) {
  rng_ = Rng(seed, 0x5EA1);
  StealthWorld w;
  for (std::size_t i = 0; i < circle_count_; ++i) {
    w.circles.push_back({{rng_.uniform(-0.75, 0.75), rng_.uniform(-0.75, 0.75)}, rng_.uniform(0.08, 0.15)});
  }
  for (std::size_t i = 0; i < rectangle_count_; ++i) {
    w.rectangles.push_back({{rng_.uniform(-0.75, 0.75), rng_.uniform(-0.75, 0.75)},
                            {rng_.uniform(0.05, 0.15), rng_.uniform(0.05, 0.15)}});
  }
  constexpr int kMaxAttempts = 10000;
  int attempts = 0;
  do {
    if (++attempts > kMaxAttempts) throw Error("stealth reset could not place the agent");
    w.position = {rng_.uniform(-0.9, 0.9), rng_.uniform(-0.9, 0.9)};
  } while (stealth_collides(w, w.position, params_));
  w.heading = rng_.uniform(-std::numbers::pi, std::numbers::pi);

  for (std::size_t k = 0; k < target_count_; ++k) {
    attempts = 0;
    while (true) {
      if (++attempts > kMaxAttempts) throw Error("stealth reset could not place the targets");
      const Vec2 t{rng_.uniform(-0.9, 0.9), rng_.uniform(-0.9, 0.9)};
      bool ok = distance(t, w.position) > 0.3;
      for (const auto& c : w.circles) ok = ok && distance(t, c.center) > c.radius + params_.target_radius;
      for (const auto& r : w.rectangles) ok = ok && point_rect_distance(t, r) > params_.target_radius;
      for (const auto& other : w.targets) ok = ok && distance(t, other) > 2.0 * params_.target_radius;
      if (ok) {
        w.targets.push_back(t);
        break;
      }
    }
  }
  w.scanned.assign(w.targets.size(), 0);
  return reset_to(w);
}

std::vector<double> StealthEnv::reset_to(const StealthWorld& world) {
  if (world.scanned.size() != world.targets.size()) throw ContractError("scanned flags must match targets");
  world_ = world;
  steps_ = 0;
  last_inputs_.clear();
  return observe(stealth_sensors(world_, params_));
}

std::vector<double> StealthEnv::observe(const StealthSensors& sensors) const {
  std::vector<double> obs{world_.position.x, world_.position.y, std::cos(world_.heading), std::sin(world_.heading)};
  obs.insert(obs.end(), sensors.vision.begin(), sensors.vision.end());
  obs.insert(obs.end(), sensors.lidar.begin(), sensors.lidar.end());
  return obs;
}

StepResult StealthEnv::step(std::span<const double> action) {
  begin_step(action);
  const Vec2 prev = world_.position;
  const double v = action[0] * params_.v_scale;
  const double omega = (2.0 * action[1] - 1.0) * params_.omega_scale;
  world_.heading = wrap_angle(world_.heading + omega * params_.dt);
  const Vec2 candidate{prev.x + v * std::cos(world_.heading) * params_.dt,
                       prev.y + v * std::sin(world_.heading) * params_.dt};
  const bool collided = stealth_collides(world_, candidate, params_);
  if (!collided) world_.position = candidate;

  int newly = 0;
  for (std::size_t k = 0; k < world_.targets.size(); ++k) {
    if (world_.scanned[k]) continue;
    const Vec2 t = world_.targets[k];
    const double rel = wrap_angle(std::atan2(t.y - world_.position.y, t.x - world_.position.x) - world_.heading);
    if (distance(world_.position, t) <= params_.scan_range && std::abs(rel) <= params_.fov / 2.0) {
      world_.scanned[k] = 1;
      ++newly;
    }
  }
  const StealthSensors sensors = stealth_sensors(world_, params_);

  last_inputs_ = {prev.x, prev.y, world_.position.x, world_.position.y, static_cast<double>(newly)};
  last_inputs_.insert(last_inputs_.end(), sensors.vision.begin(), sensors.vision.end());
  last_inputs_.insert(last_inputs_.end(), {collided ? 1.0 : 0.0, static_cast<double>(world_.targets.size()),
                                           params_.safe_x, params_.safe_y, params_.d_max()});

  StepResult out;
  out.observation = observe(sensors);
  out.reward = rewards_from_inputs("stealth", last_inputs_);
  out.terminated = std::all_of(world_.scanned.begin(), world_.scanned.end(), [](std::uint8_t s) { return s != 0; });
  out.truncated = !out.terminated && steps_ >= params_.step_cap;
  return out;
}

// -------------------------------------------------------------------- frogger

Vec2 displacement_command(double a0, double a1, double max_displacement) {
  Vec2 d{(2.0 * a0 - 1.0) * max_displacement, (2.0 * a1 - 1.0) * max_displacement};
  const double n = std::hypot(d.x, d.y);
  if (n > max_displacement) {
    d.x *= max_displacement / n;
    d.y *= max_displacement / n;
  }
  return d;
}

std::array<double, 3> frogger_rewards(Vec2 previous, Vec2 current, Vec2 goal, double d_opp, double half,
                                      const FroggerEvents& ev) {
  double r_goal = clip(distance(previous, goal) - distance(current, goal), -1.0, 1.0);
  if (ev.goal) r_goal += 10.0;
  if (ev.collision || ev.boundary) r_goal -= 15.0;
  double r_bounds = 0.1 * clip(wall_clearance(current, half, half) / 0.2, 0.0, 1.0);
  if (ev.boundary) r_bounds -= 25.0;
  double r_avoid = 0.1 * clip(d_opp / 0.3, 0.0, 1.0);
  if (ev.collision) r_avoid -= 25.0;
  return {r_goal, r_bounds, r_avoid};
}

FroggerEnv::FroggerEnv(FroggerParams params) : params_(params) {}

std::vector<double> FroggerEnv::reset(std::uint64_t seed) {
  rng_ = Rng(seed, 0xF066);
  steps_ = 0;
  agent_ = {rng_.uniform(-params_.start_x_spread, params_.start_x_spread), params_.start_y};
  opponents_.clear();
  for (double lane : params_.lanes) opponents_.push_back(spawn_opponent(lane, rng_));
  last_inputs_.clear();
  return observe();
}

std::vector<double> FroggerEnv::observe() const {
  std::vector<double> obs{agent_.x, agent_.y, params_.goal.x - agent_.x, params_.goal.y - agent_.y};
  for (const auto& o : opponents_) {
    obs.push_back(o.x - agent_.x);
    obs.push_back(o.y - agent_.y);
    obs.push_back(o.velocity() / 0.04);
  }
  return obs;
}

StepResult FroggerEnv::step(std::span<const double> action) {
  begin_step(action);
  const Vec2 prev = agent_;
  const Vec2 d = displacement_command(action[0], action[1], params_.max_displacement);
  agent_ = {agent_.x + d.x, agent_.y + d.y};
  for (auto& o : opponents_) opponent_step(o, rng_);

  double d_opp = kInf;
  for (const auto& o : opponents_) d_opp = std::min(d_opp, distance(agent_, o.position()));
  FroggerEvents ev;
  ev.goal = distance(agent_, params_.goal) < params_.goal_radius;
  ev.boundary = outside(agent_, params_.half);
  ev.collision = d_opp < params_.collision_radius;

  last_inputs_ = {prev.x,  prev.y,       agent_.x,         agent_.y,         params_.goal.x,   params_.goal.y,
                  d_opp,   params_.half, ev.goal ? 1.0 : 0.0, ev.boundary ? 1.0 : 0.0, ev.collision ? 1.0 : 0.0};
  StepResult out;
  out.observation = observe();
  out.reward = rewards_from_inputs("frogger", last_inputs_);
  out.terminated = ev.goal || ev.boundary || ev.collision;
  out.truncated = !out.terminated && steps_ >= params_.step_cap;
  return out;
}

// ------------------------------------------------------------------ formation

Vec2 centroid(const std::array<Vec2, 3>& agents) {
  return {(agents[0].x + agents[1].x + agents[2].x) / 3.0, (agents[0].y + agents[1].y + agents[2].y) / 3.0};
}

double formation_error(const std::array<Vec2, 3>& agents, double side) {
  double e = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) e = std::max(e, std::abs(distance(agents[i], agents[j]) - side));
  }
  return e;
}

double formation_shape_reward(double error) { return std::exp(-5.0 * error) - clip(error, 0.0, 1.0); }

std::array<double, 4> formation_rewards(const FormationState& previous, const FormationState& current,
                                        const FormationParams& p, double mean_effort, bool collision) {
  const double d_prev = distance(centroid(previous.agents), p.goal);
  const double d_now = distance(centroid(current.agents), p.goal);
  double r_goal = 5.0 * (d_prev - d_now) - 0.1 * mean_effort;
  if (d_now < p.goal_radius) r_goal += 10.0;
  if (collision) r_goal -= 5.0;

  double safest_bound = kInf;
  double nearest_opp = kInf;
  for (const auto& a : current.agents) {
    const double margin = std::min(p.half - std::abs(a.x), p.half - std::abs(a.y));
    safest_bound = std::min(safest_bound, clip(margin / 0.2, 0.0, 1.0));
    nearest_opp = std::min(nearest_opp, distance(a, current.opponent));
  }
  const double r_bounds = 0.1 * safest_bound;
  double r_avoid = 0.2 * clip(nearest_opp / 0.4, 0.0, 1.0);
  if (nearest_opp < p.collision_radius) r_avoid -= 10.0;
  const double r_form = formation_shape_reward(formation_error(current.agents, p.side));
  return {r_goal, r_bounds, r_avoid, r_form};
}

FormationEnv::FormationEnv(FormationParams params) : params_(params) {}

std::vector<double> FormationEnv::reset(std::uint64_t seed) {
  rng_ = Rng(seed, 0xF0A3);
  steps_ = 0;
  const double circumradius = params_.side / std::sqrt(3.0);
  for (int k = 0; k < 3; ++k) {
    const double angle = std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * k / 3.0;
    state_.agents[k] = {params_.start_center.x + circumradius * std::cos(angle),
                        params_.start_center.y + circumradius * std::sin(angle)};
  }
  opponent_ = spawn_opponent(params_.opponent_lane, rng_);
  state_.opponent = opponent_.position();
  last_inputs_.clear();
  return observe();
}

std::vector<double> FormationEnv::observe() const {
  std::vector<double> obs;
  for (const auto& a : state_.agents) {
    obs.push_back(a.x);
    obs.push_back(a.y);
  }
  const Vec2 cm = centroid(state_.agents);
  obs.push_back(params_.goal.x - cm.x);
  obs.push_back(params_.goal.y - cm.y);
  obs.push_back(state_.opponent.x - cm.x);
  obs.push_back(state_.opponent.y - cm.y);
  obs.push_back(opponent_.velocity() / 0.04);
  return obs;
}

StepResult FormationEnv::step(std::span<const double> action) {
  begin_step(action);
  const FormationState prev = state_;
  double effort = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Vec2 d = displacement_command(action[2 * i], action[2 * i + 1], params_.max_displacement);
    effort += std::hypot(d.x, d.y) / params_.max_displacement;
    state_.agents[i] = {state_.agents[i].x + d.x, state_.agents[i].y + d.y};
  }
  effort /= 3.0;
  opponent_step(opponent_, rng_);
  state_.opponent = opponent_.position();

  bool collision = false;
  bool boundary = false;
  for (int i = 0; i < 3; ++i) {
    collision = collision || distance(state_.agents[i], state_.opponent) < params_.collision_radius;
    boundary = boundary || outside(state_.agents[i], params_.half);
    for (int j = i + 1; j < 3; ++j) {
      collision = collision || distance(state_.agents[i], state_.agents[j]) < params_.collision_radius;
    }
  }

  last_inputs_.clear();
  for (const auto& a : prev.agents) last_inputs_.insert(last_inputs_.end(), {a.x, a.y});
  last_inputs_.insert(last_inputs_.end(), {prev.opponent.x, prev.opponent.y});
  for (const auto& a : state_.agents) last_inputs_.insert(last_inputs_.end(), {a.x, a.y});
  last_inputs_.insert(last_inputs_.end(),
                      {state_.opponent.x, state_.opponent.y, effort, collision ? 1.0 : 0.0, params_.half,
                       params_.side, params_.goal.x, params_.goal.y, params_.goal_radius, params_.collision_radius});

  StepResult out;
  out.observation = observe();
  out.reward = rewards_from_inputs("formation", last_inputs_);
  const bool reached = distance(centroid(state_.agents), params_.goal) < params_.goal_radius;
  out.terminated = reached || collision || boundary;
  out.truncated = !out.terminated && steps_ >= params_.step_cap;
  return out;
}

// ----------------------------------------------------------------------- stub

StubEnv::StubEnv(std::size_t objectives, std::int64_t episode_length) : episode_length_(episode_length) {
  if (objectives == 0) throw ConfigError("stub environment needs at least one objective");
  if (episode_length <= 0) throw ConfigError("stub episode length must be positive");
  if (objectives == 1) {
    centers_ = {0.5};
  } else {
    for (std::size_t i = 0; i < objectives; ++i) {
      centers_.push_back(-0.5 + static_cast<double>(i) / static_cast<double>(objectives - 1));
    }
  }
}

std::vector<double> StubEnv::reset(std::uint64_t) {
  x_ = 0.0;
  steps_ = 0;
  last_inputs_.clear();
  return {x_};
}

StepResult StubEnv::step(std::span<const double> action) {
  begin_step(action);
  x_ = std::clamp(x_ + 0.1 * (2.0 * action[0] - 1.0), -1.0, 1.0);
  last_inputs_ = {x_};
  last_inputs_.insert(last_inputs_.end(), centers_.begin(), centers_.end());
  StepResult out;
  out.observation = {x_};
  out.reward = rewards_from_inputs("stub", last_inputs_);
  out.truncated = steps_ >= episode_length_;
  return out;
}

// --------------------------------------------------------------- trajectories

namespace {

void append_values(std::string& out, const char* tag, const std::vector<double>& values) {
  out += fmt::format("{} {}", tag, values.size());
  for (double v : values) {
    out += ' ';
    out += format_hex(v);
  }
  out += '\n';
}

std::vector<double> read_values(std::istringstream& line, const std::string& tag) {
  std::size_t n = 0;
  if (!(line >> n)) throw IoError(fmt::format("trajectory '{}' line lacks a count", tag));
  std::vector<double> values(n);
  for (auto& v : values) {
    std::string tok;
    if (!(line >> tok)) throw IoError(fmt::format("trajectory '{}' line is short", tag));
    v = parse_hex(tok, "trajectory");
  }
  return values;
}

}  // namespace

std::string TrajectoryLog::serialize() const {
  std::string out = "pasta-trajectory 1\n";
  out += fmt::format("environment {}\n", environment.name);
  out += fmt::format("max_steps {}\n", environment.max_steps);
  out += fmt::format("stub_objectives {}\n", environment.stub_objectives);
  out += fmt::format("stealth_targets {}\n", environment.stealth_targets);
  out += fmt::format("stealth_circles {}\n", environment.stealth_circles);
  out += fmt::format("stealth_rectangles {}\n", environment.stealth_rectangles);
  out += fmt::format("stealth_safe_fraction {}\n", format_hex(environment.stealth_safe_fraction));
  out += fmt::format("seed {}\n", seed);
  for (const auto& s : steps) {
    out += "step\n";
    append_values(out, "action", s.action);
    append_values(out, "reward", s.reward);
    append_values(out, "inputs", s.reward_inputs);
  }
  out += "end\n";
  return out;
}

TrajectoryLog TrajectoryLog::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "pasta-trajectory 1") throw IoError("not a pasta trajectory (bad header)");
  TrajectoryLog log;
  bool ended = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "environment") {
      ls >> log.environment.name;
    } else if (key == "max_steps") {
      ls >> log.environment.max_steps;
    } else if (key == "stub_objectives") {
      ls >> log.environment.stub_objectives;
    } else if (key == "stealth_targets") {
      ls >> log.environment.stealth_targets;
    } else if (key == "stealth_circles") {
      ls >> log.environment.stealth_circles;
    } else if (key == "stealth_rectangles") {
      ls >> log.environment.stealth_rectangles;
    } else if (key == "stealth_safe_fraction") {
      std::string tok;
      ls >> tok;
      log.environment.stealth_safe_fraction = parse_hex(tok, "trajectory");
    } else if (key == "seed") {
      ls >> log.seed;
    } else if (key == "step") {
      log.steps.emplace_back();
    } else if (key == "action" || key == "reward" || key == "inputs") {
      if (log.steps.empty()) throw IoError(fmt::format("trajectory '{}' line before any step", key));
      auto values = read_values(ls, key);
      auto& s = log.steps.back();
      (key == "action" ? s.action : key == "reward" ? s.reward : s.reward_inputs) = std::move(values);
    } else if (key == "end") {
      ended = true;
      break;
    } else if (!key.empty()) {
      throw IoError(fmt::format("unknown trajectory line '{}'", line));
    }
  }
  if (!ended) throw IoError("trajectory is truncated (missing 'end')");
  return log;
}

void TrajectoryLog::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write trajectory '{}'", path));
  out << serialize();
  if (!out) throw IoError(fmt::format("failed writing trajectory '{}'", path));
}

TrajectoryLog TrajectoryLog::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open trajectory '{}'", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

TrajectoryLog record_trajectory(const EnvironmentConfig& config, std::uint64_t seed,
                                std::span<const std::vector<double>> actions) {
  auto env = make_environment(config);
  TrajectoryLog log;
  log.environment = config;
  log.seed = seed;
  env->reset(seed);
  for (const auto& a : actions) {
    StepResult r = env->step(a);
    log.steps.push_back({a, r.reward, env->reward_inputs()});
    if (r.done()) break;
  }
  return log;
}

ReplayCheck replay_trajectory(const TrajectoryLog& log) {
  auto env = make_environment(log.environment);
  env->reset(log.seed);
  ReplayCheck check;
  for (const auto& s : log.steps) {
    StepResult r = env->step(s.action);
    check.steps += 1;
    if (r.reward != s.reward) check.simulation_mismatches += 1;
    if (rewards_from_inputs(log.environment.name, s.reward_inputs) != s.reward) check.formula_mismatches += 1;
  }
  return check;
}

}  // namespace pasta

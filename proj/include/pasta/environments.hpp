#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pasta/rng.hpp"

namespace pasta {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(Vec2 a, Vec2 b);

struct StepResult {
  std::vector<double> observation;
  std::vector<double> reward;
  bool terminated = false;
  bool truncated = false;

  bool done() const { return terminated || truncated; }
};

// Multi-objective environment. Actions live in [0,1]^d; each environment maps
// them to its native command range. All randomness comes from the seed passed
// to reset, so one seed fixes the whole episode.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual std::size_t objective_count() const = 0;
  virtual std::size_t observation_dim() const = 0;
  virtual std::size_t action_dim() const = 0;
  virtual std::int64_t step_cap() const = 0;

  virtual std::vector<double> reset(std::uint64_t seed) = 0;
  virtual StepResult step(std::span<const double> action) = 0;

  // Everything the last step's reward depended on, flattened. Feeding it to
  // rewards_from_inputs reproduces that reward exactly.
  virtual std::vector<double> reward_inputs() const = 0;

  std::int64_t steps_taken() const { return steps_; }

 protected:
  // Validates the action and advances the step counter.
  void begin_step(std::span<const double> action);
  std::int64_t steps_ = 0;
};

struct EnvironmentConfig {
  std::string name = "frogger";  // stealth | frogger | formation | stub
  std::int64_t max_steps = 0;    // 0 keeps the environment default
  std::size_t stub_objectives = 3;
  std::size_t stealth_targets = 5;
  std::size_t stealth_circles = 3;
  std::size_t stealth_rectangles = 2;
  double stealth_safe_fraction = 0.75;  // L_safe as a fraction of the arena half-size

  void validate() const;
};

std::unique_ptr<Environment> make_environment(const EnvironmentConfig& config);

// Recomputes a reward vector from Environment::reward_inputs().
std::vector<double> rewards_from_inputs(const std::string& environment, std::span<const double> inputs);

// ---------------------------------------------------------------- opponents

struct PatrolOpponent {
  double x = 0.0;
  double y = 0.0;
  double speed = 0.03;
  int direction = 1;
  double x_lim = 0.95;
  double reversal_probability = 0.05;

  Vec2 position() const { return {x, y}; }
  double velocity() const { return direction * speed; }
};

struct OpponentEvents {
  bool random_reversal = false;
  bool bounce = false;
};

// Random reversal with the configured probability, advance, then bounce
// (clamp to the limit and flip) when |x| reaches x_lim.
OpponentEvents opponent_step(PatrolOpponent& opp, Rng& rng);

PatrolOpponent spawn_opponent(double lane_y, Rng& rng);

// ------------------------------------------------------------------ stealth

struct Circle {
  Vec2 center;
  double radius = 0.0;
};

struct Rect {
  Vec2 center;
  Vec2 half_extent;
};

struct StealthParams {
  double half_x = 1.0;
  double half_y = 1.0;
  double agent_radius = 0.05;
  double dt = 0.05;
  double v_scale = 1.0;
  double omega_scale = 3.14159265358979323846;
  double fov = 1.715;
  double sensor_range = 0.6;
  double near_band = 0.3;
  double scan_range = 0.15;
  double target_radius = 0.05;
  int lidar_rays = 20;
  double lidar_range = 0.35;
  double safe_x = 0.75;
  double safe_y = 0.75;
  std::int64_t step_cap = 1000;

  // Largest d_risk over the arena.
  double d_max() const;
};

struct StealthWorld {
  Vec2 position;
  double heading = 0.0;
  std::vector<Circle> circles;
  std::vector<Rect> rectangles;
  std::vector<Vec2> targets;
  std::vector<std::uint8_t> scanned;
};

struct StealthSensors {
  std::array<double, 6> vision{};
  std::vector<double> lidar;
};

// Vision cell = band * 3 + sector; band 0 is [0, near_band), sectors run
// from the most negative relative angle to the most positive.
StealthSensors stealth_sensors(const StealthWorld& world, const StealthParams& params);
bool stealth_collides(const StealthWorld& world, Vec2 position, const StealthParams& params);

double stealth_score_reward(int newly_scanned, std::span<const double> vision, std::size_t target_count);
double stealth_risk_distance(Vec2 position, double safe_x, double safe_y);
double stealth_stealth_reward(Vec2 position, bool collided, double safe_x, double safe_y, double d_max);
double stealth_exploration_reward(Vec2 previous, Vec2 current);

class StealthEnv final : public Environment {
 public:
  StealthEnv(StealthParams params, std::size_t targets, std::size_t circles, std::size_t rectangles);

  std::string name() const override { return "stealth"; }
  std::size_t objective_count() const override { return 3; }
  std::size_t observation_dim() const override { return 30; }
  std::size_t action_dim() const override { return 2; }
  std::int64_t step_cap() const override { return params_.step_cap; }

  std::vector<double> reset(std::uint64_t seed) override;
  // Starts an episode on a hand-built world.
  std::vector<double> reset_to(const StealthWorld& world);
  StepResult step(std::span<const double> action) override;
  std::vector<double> reward_inputs() const override { return last_inputs_; }

  const StealthWorld& world() const { return world_; }
  const StealthParams& params() const { return params_; }

 private:
  std::vector<double> observe(const StealthSensors& sensors) const;

  StealthParams params_;
  std::size_t target_count_;
  std::size_t circle_count_;
  std::size_t rectangle_count_;
  StealthWorld world_;
  Rng rng_{0};
  std::vector<double> last_inputs_;
};

// ------------------------------------------------------------------ frogger

struct FroggerParams {
  double half = 1.0;
  double max_displacement = 0.05;
  Vec2 goal{0.0, 0.8};
  double goal_radius = 0.1;
  double start_y = -0.8;
  double start_x_spread = 0.3;
  std::array<double, 2> lanes{-0.3, 0.3};
  double collision_radius = 0.1;
  std::int64_t step_cap = 400;
};

struct FroggerEvents {
  bool goal = false;
  bool boundary = false;
  bool collision = false;
};

std::array<double, 3> frogger_rewards(Vec2 previous, Vec2 current, Vec2 goal, double d_opp, double half,
                                      const FroggerEvents& events);

// Maps [0,1]^2 to a planar displacement with norm at most max_displacement.
Vec2 displacement_command(double a0, double a1, double max_displacement);

class FroggerEnv final : public Environment {
 public:
  explicit FroggerEnv(FroggerParams params = {});

  std::string name() const override { return "frogger"; }
  std::size_t objective_count() const override { return 3; }
  std::size_t observation_dim() const override { return 10; }
  std::size_t action_dim() const override { return 2; }
  std::int64_t step_cap() const override { return params_.step_cap; }

  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(std::span<const double> action) override;
  std::vector<double> reward_inputs() const override { return last_inputs_; }

  Vec2 agent() const { return agent_; }
  const std::vector<PatrolOpponent>& opponents() const { return opponents_; }

 private:
  std::vector<double> observe() const;

  FroggerParams params_;
  Vec2 agent_;
  std::vector<PatrolOpponent> opponents_;
  Rng rng_{0};
  std::vector<double> last_inputs_;
};

// ---------------------------------------------------------------- formation

struct FormationParams {
  double half = 1.0;
  double max_displacement = 0.05;
  double side = 0.45;
  Vec2 start_center{0.0, -0.65};
  Vec2 goal{0.0, 0.65};
  double goal_radius = 0.1;
  double opponent_lane = 0.0;
  double collision_radius = 0.1;
  std::int64_t step_cap = 600;
};

struct FormationState {
  std::array<Vec2, 3> agents;
  Vec2 opponent;
};

Vec2 centroid(const std::array<Vec2, 3>& agents);
// Largest |pairwise distance - side| over the three links.
double formation_error(const std::array<Vec2, 3>& agents, double side);
double formation_shape_reward(double error);

// r_goal, r_bounds, r_avoid, r_form. `collision` covers agent-obstacle and
// agent-agent contact.
std::array<double, 4> formation_rewards(const FormationState& previous, const FormationState& current,
                                        const FormationParams& params, double mean_effort, bool collision);

class FormationEnv final : public Environment {
 public:
  explicit FormationEnv(FormationParams params = {});

  std::string name() const override { return "formation"; }
  std::size_t objective_count() const override { return 4; }
  std::size_t observation_dim() const override { return 11; }
  std::size_t action_dim() const override { return 6; }
  std::int64_t step_cap() const override { return params_.step_cap; }

  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(std::span<const double> action) override;
  std::vector<double> reward_inputs() const override { return last_inputs_; }

  const FormationState& state() const { return state_; }

 private:
  std::vector<double> observe() const;

  FormationParams params_;
  FormationState state_;
  PatrolOpponent opponent_;
  Rng rng_{0};
  std::vector<double> last_inputs_;
};

// --------------------------------------------------------------------- stub

// Deterministic 1-D point. r_i = -|x - c_i| with the centers c_i spread over
// [-0.5, 0.5]; episodes are truncated after `episode_length` steps.
class StubEnv final : public Environment {
 public:
  explicit StubEnv(std::size_t objectives, std::int64_t episode_length = 16);

  std::string name() const override { return "stub"; }
  std::size_t objective_count() const override { return centers_.size(); }
  std::size_t observation_dim() const override { return 1; }
  std::size_t action_dim() const override { return 1; }
  std::int64_t step_cap() const override { return episode_length_; }

  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(std::span<const double> action) override;
  std::vector<double> reward_inputs() const override { return last_inputs_; }

  std::span<const double> centers() const { return centers_; }

 private:
  std::vector<double> centers_;
  std::int64_t episode_length_;
  double x_ = 0.0;
  std::vector<double> last_inputs_;
};

// ------------------------------------------------------------ trajectories

struct TrajectoryStep {
  std::vector<double> action;
  std::vector<double> reward;
  std::vector<double> reward_inputs;
};

// A recorded episode. The text format stores every double as hexfloat:
//
//   pasta-trajectory 1
//   environment <name>
//   seed <u64>
//   step
//   action <n> <values>
//   reward <m> <values>
//   inputs <k> <values>
//   end
struct TrajectoryLog {
  EnvironmentConfig environment;
  std::uint64_t seed = 0;
  std::vector<TrajectoryStep> steps;

  void save(const std::string& path) const;
  static TrajectoryLog load(const std::string& path);
  std::string serialize() const;
  static TrajectoryLog parse(const std::string& text);
};

// Runs `actions` from reset(seed), stopping early if the episode ends.
TrajectoryLog record_trajectory(const EnvironmentConfig& config, std::uint64_t seed,
                                std::span<const std::vector<double>> actions);

struct ReplayCheck {
  std::size_t steps = 0;
  std::size_t simulation_mismatches = 0;  // re-simulated reward differs bitwise
  std::size_t formula_mismatches = 0;     // rewards_from_inputs differs bitwise
};

ReplayCheck replay_trajectory(const TrajectoryLog& log);

}  // namespace pasta

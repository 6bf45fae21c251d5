#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "pasta/error.hpp"
#include "pasta/policy.hpp"

using namespace pasta;

namespace {

double gaussian_log_density(const std::vector<double>& x, const std::vector<double>& mu,
                            const std::vector<double>& log_std) {
  double s = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double sigma = std::exp(log_std[d]);
    s += -0.5 * std::pow((x[d] - mu[d]) / sigma, 2) - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return s;
}

}  // namespace

TEST_CASE("actor log-probability matches the diagonal Gaussian density") {
  Rng rng(11);
  GaussianActor actor(5, 3, 2, 16, rng);
  const std::vector<double> ls{-0.3, 0.2};
  actor.set_log_std(ls);
  const std::vector<double> s{0.1, -0.4, 0.3, 0.9, -0.2};
  const std::vector<double> w{0.2, 0.5, 0.3};
  const std::vector<double> raw{0.7, 1.2};
  const auto lp = actor.log_prob_and_entropy(s, w, raw);
  CHECK(lp.log_prob == doctest::Approx(gaussian_log_density(raw, actor.mean(s, w), ls)).epsilon(1e-13));
  const double h = 2 * 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e) + ls[0] + ls[1];
  CHECK(lp.entropy == doctest::Approx(h).epsilon(1e-13));
}

TEST_CASE("actor mean is inside (0,1) and samples are clamped but keep the raw draw") {
  Rng rng(2);
  GaussianActor actor(3, 2, 3, 8, rng);
  actor.set_log_std(std::vector<double>{1.5, 1.5, 1.5});
  const std::vector<double> s{5.0, -5.0, 2.0};
  const std::vector<double> w{0.5, 0.5};
  int clamped = 0;
  for (int k = 0; k < 200; ++k) {
    const auto smp = actor.act(s, w, rng);
    for (std::size_t d = 0; d < 3; ++d) {
      CHECK(smp.action[d] >= 0.0);
      CHECK(smp.action[d] <= 1.0);
      CHECK(smp.action[d] == std::clamp(smp.raw_action[d], 0.0, 1.0));
      clamped += smp.raw_action[d] != smp.action[d];
    }
    CHECK(smp.log_prob == doctest::Approx(actor.log_prob_and_entropy(s, w, smp.raw_action).log_prob));
  }
  CHECK(clamped > 0);
  for (double m : actor.act_deterministic(s, w)) {
    CHECK(m > 0.0);
    CHECK(m < 1.0);
  }
}

TEST_CASE("log-probability gradient matches central differences") {
  Rng rng(4);
  GaussianActor actor(4, 2, 2, 12, rng);
  actor.set_log_std(std::vector<double>{-0.5, 0.1});
  const std::vector<double> s{0.3, -0.7, 0.2, 0.5};
  const std::vector<double> w{0.4, 0.6};
  const std::vector<double> raw{0.2, 0.9};
  std::vector<double> grad(actor.parameter_count());
  actor.log_prob_gradient(s, w, raw, grad);
  const auto theta = actor.parameters();
  auto f = [&](const std::vector<double>& p) {
    GaussianActor copy = actor;
    copy.assign_parameters(p);
    return copy.log_prob_and_entropy(s, w, raw).log_prob;
  };
  for (std::size_t k = 0; k < theta.size(); ++k) {
    CHECK(oracle::relative_error(grad[k], oracle::central_difference(f, theta, k, 1e-6), 1e-4) < 1e-5);
  }
}

TEST_CASE("entropy gradient only touches log_std") {
  Rng rng(4);
  GaussianActor actor(2, 2, 3, 4, rng);
  std::vector<double> g(actor.parameter_count(), 0.0);
  actor.add_entropy_gradient(0.01, g);
  const std::size_t net = actor.network().parameter_count();
  for (std::size_t k = 0; k < net; ++k) CHECK(g[k] == 0.0);
  for (std::size_t d = 0; d < 3; ++d) CHECK(g[net + d] == doctest::Approx(0.01));
}

TEST_CASE("actor rejects a mismatched state/preference split") {
  Rng rng(1);
  GaussianActor actor(3, 2, 1, 4, rng);
  CHECK_THROWS_AS(actor.mean(std::vector<double>{1, 2}, std::vector<double>{0.2, 0.3, 0.5}), ConfigError);
}

TEST_CASE("critic gradients match central differences for both architectures") {
  for (const bool branched : {true, false}) {
    Rng rng(21);
    std::unique_ptr<Critic> critic;
    if (branched) {
      critic = std::make_unique<BranchedCritic>(6, 3, 10, rng);
    } else {
      critic = std::make_unique<SharedCritic>(6, 3, 10, rng);
    }
    auto p = critic->parameters();
    for (auto& v : p) v += 0.05 * rng.normal();
    critic->assign_parameters(p);
    const std::vector<double> s{0.4, -0.1, 0.8};
    const std::vector<double> w{0.2, 0.3, 0.5};
    const std::vector<double> c{1.0, -0.5, 2.0};
    std::vector<double> grad(critic->parameter_count(), 0.0);
    std::vector<double> values(3);
    critic->accumulate_gradient(s, w, c, grad, values);
    CHECK(values == critic->value_vector(s, w));
    auto f = [&](const std::vector<double>& q) {
      auto copy = critic->clone();
      copy->assign_parameters(q);
      return oracle::dot(copy->value_vector(s, w), c);
    };
    for (std::size_t k = 0; k < p.size(); ++k) {
      CHECK(oracle::relative_error(grad[k], oracle::central_difference(f, p, k, 1e-6), 1e-4) < 1e-5);
    }
  }
}

TEST_CASE("branched heads are independent") {
  Rng rng(8);
  BranchedCritic critic(4, 2, 6, rng);
  const std::vector<double> s{0.1, 0.2};
  const std::vector<double> w{0.5, 0.5};
  const auto before = critic.value_vector(s, w);
  auto flat = critic.parameters();
  const std::size_t off = critic.head_offset(1);
  for (std::size_t k = off; k < flat.size(); ++k) flat[k] += 0.3;
  critic.assign_parameters(flat);
  const auto after = critic.value_vector(s, w);
  CHECK(after[0] == before[0]);
  CHECK(after[1] != before[1]);
}

TEST_CASE("actor and critic checkpoint round trip") {
  Rng rng(3);
  GaussianActor actor(3, 2, 2, 8, rng);
  BranchedCritic critic(5, 2, 8, rng);
  Checkpoint ck;
  actor.save(ck, "actor");
  critic.save(ck, "critic");
  const Checkpoint back = Checkpoint::parse(ck.serialize());
  Rng other(99);
  GaussianActor actor2(3, 2, 2, 8, other);
  BranchedCritic critic2(5, 2, 8, other);
  actor2.load(back, "actor");
  critic2.load(back, "critic");
  CHECK(actor2.parameters() == actor.parameters());
  CHECK(critic2.parameters() == critic.parameters());

  GaussianActor wrong(3, 2, 2, 9, other);
  CHECK_THROWS_AS(wrong.load(back, "actor"), IoError);
}

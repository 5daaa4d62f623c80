#include <doctest.h>

#include <cmath>

#include "coagfrag/errors.hpp"
#include "coagfrag/kernels.hpp"
#include "coagfrag/particle_state.hpp"
#include "coagfrag/rng.hpp"

using namespace coagfrag;

namespace {

ParticleState ps(std::initializer_list<double> v) { return ParticleState(std::vector<double>(v)); }

ParticleState random_state(Philox& rng, std::size_t max_len = 16) {
  std::size_t n = 1 + rng.uniform_below(max_len);
  std::vector<double> m(n);
  for (auto& x : m) x = std::exp(std::log(1e-3) + std::log(1e6) * rng.uniform());
  return ParticleState::from_unsorted(std::move(m));
}

}  // namespace

TEST_CASE("coalesce") {
  CHECK(ps({3, 2, 1}).coalesce(1, 3).masses() == std::vector<double>{4, 2});
  CHECK(ps({1, 1}).coalesce(1, 2).masses() == std::vector<double>{2});
  CHECK(ps({5, 4, 3, 2}).coalesce(2, 3).masses() == std::vector<double>{7, 5, 2});

  CHECK_THROWS_AS(ps({1, 1}).coalesce(2, 1), Error);  // i < j required
  CHECK_THROWS_AS(ps({1, 1}).coalesce(1, 3), Error);
  CHECK_THROWS_AS(ps({1, 1}).coalesce(0, 1), Error);
}

TEST_CASE("fragment") {
  RatioSequence half = RatioSequence::validate({0.5, 0.5});
  CHECK(ps({4, 2}).fragment(1, half).masses() == std::vector<double>{2, 2, 2});

  RatioSequence dusty = RatioSequence::validate({0.5});
  ParticleState f = ps({4, 2}).fragment(1, dusty);
  CHECK(f.masses() == std::vector<double>{2, 2});
  CHECK(f.mass() == 4.0);  // mass 6 -> 4, deficit lost to dust

  RatioSequence uneven = RatioSequence::validate({0.75, 0.25});
  CHECK(ps({4, 2}).fragment(2, uneven).masses() == std::vector<double>{4, 1.5, 0.5});

  CHECK_THROWS_AS(ps({4, 2}).fragment(3, half), Error);
}

TEST_CASE("norms and distances") {
  CHECK(ps({4, 1}).norm_lambda(0.5) == 3.0);
  CHECK(ps({4, 1}).norm_lambda(1.0) == 5.0);
  CHECK(ParticleState().norm_lambda(0.7) == 0.0);
  CHECK_THROWS_AS(ps({1}).norm_lambda(0.0), Error);

  CHECK(dist_weighted(ps({2, 1}), ps({1, 1})) == 0.5);
  CHECK(dist_weighted(ps({2, 1}), ps({2, 1})) == 0.0);
  CHECK(dist_weighted(ps({1}), ParticleState()) == 0.5);

  CHECK(dist_lambda(ps({2, 1}), ps({1, 1}), 1.0) == 1.0);
  CHECK(dist_lambda(ps({4}), ps({1}), 0.5) == 1.0);
  CHECK(dist_lambda(ps({3, 2}), ps({3, 2}), 0.3) == 0.0);
}

TEST_CASE("construction guards") {
  CHECK_THROWS_AS(ps({1, 2}), Error);   // must be non-increasing
  CHECK_THROWS_AS(ps({1, -1}), Error);  // strictly positive
  CHECK(ParticleState::from_unsorted({0.0, 2.0, 1.0}).masses() ==
        std::vector<double>{2, 1});  // zeros dropped, sorted
}

TEST_CASE("jump maps preserve order and mass exactly") {
  Philox rng(31337, 0);
  for (int trial = 0; trial < 5000; ++trial) {
    ParticleState m = random_state(rng);
    if (m.size() >= 2) {
      std::size_t i = 1 + rng.uniform_below(m.size() - 1);
      std::size_t j = i + 1 + rng.uniform_below(m.size() - i);
      ParticleState c = m.coalesce(i, j);
      CHECK(c.size() == m.size() - 1);
      for (std::size_t k = 1; k < c.size(); ++k) CHECK(c.at(k) >= c.at(k + 1));
      // exact conservation as a multiset: the merged value is the float sum
      // of the two removed masses, every other entry is untouched
      std::vector<double> mm = m.masses();
      mm[i - 1] += mm[j - 1];
      mm.erase(mm.begin() + (j - 1));
      std::sort(mm.begin(), mm.end(), std::greater<>());
      CHECK(c.masses() == mm);
    }
    // fragmentation: mass changes by exactly m_i (sum theta - 1) <= 0
    std::size_t fi = 1 + rng.uniform_below(m.size());
    RatioSequence theta = RatioSequence::validate({0.5, 0.25, 0.125});
    ParticleState f = m.fragment(fi, theta);
    CHECK(f.mass() <= m.mass() * (1 + 1e-12));
    for (std::size_t k = 1; k < f.size(); ++k) CHECK(f.at(k) >= f.at(k + 1));
    CHECK(f.size() == m.size() - 1 + theta.size());
  }
}

TEST_CASE("lambda norm identities") {
  Philox rng(4242, 0);
  for (int trial = 0; trial < 3000; ++trial) {
    ParticleState m = random_state(rng);
    double lambda = trial % 3 == 0 ? 1.0 : (trial % 3 == 1 ? 0.5 : 0.3);
    std::size_t i = 1 + rng.uniform_below(m.size());
    RatioSequence theta = RatioSequence::validate({0.6, 0.2, 0.1});
    ParticleState f = m.fragment(i, theta);
    double lhs = f.norm_lambda(lambda) - m.norm_lambda(lambda);
    double rhs = pow_lambda(m.at(i), lambda) * (theta.sum_pow(lambda) - 1.0);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));

    if (m.size() >= 2) {
      ParticleState c = m.coalesce(1, m.size());
      CHECK(c.norm_lambda(lambda) <= m.norm_lambda(lambda) * (1 + 1e-12));
    }
  }
}

TEST_CASE("coalesce merged-rank tracking") {
  std::size_t p = 0;
  ParticleState c = ps({10, 10, 1}).coalesce_tracked(2, 3, &p);
  CHECK(c.masses() == std::vector<double>{11, 10});
  CHECK(p == 1);  // merged particle overtook rank 1
  c = ps({10, 3, 2.5, 2.5}).coalesce_tracked(3, 4, &p);
  CHECK(c.masses() == std::vector<double>{10, 5, 3});
  CHECK(p == 2);
  // ties: existing particles stay ahead of the newcomer
  c = ps({2, 1, 1}).coalesce_tracked(2, 3, &p);
  CHECK(c.masses() == std::vector<double>{2, 2});
  CHECK(p == 2);
}

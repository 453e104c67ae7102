#include <cmath>
#include <random>

#include "doctest.h"
#include "emkit/abo.hpp"
#include "support/oracles.hpp"
#include "support/simulate.hpp"

using namespace emkit;
using namespace emkit::abo;
using doctest::Approx;

namespace {
const BloodTypeCounts kExample{186, 38, 36, 284};
}

TEST_CASE("E-step splits ambiguous phenotypes under HWE") {
  SUBCASE("equal frequencies give a 1:2 homozygote:heterozygote split") {
    const auto g = abo_e_step(kUniformStart, {300, 0, 0, 0});
    CHECK(g.g_aa == Approx(100.0).epsilon(1e-14));
    CHECK(g.g_ao == Approx(200.0).epsilon(1e-14));
  }
  SUBCASE("no O allele forces homozygotes") {
    const auto g = abo_e_step({1.0, 0.0, 0.0}, {10, 0, 0, 0});
    CHECK(g.g_aa == 10.0);
    CHECK(g.g_ao == 0.0);
  }
  SUBCASE("closed form at (0.3, 0.1, 0.6)") {
    // A: 0.09 / (0.09 + 0.36) = 1/5; B: 0.01 / (0.01 + 0.12) = 1/13.
    const auto g = abo_e_step({0.3, 0.1, 0.6}, kExample);
    CHECK(g.g_aa == Approx(186.0 / 5.0).epsilon(1e-13));
    CHECK(g.g_ao == Approx(186.0 * 4.0 / 5.0).epsilon(1e-13));
    CHECK(g.g_bb == Approx(38.0 / 13.0).epsilon(1e-13));
    CHECK(g.g_bo == Approx(38.0 * 12.0 / 13.0).epsilon(1e-13));
    CHECK(g.g_aa + g.g_ao == Approx(186.0).epsilon(1e-14));
    CHECK(g.g_ab == 36.0);
    CHECK(g.g_oo == 284.0);
  }
}

TEST_CASE("E-step rejects a phenotype whose allele has frequency zero") {
  try {
    abo_e_step({0.0, 0.5, 0.5}, {1, 0, 0, 10});
    FAIL("expected impossible_data");
  } catch (const EmError& e) {
    CHECK(e.kind() == ErrorKind::impossible_data);
  }
  // t_A = 0 is fine whatever p_A is.
  const auto g = abo_e_step({0.0, 0.0, 1.0}, {0, 0, 0, 10});
  CHECK(g.g_aa == 0.0);
  CHECK(g.g_ao == 0.0);
}

TEST_CASE("M-step gene counting") {
  ExpectedGenotypeCounts all_ab;
  all_ab.g_ab = 7;
  auto f = abo_m_step(all_ab, 7);
  CHECK(f.p_a == 0.5);
  CHECK(f.p_b == 0.5);
  CHECK(f.p_o == 0.0);

  ExpectedGenotypeCounts all_o;
  all_o.g_oo = 12;
  f = abo_m_step(all_o, 12);
  CHECK(f.p_a == 0.0);
  CHECK(f.p_b == 0.0);
  CHECK(f.p_o == 1.0);

  CHECK_THROWS_AS(abo_m_step(all_o, 0), EmError);
}

TEST_CASE("one EM iteration from 1/3 each matches hand computation") {
  // E-step: g_AA = 62, g_AO = 124, g_BB = 38/3, g_BO = 76/3, g_AB = 36,
  // g_OO = 284; 2n = 1088.
  const auto next = abo_m_step(abo_e_step(kUniformStart, kExample), kExample.total());
  CHECK(next.p_a == Approx(284.0 / 1088.0).epsilon(1e-14));
  CHECK(next.p_b == Approx((260.0 / 3.0) / 1088.0).epsilon(1e-14));
  CHECK(next.p_o == Approx((2152.0 / 3.0) / 1088.0).epsilon(1e-14));
}

TEST_CASE("phenotype log-likelihood") {
  CHECK(abo_log_likelihood({0.0, 0.0, 1.0}, {0, 0, 0, 100}) == 0.0);
  CHECK(abo_log_likelihood({0.5, 0.5, 0.0}, {0, 0, 10, 0}) ==
        Approx(10.0 * std::log(0.5)).epsilon(1e-14));
  CHECK(std::isinf(abo_log_likelihood({0.5, 0.5, 0.0}, {0, 0, 0, 1})));
}

TEST_CASE("EM maximum agrees with grid search on the example counts") {
  const auto run = fit(kExample);
  CHECK(run.trace.converged);
  CHECK(assert_monotone(run.trace, 1e-10));
  const auto oracle = testing::abo_grid_mle({186, 38, 36, 284});
  CHECK(run.final_params.p_a == Approx(oracle.pa).epsilon(1e-4));
  CHECK(run.final_params.p_b == Approx(oracle.pb).epsilon(1e-4));
  CHECK(run.final_params.p_o == Approx(oracle.po).epsilon(1e-4));
  CHECK(abo_log_likelihood(run.final_params, kExample) == Approx(oracle.loglik).epsilon(1e-9));

  SUBCASE("the grid maximum is a fixed point") {
    const AlleleFrequencies mle{oracle.pa, oracle.pb, oracle.po};
    const auto next = abo_m_step(abo_e_step(mle, kExample), kExample.total());
    CHECK(std::abs(next.p_a - mle.p_a) < 1e-6);
    CHECK(std::abs(next.p_b - mle.p_b) < 1e-6);
    CHECK(std::abs(next.p_o - mle.p_o) < 1e-6);
  }
}

TEST_CASE("E-step conservation and M-step simplex on random data") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const auto p = testing::random_simplex<3>(rng, 0.0);
    const AlleleFrequencies freqs{p[0], p[1], p[2]};
    const auto counts = testing::simulate_blood_types(freqs, 50 + rep, rng);
    if (!on_simplex(freqs)) continue;
    const auto g = abo_e_step(freqs, counts);
    CHECK(std::abs(g.g_aa + g.g_ao - static_cast<double>(counts.a)) <= 1e-9);
    CHECK(std::abs(g.g_bb + g.g_bo - static_cast<double>(counts.b)) <= 1e-9);
    CHECK(g.g_ab == static_cast<double>(counts.ab));
    CHECK(g.g_oo == static_cast<double>(counts.o));
    const auto next = abo_m_step(g, counts.total());
    CHECK(std::abs(next.sum() - 1.0) <= 1e-12);
    CHECK(next.p_a >= 0.0);
    CHECK(next.p_b >= 0.0);
    CHECK(next.p_o >= 0.0);
  }
}

TEST_CASE("absorbing zero frequency stays zero") {
  const auto run = fit({40, 0, 0, 60}, {0.5, 0.0, 0.5});
  for (const auto& e : run.trace.entries) CHECK(e.params.p_b == 0.0);
}

TEST_CASE("empty counts are degenerate") {
  CHECK_THROWS_AS(fit({0, 0, 0, 0}), EmError);
}

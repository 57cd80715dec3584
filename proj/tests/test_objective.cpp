// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include <doctest.h>

#include <cmath>
#include <map>
#include <string>

#include "sgrec/errors.hpp"
#include "sgrec/objective.hpp"
#include "testutil.hpp"

using namespace sgrec;
using namespace sgrec::testutil;

namespace {

double eval_loss(const DecoderParams& dec, const EncoderParams& enc, const UserSubgraph& a,
                 const std::vector<Vec>& eps, const SampledBatchPlan& plan, double beta) {
  return loss_and_gradients(dec, enc, a, eps, plan, beta, nullptr, nullptr, nullptr).total;
}

Vec fixed_eps(Rng& rng, int n) {
  Vec eps(n);
  for (auto& e : eps) e = rng.next_normal();
  return eps;
}

}  // namespace

TEST_CASE("an exhaustible stratum is taken whole with weight 1") {
  UserStrata strata;
  strata.by_order = {{{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, {}, {}}};
  NegativePolicy policy;
  policy.default_cap = 10;
  Rng rng(151);
  const auto plan = draw_negatives(strata, policy, rng);
  REQUIRE(plan.strata.size() == 1);
  CHECK(plan.strata[0].weight == 1.0);
  CHECK(plan.strata[0].items.size() == 10);
  CHECK(plan.clamp_warnings == 0);
}

TEST_CASE("empty strata draw nothing") {
  UserStrata strata;
  strata.by_order = {{{}, {}, {}}, {{}, {}, {}}};
  NegativePolicy policy;
  Rng rng(157);
  const auto plan = draw_negatives(strata, policy, rng);
  CHECK(plan.strata.empty());
}

TEST_CASE("explicit oversized per-stratum requests clamp with a warning") {
  UserStrata strata;
  strata.by_order = {{{1, 2, 3}}};
  NegativePolicy policy;
  policy.per_stratum = {100};
  Rng rng(163);
  const auto plan = draw_negatives(strata, policy, rng);
  REQUIRE(plan.strata.size() == 1);
  CHECK(plan.strata[0].items.size() == 3);
  CHECK(plan.strata[0].weight == 1.0);
  CHECK(plan.clamp_warnings == 1);
}

TEST_CASE("within-stratum sampling is uniform") {
  UserStrata strata;
  std::vector<std::int32_t> pool;
  for (int v = 0; v < 40; ++v) pool.push_back(v);
  strata.by_order = {{pool}};
  NegativePolicy policy;
  policy.default_cap = 10;

  std::map<std::int32_t, int> hits;
  const int draws = 4000;
  for (int s = 0; s < draws; ++s) {
    Rng rng = Rng::derive(9, rng_streams::kNegatives, 0, static_cast<std::uint64_t>(s));
    const auto plan = draw_negatives(strata, policy, rng);
    for (const auto v : plan.strata[0].items) ++hits[v];
  }
  // Each item appears with p = 10/40 per draw: mean 1000, sd ~ sqrt(4000*.25*.75) ~ 27.
  const double sd = std::sqrt(draws * 0.25 * 0.75);
  for (const auto& [v, count] : hits) CHECK(std::abs(count - 1000.0) < 4.5 * sd);
  CHECK(hits.size() == 40);
}

TEST_CASE("exhaustive sampling reproduces the exact log-likelihood") {
  Rng rng(167);
  for (int trial = 0; trial < 6; ++trial) {
    const auto t = make_tiny(rng);
    const int probe = static_cast<int>(rng.next_below(t.subgraphs.size()));
    const Vec z = fixed_eps(rng, 3);
    const auto fwd = decoder_forward(t.dec, z);
    const auto plan = exhaustive_plan(t.strata.users[probe]);
    const auto [l1, l0] = estimated_log_likelihood(t.dec, fwd, t.subgraphs[probe], plan);
    const double full = log_likelihood_full(t.dec, z, t.subgraphs[probe]);
    CHECK(l1 + l0 == doctest::Approx(full).epsilon(1e-12));
  }
}

TEST_CASE("uniform F reduces the estimator to weighted counting") {
  Rng rng(173);
  const auto t = make_tiny(rng);
  const DecoderParams zero = DecoderParams::zeros_like(t.dec);
  const auto fwd = decoder_forward(zero, Vec(3, 0.0));
  NegativePolicy policy;
  policy.default_cap = 2;
  Rng draw_rng(31);
  const auto plan = draw_negatives(t.strata.users[0], policy, draw_rng);
  const auto [l1, l0] = estimated_log_likelihood(zero, fwd, t.subgraphs[0], plan);

  const double n1 = static_cast<double>(t.subgraphs[0].total_ones());
  double weighted = 0.0;
  for (const auto& cell : plan.strata) weighted += cell.weight * cell.items.size();
  CHECK(l1 == doctest::Approx(n1 * std::log(0.5)).epsilon(1e-12));
  CHECK(l0 == doctest::Approx(weighted * std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("the stratified estimator is unbiased") {
  Rng rng(179);
  const auto t = make_tiny(rng, 5, 8);
  const int probe = 0;
  const Vec z = fixed_eps(rng, 3);
  const auto fwd = decoder_forward(t.dec, z);

  const auto exhaust = exhaustive_plan(t.strata.users[probe]);
  const double exact_l0 =
      estimated_log_likelihood(t.dec, fwd, t.subgraphs[probe], exhaust).second;

  NegativePolicy policy;
  policy.default_cap = 2;
  const int draws = 2000;
  double mean = 0.0;
  for (int s = 0; s < draws; ++s) {
    Rng draw_rng = Rng::derive(11, rng_streams::kNegatives, 1, static_cast<std::uint64_t>(s));
    const auto plan = draw_negatives(t.strata.users[probe], policy, draw_rng);
    mean += estimated_log_likelihood(t.dec, fwd, t.subgraphs[probe], plan).second;
  }
  mean /= draws;
  CHECK(std::abs(mean - exact_l0) < 0.03 * std::abs(exact_l0));
}

TEST_CASE("loss breakdown total is consistent with its parts") {
  Rng rng(181);
  const auto t = make_tiny(rng);
  NegativePolicy policy;
  Rng draw_rng(3);
  const auto plan = draw_negatives(t.strata.users[1], policy, draw_rng);
  const auto breakdown = loss_and_gradients(t.dec, t.enc, t.subgraphs[1],
                                            {fixed_eps(rng, 3)}, plan, 0.7, nullptr, nullptr,
                                            nullptr);
  CHECK(breakdown.total ==
        doctest::Approx(-(breakdown.positive + breakdown.negative) + 0.7 * breakdown.kl)
            .epsilon(1e-12));
  CHECK(breakdown.beta == 0.7);
}

TEST_CASE("zero networks cut the encoder out of the objective") {
  Rng rng(191);
  auto t = make_tiny(rng);
  // Zero every decoder weight except gamma: F no longer depends on z.
  DecoderParams dec = DecoderParams::zeros_like(t.dec);
  dec.gamma = t.dec.gamma;

  DecoderParams dgrad = DecoderParams::zeros_like(dec);
  EncoderParams egrad = EncoderParams::zeros_like(t.enc);
  NegativePolicy policy;
  Rng draw_rng(5);
  const auto plan = draw_negatives(t.strata.users[0], policy, draw_rng);
  loss_and_gradients(dec, t.enc, t.subgraphs[0], {fixed_eps(rng, 3)}, plan, 0.0, nullptr,
                     &dgrad, &egrad);
  visit_encoder_tensors(egrad, [](const std::string&, const Vec& v) {
    for (const double x : v) CHECK(x == 0.0);
  });
}

TEST_CASE("gamma gradient at the zero decoder follows the +-1/2 pattern") {
  Rng rng(193);
  auto t = make_tiny(rng);
  DecoderParams dec = DecoderParams::zeros_like(t.dec);
  EncoderParams enc = EncoderParams::zeros_like(t.enc);

  DecoderParams dgrad = DecoderParams::zeros_like(dec);
  EncoderParams egrad = EncoderParams::zeros_like(enc);
  const auto plan = exhaustive_plan(t.strata.users[0]);
  loss_and_gradients(dec, enc, t.subgraphs[0], {Vec(3, 0.0)}, plan, 0.0, nullptr, &dgrad,
                     &egrad);
  const auto& a = t.subgraphs[0];
  for (int k = 0; k < a.orders(); ++k) {
    for (int v = 0; v < a.num_items; ++v) {
      const double want = a.is_one(k, v) ? -0.5 : 0.5;  // -(A - F) at F = 1/2, weight 1
      CHECK(dgrad.gamma(k, v) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(197);
  const double step = 1e-5, tol = 1e-4;
  for (int trial = 0; trial < 8; ++trial) {
    auto t = make_tiny(rng);
    const int probe = static_cast<int>(rng.next_below(t.subgraphs.size()));
    const std::vector<Vec> eps = {fixed_eps(rng, 3)};
    NegativePolicy policy;
    policy.default_cap = 3;
    Rng draw_rng = Rng::derive(13, rng_streams::kNegatives, 2, trial);
    const auto plan = draw_negatives(t.strata.users[probe], policy, draw_rng);

    for (const double beta : {0.0, 1.0}) {
      DecoderParams dgrad = DecoderParams::zeros_like(t.dec);
      EncoderParams egrad = EncoderParams::zeros_like(t.enc);
      loss_and_gradients(t.dec, t.enc, t.subgraphs[probe], eps, plan, beta, nullptr, &dgrad,
                         &egrad);

      std::vector<Vec*> params, grads;
      visit_decoder_tensors(t.dec, [&](const std::string&, Vec& v) { params.push_back(&v); });
      visit_decoder_tensors(dgrad, [&](const std::string&, Vec& v) { grads.push_back(&v); });
      visit_encoder_tensors(t.enc, [&](const std::string&, Vec& v) { params.push_back(&v); });
      visit_encoder_tensors(egrad, [&](const std::string&, Vec& v) { grads.push_back(&v); });

      for (std::size_t ti = 0; ti < params.size(); ++ti) {
        Vec& tensor = *params[ti];
        for (std::size_t i = 0; i < tensor.size(); ++i) {
          const double saved = tensor[i];
          tensor[i] = saved + step;
          const double up = eval_loss(t.dec, t.enc, t.subgraphs[probe], eps, plan, beta);
          tensor[i] = saved - step;
          const double down = eval_loss(t.dec, t.enc, t.subgraphs[probe], eps, plan, beta);
          tensor[i] = saved;
          const double fd = (up - down) / (2.0 * step);
          const double analytic = (*grads[ti])[i];
          CHECK(std::abs(analytic - fd) <= tol * (1.0 + std::max(std::abs(analytic), std::abs(fd))));
        }
      }
    }
  }
}

TEST_CASE("multi-sample losses average the per-sample estimates") {
  Rng rng(199);
  const auto t = make_tiny(rng);
  const auto plan = exhaustive_plan(t.strata.users[0]);
  const Vec e1 = fixed_eps(rng, 3), e2 = fixed_eps(rng, 3);
  const auto b1 = loss_and_gradients(t.dec, t.enc, t.subgraphs[0], {e1}, plan, 0.2, nullptr,
                                     nullptr, nullptr);
  const auto b2 = loss_and_gradients(t.dec, t.enc, t.subgraphs[0], {e2}, plan, 0.2, nullptr,
                                     nullptr, nullptr);
  const auto both = loss_and_gradients(t.dec, t.enc, t.subgraphs[0], {e1, e2}, plan, 0.2,
                                       nullptr, nullptr, nullptr);
  CHECK(both.positive == doctest::Approx(0.5 * (b1.positive + b2.positive)).epsilon(1e-12));
  CHECK(both.negative == doctest::Approx(0.5 * (b1.negative + b2.negative)).epsilon(1e-12));
  CHECK(both.kl == doctest::Approx(b1.kl).epsilon(1e-12));
}

#include <doctest.h>

#include <set>

#include "h2nmf/error.hpp"
#include "h2nmf/rank2nmf.hpp"
#include "oracles.hpp"

using namespace h2nmf;

namespace {

void check_factor_invariants(const Matrix& m, const Rank2Factors& f) {
  CHECK(f.w.minCoeff() >= 0.0);
  CHECK(f.h.minCoeff() >= 0.0);
  CHECK(f.selected[0] != f.selected[1]);
  CHECK(f.selected[0] < static_cast<std::size_t>(m.cols()));
  CHECK(f.selected[1] < static_cast<std::size_t>(m.cols()));
  const Matrix wh = f.w * f.h;
  const double expanded = m.squaredNorm() - 2.0 * (m.array() * wh.array()).sum() + wh.squaredNorm();
  CHECK(f.residual_fro * f.residual_fro == doctest::Approx(std::max(expanded, 0.0)).epsilon(1e-6).scale(m.squaredNorm()));
}

}  // namespace

TEST_CASE("rank-two column-stochastic data is factored exactly") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    const Matrix m = oracle::simplex_columns(rng, 10, 2) * oracle::simplex_columns(rng, 2, 30);
    const Rank2Factors f = rank2_nmf(m);
    check_factor_invariants(m, f);
    CHECK(f.residual_fro <= 1e-8 * m.norm());
  }
}

TEST_CASE("rank-one input") {
  std::mt19937_64 rng(22);
  const Vector w = oracle::uniform(rng, 8, 1);
  const Matrix scale = oracle::uniform(rng, 1, 12, 0.5, 2.0);
  const Matrix m = w * scale;
  const Rank2Factors f = rank2_nmf(m);
  check_factor_invariants(m, f);
  CHECK(f.residual_fro <= 1e-8 * m.norm());
}

TEST_CASE("pure-pixel data with varying illumination") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 20; ++t) {
    const oracle::Separable s = oracle::separable(rng, 15, 2, 40);
    const Rank2Factors f = rank2_nmf(s.m);
    check_factor_invariants(s.m, f);
    CHECK(f.residual_fro <= 1e-8 * s.m.norm());
    CHECK(std::set<std::size_t>(f.selected.begin(), f.selected.end()) ==
          std::set<std::size_t>(s.vertex_column.begin(), s.vertex_column.end()));
  }
}

TEST_CASE("rank2_nmf errors") {
  CHECK_THROWS_AS(rank2_nmf(Matrix::Ones(3, 1)), Error);
  try {
    rank2_nmf(Matrix::Ones(3, 1));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDomain);
  }
  try {
    rank2_nmf(Matrix::Zero(3, 4));
    FAIL("expected degenerate factors");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegenerateFactors);
  }
}

TEST_CASE("random nonnegative data keeps nonnegative factors") {
  std::mt19937_64 rng(24);
  for (int t = 0; t < 20; ++t) {
    const Matrix m = oracle::uniform(rng, 6 + t, 10 + 3 * t);
    const Rank2Factors f = rank2_nmf(m);
    check_factor_invariants(m, f);
    // Never better than the unconstrained rank-two optimum.
    CHECK(f.residual_fro >= (m - oracle::best_rank_k(m, 2)).norm() - 1e-9 * m.norm());
  }
}

TEST_CASE("nonnegativity condition on exact rank two") {
  std::mt19937_64 rng(25);
  const Matrix m = (oracle::uniform(rng, 10, 2, 1.0, 2.0) * oracle::uniform(rng, 2, 20, 0.6, 1.0));
  REQUIRE(m.minCoeff() >= 1.0);
  const NonnegRank2Report r = check_nonneg_rank2_condition(m);
  CHECK(r.condition_holds);
  CHECK(r.fraction_nonneg == 1.0);
  CHECK(r.sigma3_bound < 1e-6);
}

TEST_CASE("nonnegativity condition with a tiny perturbation") {
  std::mt19937_64 rng(26);
  Matrix m = oracle::uniform(rng, 10, 2, 0.5, 1.0) * oracle::simplex_columns(rng, 2, 20);
  m += 1e-6 * oracle::uniform(rng, 10, 20, -1.0, 1.0);
  const NonnegRank2Report r = check_nonneg_rank2_condition(m);
  const double sigma3 = oracle::singular_values(m)(2);
  CHECK(r.sigma3_bound >= sigma3 * (1 - 1e-6));
  CHECK(r.min_entry >= 0.4);
  CHECK(r.condition_holds);
  CHECK(r.fraction_nonneg == 1.0);
}

TEST_CASE("condition implies a nonnegative rank-two approximation") {
  std::mt19937_64 rng(27);
  int held = 0;
  for (int t = 0; t < 100; ++t) {
    Matrix m = oracle::uniform(rng, 8, 2, 0.2, 1.0) * oracle::uniform(rng, 2, 15, 0.2, 1.0);
    m += (t % 4) * 0.05 * oracle::uniform(rng, 8, 15);
    const NonnegRank2Report r = check_nonneg_rank2_condition(m);
    if (!r.condition_holds) continue;
    ++held;
    CHECK(r.fraction_nonneg == 1.0);
    CHECK(oracle::best_rank_k(m, 2).minCoeff() >= -1e-10);
  }
  CHECK(held > 20);
}

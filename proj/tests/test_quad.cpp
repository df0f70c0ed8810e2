#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "oracles.hpp"
#include "pwsync/errors.hpp"
#include "pwsync/quad.hpp"

using namespace pwsync;

namespace {

const Matrix kRelayA{{-1, -1}, {2, 3}};
const Matrix kSprottA{{0, 1, 0}, {0, 0, 1}, {-1, -1, -0.5}};

SymMatrix eye(std::size_t n) { return SymMatrix::identity(n); }

// Margin of one pair recomputed from the written-out field.
double pair_margin(const std::function<Vector(const Vector&)>& f, const Matrix& Q, const Vector& a, const Vector& b) {
  const Vector fa = f(a);
  const Vector fb = f(b);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) m += (a[i] - b[i]) * Q(i, j) * (a[j] - b[j]);
    m -= (a[i] - b[i]) * (fa[i] - fb[i]);
  }
  return m;
}

double oracle_spectral_radius(const Matrix& sym) {
  const Vector ev = oracle::char_poly_eigenvalues(sym);
  return std::max(std::abs(ev.front()), std::abs(ev.back()));
}

}  // namespace

TEST_SUITE("quad") {
  TEST_CASE("linear field with Q = sym(A) is the equality case") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Matrix A = testing::random_matrix(3, seed, 2.0);
      const auto spec = make_affine_relay(A, {}, {});
      const QuadReport r = check_quad(spec, eye(3), sym_part(A), Box::symmetric(3, 5.0), {}, {.samples = 20000, .seed = seed});
      CHECK(std::abs(r.min_margin) <= 1e-9);
      CHECK(r.passed);
      CHECK(r.sampled_only);
      CHECK(r.samples == 20000);

      // Q = sym(A) + δI leaves exactly δ‖e‖² at the witness.
      const double delta = 0.3;
      const QuadReport s = check_quad(spec, eye(3), sym_part(A) + delta * Matrix::identity(3), Box::symmetric(3, 5.0), {},
                                      {.samples = 20000, .seed = seed});
      CHECK(s.passed);
      double e2 = 0.0;
      for (std::size_t i = 0; i < 3; ++i) e2 += std::pow(s.witness_xi1[i] - s.witness_xi2[i], 2);
      CHECK(s.min_margin >= 0.0);
      CHECK(std::abs(s.min_margin - delta * e2) <= 1e-9);
    }
  }

  TEST_CASE("relay with P = I, Q = 3.06 I is falsified") {
    const auto spec = builtin_spec("relay");
    const Matrix Q = 3.06 * Matrix::identity(2);
    const QuadReport r = check_quad(spec, eye(2), Q, Box::symmetric(2, 5.0), {}, {.samples = 100000, .seed = 1});
    CHECK_FALSE(r.passed);
    CHECK(r.min_margin < -1e-9);
    // The witness reproduces the reported margin from the formula.
    CHECK(std::abs(pair_margin(oracle::relay, Q, r.witness_xi1, r.witness_xi2) - r.min_margin) <= 1e-9);
    // Dense grid confirms the violation independently.
    CHECK(oracle::grid_min_margin(oracle::relay, 2, 1.0, 41, Q) < 0.0);
  }

  TEST_CASE("relay with Q = 2.5 I fails, confirmed by grid search") {
    const auto spec = builtin_spec("relay");
    const Matrix Q = 2.5 * Matrix::identity(2);
    const QuadReport r = check_quad(spec, eye(2), Q, Box::symmetric(2, 5.0), {}, {.samples = 100000, .seed = 2});
    CHECK_FALSE(r.passed);
    REQUIRE(r.witness_xi1.size() == 2);
    CHECK(pair_margin(oracle::relay, Q, r.witness_xi1, r.witness_xi2) < 0.0);
    CHECK(oracle::grid_min_margin(oracle::relay, 2, 5.0, 41, Q) < 0.0);
  }

  TEST_CASE("relay passes with a P aligned to the relay direction") {
    // P d = -2 P (0,1) = -2 w for w = (1,1) makes the relay increment nonpositive.
    const SymMatrix P(Matrix{{2, 1}, {1, 1}});
    const double q = lambda_max(SymMatrix::from_sym_part(P.matrix() * kRelayA));
    const QuadReport r = check_quad(builtin_spec("relay"), P, q * Matrix::identity(2), Box::symmetric(2, 5.0), {},
                                    {.samples = 100000, .seed = 3});
    CHECK(r.passed);
    CHECK_THROWS_AS(check_quad(builtin_spec("relay"), SymMatrix::diagonal(Vector{1, 0}), Matrix::identity(2),
                               Box::symmetric(2, 1.0), {}),
                    ParameterError);
  }

  TEST_CASE("oscillator") {
    const auto spec = builtin_spec(SystemKind::pws_oscillator);
    const Interval t{0.0, 2.0 * std::numbers::pi};
    const QuadReport ok = check_quad(spec, eye(2), Matrix::diagonal(Vector{0, 2}), Box::symmetric(2, 4.0), t,
                                     {.samples = 50000, .seed = 4});
    CHECK(ok.passed);
    const QuadReport bad = check_quad(spec, eye(2), Matrix::diagonal(Vector{0, 1}), Box::symmetric(2, 4.0), t,
                                      {.samples = 50000, .seed = 4});
    CHECK_FALSE(bad.passed);
    CHECK(bad.witness_t >= t.lo);
    CHECK(bad.witness_t <= t.hi);
  }

  TEST_CASE("sprott relaxed QUAD") {
    const auto spec = builtin_spec("sprott");
    const Box box = Box::symmetric(3, 3.0);
    const SamplingOptions opt{.samples = 100000, .seed = 5};
    const QuadReport third = check_relaxed_quad(spec, eye(3), kSprottA, Vector{0, 0, 2}, box, {}, opt);
    CHECK(third.passed);
    CHECK(third.condition == QuadCondition::relaxed_quad);

    // m = (2,0,0) leaves the relay cross term e₃(s1 - s2) uncovered.
    const QuadReport first = check_relaxed_quad(spec, eye(3), kSprottA, Vector{2, 0, 0}, box, {}, opt);
    CHECK_FALSE(first.passed);
    CHECK(oracle::grid_min_margin(oracle::sprott, 3, 1.0, 9, kSprottA, Vector{2, 0, 0}) < 0.0);

    const QuadReport zero = check_relaxed_quad(spec, eye(3), kSprottA, Vector{0, 0, 0}, box, {}, opt);
    CHECK_FALSE(zero.passed);
    CHECK(oracle::grid_min_margin(oracle::sprott, 3, 1.0, 9, kSprottA) < 0.0);
    const QuadReport plain = check_quad(spec, eye(3), kSprottA, box, {}, opt);
    CHECK(plain.passed == zero.passed);
    CHECK(plain.min_margin == zero.min_margin);

    CHECK_THROWS_AS(check_relaxed_quad(spec, eye(3), kSprottA, Vector{-1, 0, 0}, box, {}, opt), ParameterError);
  }

  TEST_CASE("sampling is reproducible from the seed") {
    const auto spec = builtin_spec("relay");
    const SamplingOptions opt{.samples = 5000, .seed = 9};
    const QuadReport a = check_quad(spec, eye(2), 2.5 * Matrix::identity(2), Box::symmetric(2, 5.0), {}, opt);
    const QuadReport b = check_quad(spec, eye(2), 2.5 * Matrix::identity(2), Box::symmetric(2, 5.0), {}, opt);
    CHECK(a.min_margin == b.min_margin);
    CHECK(a.witness_xi1 == b.witness_xi1);
  }

  TEST_CASE("coupling assumption") {
    const Box box = Box::symmetric(2, 3.0);
    const SamplingOptions opt{.samples = 20000, .seed = 6};
    const CouplingReport unit = check_coupling_assumption({Matrix::identity(2), 1.0}, eye(2), std::nullopt, box, opt);
    CHECK(unit.bound.passed);
    CHECK(unit.vanishes_on_diagonal);
    CHECK(unit.antisymmetric);
    CHECK(std::abs(unit.bound.min_margin) <= 1e-9);
    CHECK(unit.bound.condition == QuadCondition::coupling);

    const CouplingReport partial =
        check_coupling_assumption({Matrix::diagonal(Vector{0, 1}), 1.0}, eye(2), std::nullopt, box, opt);
    CHECK(partial.bound.passed);
    CHECK(partial.G == Matrix::diagonal(Vector{0, 1}));

    const Matrix gamma = testing::random_spd(3, 17) + Matrix{{0, 0.4, 0}, {-0.4, 0, 0}, {0, 0, 0}};
    const CouplingReport pd = check_coupling_assumption({gamma, 0.7}, eye(3), std::nullopt, Box::symmetric(3, 3.0), opt);
    CHECK(pd.bound.passed);
    CHECK(std::abs(pd.bound.min_margin) <= 1e-9);
    CHECK(max_abs_diff(pd.G, sym_part(gamma)) <= 1e-15);

    // Demanding more than sym(PΓ) must fail.
    const CouplingReport greedy = check_coupling_assumption({Matrix::identity(2), 1.0}, eye(2),
                                                            SymMatrix(2.0 * Matrix::identity(2)), box, opt);
    CHECK_FALSE(greedy.bound.passed);
    CHECK(greedy.vanishes_on_diagonal);
  }

  TEST_CASE("threshold T1") {
    const ThresholdReport r = threshold_t1(3.06 * Matrix::identity(2), 14.80, eye(2));
    CHECK(r.c_star == doctest::Approx(0.2068).epsilon(0.005 / 0.2068));
    CHECK(r.c_star == doctest::Approx(3.06 / 14.80));
    CHECK(r.theorem == Theorem::T1);
    CHECK(r.c_comparison == Comparison::strict);
    CHECK_FALSE(r.cd_star.has_value());
    CHECK_FALSE(r.satisfied_by(r.c_star));
    CHECK(r.satisfied_by(r.c_star * 1.0001));

    CHECK(threshold_t1(Matrix(2, 2), 14.80, eye(2)).c_star == 0.0);

    const auto L3 = build_path(3);  // λ₂ = 1
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const Matrix Q = testing::random_symmetric(3, seed, 2.0);
      CHECK(threshold_t1(Q, L3, eye(3)).c_star == doctest::Approx(oracle_spectral_radius(Q)).epsilon(1e-9));
    }

    CHECK_THROWS_AS(threshold_t1(Matrix::identity(2), 0.0, eye(2)), HypothesisViolation);
    CHECK_THROWS_AS(threshold_t1(Matrix::identity(2), LaplacianMatrix::from_edges(3, std::vector<Edge>{{0, 1}}), eye(2)),
                    HypothesisViolation);
    CHECK_THROWS_AS(threshold_t1(Matrix::identity(2), 1.0, SymMatrix::diagonal(Vector{1, 0})), HypothesisViolation);
  }

  TEST_CASE("threshold T1 scaling and orthogonal invariance") {
    const Matrix Q = testing::random_matrix(3, 40);
    const SymMatrix G(testing::random_spd(3, 41));
    const double base = threshold_t1(Q, 2.0, G).c_star;
    CHECK(threshold_t1(2.5 * Q, 2.0, G).c_star == doctest::Approx(2.5 * base));
    CHECK(threshold_t1(Q, 2.0, SymMatrix(4.0 * G.matrix())).c_star == doctest::Approx(base / 4.0));

    const Matrix T = testing::random_orthogonal(3, 42);
    const Matrix Qr = T.transpose() * Q * T;
    const SymMatrix Gr(sym_part(T.transpose() * G.matrix() * T));
    CHECK(threshold_t1(Qr, 2.0, Gr).c_star == doctest::Approx(base).epsilon(1e-10));
  }

  TEST_CASE("threshold T2") {
    const QSplit osc(-1.0 * Matrix::identity(2), SymMatrix::diagonal(Vector{0, 4}));
    const ThresholdReport r = threshold_t2(osc, SymMatrix::diagonal(Vector{0, 1}), 14.80);
    CHECK(r.c_star == doctest::Approx(0.2703).epsilon(0.005 / 0.2703));
    CHECK(r.c_star == doctest::Approx(4.0 / 14.80));
    CHECK(r.c_comparison == Comparison::non_strict);
    CHECK(r.satisfied_by(r.c_star));
    CHECK_FALSE(r.satisfied_by(r.c_star * 0.999));

    const QSplit nonpos(-1.0 * Matrix::identity(2), SymMatrix::diagonal(Vector{-1, 0}));
    CHECK(threshold_t2(nonpos, eye(2), 3.0).c_star == 0.0);

    const Matrix T = testing::random_orthogonal(2, 43);
    const SymMatrix qp(sym_part(T * Matrix::diagonal(Vector{1, 2}) * T.transpose()));
    const SymMatrix g(sym_part(T * Matrix::diagonal(Vector{3, 4}) * T.transpose()));
    const ThresholdReport paired = threshold_t2(QSplit(-1.0 * Matrix::identity(2), qp), g, build_path(2));
    CHECK(paired.c_star == doctest::Approx(0.25).epsilon(1e-10));

    // Invariance under a common rotation.
    const Matrix R = testing::random_orthogonal(2, 44);
    const SymMatrix qp_r(sym_part(R.transpose() * qp.matrix() * R));
    const SymMatrix g_r(sym_part(R.transpose() * g.matrix() * R));
    CHECK(threshold_t2(QSplit(-1.0 * Matrix::identity(2), qp_r), g_r, 2.0).c_star == doctest::Approx(0.25).epsilon(1e-9));

    const QSplit cross(-1.0 * Matrix::identity(2), SymMatrix(Matrix{{0, 1}, {1, 0}}));
    CHECK_THROWS_AS(threshold_t2(cross, SymMatrix::diagonal(Vector{1, 2}), 1.0), HypothesisViolation);
    CHECK_THROWS_AS(threshold_t2(osc, SymMatrix::diagonal(Vector{1, 0}), 1.0), HypothesisViolation);
    CHECK_THROWS_AS(threshold_t2(osc, SymMatrix::diagonal(Vector{0, 1}), 0.0), HypothesisViolation);
  }

  TEST_CASE("threshold C1 and its agreement with T2") {
    CHECK(threshold_c1(Vector{0, 4}, Vector{0, 1}, 14.80).c_star == doctest::Approx(4.0 / 14.80));
    CHECK(threshold_c1(Vector{-1, 0, -3}, Vector{1, 1, 1}, 2.0).c_star == 0.0);
    CHECK(threshold_c1(Vector{1, 2}, Vector{2, 1}, build_complete(2)).c_star == doctest::Approx(1.0));
    CHECK(threshold_c1(Vector{1, 2}, Vector{2, 1}, 2.0).theorem == Theorem::C1);
    CHECK_THROWS_AS(threshold_c1(Vector{1, 2}, Vector{0, 1}, 2.0), HypothesisViolation);
    CHECK_THROWS_AS(threshold_c1(Vector{1, 2}, Vector{1, -1}, 2.0), HypothesisViolation);

    for (double q : {-2.0, 0.5, 3.0})
      for (double gamma : {0.5, 2.0}) {
        const QSplit split(-1.0 * Matrix::identity(3), SymMatrix(q * Matrix::identity(3)));
        const double t2 = threshold_t2(split, SymMatrix(gamma * Matrix::identity(3)), 1.7).c_star;
        const double c1 = threshold_c1(Vector(3, q), Vector(3, gamma), 1.7).c_star;
        CHECK(t2 == doctest::Approx(c1));
      }
  }

  TEST_CASE("threshold T3") {
    const Matrix I3 = Matrix::identity(3);
    const ThresholdReport r = threshold_t3(kSprottA, Vector{2, 0, 0}, eye(3), I3, I3);
    CHECK(r.c_star == doctest::Approx(0.85).epsilon(0.005 / 0.85));
    CHECK(r.cd_star.value() == 1.0);
    CHECK(r.inputs.q_norm.value() == doctest::Approx(1.70).epsilon(0.01 / 1.70));
    CHECK(r.c_comparison == Comparison::strict);
    CHECK(r.satisfied_by(1.002 * r.c_star, 1.0));
    CHECK_FALSE(r.satisfied_by(r.c_star, 1.0));
    CHECK_FALSE(r.satisfied_by(1.002 * r.c_star, 0.999));

    CHECK_THROWS_AS(threshold_t3(kSprottA, Vector{0, 0, 0}, eye(3), I3, I3), HypothesisViolation);
    const double eps = 1e-3;
    CHECK(threshold_t3(kSprottA, Vector{eps, 0, 0}, eye(3), I3, I3).cd_star.value() == doctest::Approx(eps / 2));
    CHECK(threshold_t3(kSprottA, Vector{0, 3, 1}, eye(3), I3, Matrix::diagonal(Vector{1, 2, 4})).cd_star.value() ==
          doctest::Approx(0.75));

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Matrix gamma = testing::random_spd(3, seed + 50);
      const Matrix Q = testing::random_symmetric(3, seed + 60, 2.0);
      const Vector g_ev = oracle::char_poly_eigenvalues(sym_part(gamma));
      const double expect = oracle_spectral_radius(Q) / (2.0 * g_ev.front());
      CHECK(threshold_t3(Q, Vector{1, 0, 0}, eye(3), gamma, I3).c_star == doctest::Approx(expect).epsilon(1e-8));
    }

    CHECK_THROWS_AS(threshold_t3(kSprottA, Vector{1, 0, 0}, eye(3), I3, Matrix{{1, 0.5, 0}, {0, 1, 0}, {0, 0, 1}}),
                    HypothesisViolation);
    CHECK_THROWS_AS(threshold_t3(kSprottA, Vector{1, 0, 0}, eye(3), I3, Matrix::diagonal(Vector{0, 1, 1})),
                    HypothesisViolation);
    CHECK_THROWS_AS(threshold_t3(kSprottA, Vector{1, 0, 0}, eye(3), -1.0 * I3, I3), HypothesisViolation);
  }

  TEST_CASE("threshold T4") {
    const Matrix I2 = Matrix::identity(2);
    const QSplit nonpos(-1.0 * I2, SymMatrix::diagonal(Vector{-1, 0}));
    const ThresholdReport z = threshold_t4(nonpos, Vector{1, 3}, eye(2), I2, I2);
    CHECK(z.c_star == 0.0);
    CHECK(z.cd_star.value() == doctest::Approx(1.5));

    const QSplit osc(-1.0 * I2, SymMatrix::diagonal(Vector{0, 4}));
    const ThresholdReport r = threshold_t4(osc, Vector{1, 0}, eye(2), Matrix::diagonal(Vector{0, 1}), I2);
    CHECK(r.c_star == doctest::Approx(2.0));
    CHECK(r.cd_star.value() == doctest::Approx(0.5));
    CHECK(r.theorem == Theorem::T4);

    const QSplit zero(-1.0 * I2, SymMatrix(Matrix(2, 2)));
    const ThresholdReport d = threshold_t4(zero, Vector{2, 2}, eye(2), I2, Matrix::diagonal(Vector{1, 2}));
    CHECK(d.c_star == 0.0);
    CHECK(d.cd_star.value() == doctest::Approx(1.0));

    CHECK_THROWS_AS(threshold_t4(osc, Vector{1, 0}, eye(2), Matrix{{1, 1}, {0, 1}}, I2), HypothesisViolation);
  }

  TEST_CASE("Q split") {
    const Matrix q_minus{{-1, 1}, {0, -1}};  // non-symmetric, sym part negative definite
    const QSplit s(q_minus, SymMatrix::diagonal(Vector{0, 4}));
    CHECK(s.total() == Matrix{{-1, 1}, {0, 3}});
    CHECK_NOTHROW(QSplit::of(Matrix{{-1, 1}, {0, 3}}, q_minus, SymMatrix::diagonal(Vector{0, 4})));
    CHECK_THROWS_AS(QSplit::of(Matrix{{-1, 1}, {0, 3.1}}, q_minus, SymMatrix::diagonal(Vector{0, 4})),
                    HypothesisViolation);
    CHECK_THROWS_AS(QSplit(Matrix{{-1, 2}, {0, -1}}, SymMatrix::identity(2)), HypothesisViolation);
    CHECK_THROWS_AS(QSplit(Matrix(2, 2), SymMatrix::identity(2)), HypothesisViolation);
  }

  TEST_CASE("simultaneous diagonalisation") {
    const auto diag = simultaneous_diag(SymMatrix::diagonal(Vector{0, 4}), SymMatrix::diagonal(Vector{0, 1}));
    REQUIRE(diag);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(diag.basis->T(i, j)) == (i == j ? 1.0 : 0.0));

    const SymMatrix qp(testing::random_symmetric(4, 70));
    const auto with_identity = simultaneous_diag(qp, eye(4));
    REQUIRE(with_identity);
    const Matrix& T = with_identity.basis->T;
    const Matrix D = T.transpose() * qp.matrix() * T;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        if (i != j) CHECK(std::abs(D(i, j)) <= 1e-8);

    const auto fail = simultaneous_diag(SymMatrix(Matrix{{0, 1}, {1, 0}}), SymMatrix::diagonal(Vector{1, 2}));
    CHECK_FALSE(fail);
    // Commutator [[0,1],[-1,0]] has spectral norm 1.
    CHECK(fail.commutator_norm == doctest::Approx(1.0).epsilon(1e-9));

    // Repeated eigenvalues of G: the block has to be refined by Q′.
    const Matrix R = testing::random_orthogonal(4, 71);
    const SymMatrix G(sym_part(R * Matrix::diagonal(Vector{1, 1, 2, 2}) * R.transpose()));
    const SymMatrix Q(sym_part(R * Matrix::diagonal(Vector{3, 5, 7, -1}) * R.transpose()));
    const auto both = simultaneous_diag(Q, G);
    REQUIRE(both);
    const Matrix& B = both.basis->T;
    const Matrix DQ = B.transpose() * Q.matrix() * B;
    const Matrix DG = B.transpose() * G.matrix() * B;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        if (i != j) {
          CHECK(std::abs(DQ(i, j)) <= 1e-8);
          CHECK(std::abs(DG(i, j)) <= 1e-8);
        }
    CHECK(max_abs_diff(B.transpose() * B, Matrix::identity(4)) <= 1e-10);
  }

  TEST_CASE("report serialisation") {
    const Matrix I3 = Matrix::identity(3);
    const ThresholdReport r = threshold_t3(kSprottA, Vector{2, 0, 0}, eye(3), I3, I3);
    std::ostringstream kv;
    write_key_values(kv, r);
    const std::string text = kv.str();
    CHECK(text.rfind("theorem = T3\n", 0) == 0);
    CHECK(text.find("c_condition = c > c_star\n") != std::string::npos);
    CHECK(text.find("cd_star = 1\n") != std::string::npos);
    CHECK(text.find("cd_condition = c_d >= cd_star\n") != std::string::npos);
    std::ostringstream csv;
    write_csv_header(csv);
    write_csv_row(csv, r);
    CHECK(csv.str().rfind("theorem,c_star,c_op,cd_star,q_norm,lambda2,lambda_min_g\nT3,", 0) == 0);

    const QuadReport q = check_quad(builtin_spec("relay"), eye(2), 2.5 * Matrix::identity(2), Box::symmetric(2, 5.0), {},
                                    {.samples = 1000, .seed = 1});
    std::ostringstream qs;
    write_key_values(qs, q);
    CHECK(qs.str().find("passed = false\n") != std::string::npos);

    CHECK(parse_theorem("t3") == Theorem::T3);
    CHECK(parse_theorem("C1") == Theorem::C1);
    CHECK_THROWS_AS(parse_theorem("t5"), ParameterError);
    CHECK(to_string(Comparison::non_strict) == ">=");
  }

  TEST_CASE("box validation") {
    CHECK_THROWS_AS(Box({Vector{1, 0}, Vector{0, 1}}).validate(), ParameterError);
    CHECK_THROWS_AS(check_quad(builtin_spec("relay"), eye(2), Matrix::identity(2), Box::symmetric(3, 1.0), {}),
                    ParameterError);
  }
}

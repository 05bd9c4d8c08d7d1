#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "fixtures.hpp"
#include "minsuff/experiment.hpp"

using namespace minsuff;
using fixtures::diag;
using fixtures::frob_diff;
using fixtures::pauli_x;
using fixtures::pauli_z;

namespace {

StatisticalExperiment classical_three_point() {
  return make_experiment({diag({0.5, 0.25, 0.25}), diag({1.0 / 3, 1.0 / 3, 1.0 / 3})}, {"a", "b"});
}

StatisticalExperiment qubit_family() {
  const Matrix i2 = Matrix::Identity(2, 2);
  return make_experiment({(i2 + 0.5 * pauli_x()) / 2.0, (i2 + 0.5 * pauli_z()) / 2.0}, {"x", "z"});
}

// Tomographically complete qubit family.
StatisticalExperiment tomographic_qubit() {
  const Matrix i2 = Matrix::Identity(2, 2);
  return make_experiment({(i2 + 0.6 * pauli_x()) / 2.0, (i2 + 0.6 * pauli_z()) / 2.0,
                          (i2 + 0.6 * fixtures::pauli_y()) / 2.0},
                         {"x", "z", "y"});
}

double max_reconstruction(const StatisticalExperiment& e, const KIDecomposition& ki) {
  double r = 0;
  for (std::size_t t = 0; t < e.size(); ++t) r = std::max(r, frob_diff(ki.reconstruct(t), e.states[t]));
  return r;
}

SearchOptions quick_search() {
  SearchOptions s;
  s.starts = 6;
  s.max_iter = 3000;
  return s;
}

}  // namespace

TEST_CASE("experiment validation") {
  SUBCASE("non-density states are rejected") {
    CHECK_THROWS_AS(make_experiment({diag({0.5, 0.4})}), Error);
    CHECK_THROWS_AS(make_experiment({diag({1.5, -0.5})}), Error);
  }
  SUBCASE("declared blocks must be respected") {
    Matrix rho = Matrix::Identity(2, 2) / 2.0;
    rho(0, 1) = rho(1, 0) = 0.25;
    CHECK_NOTHROW(make_experiment({rho}));
    CHECK_THROWS_AS(make_experiment({rho}, {}, std::vector<int>{1, 1}), Error);
    CHECK_THROWS_AS(make_experiment({rho}, {}, std::vector<int>{1, 2}), Error);
  }
  SUBCASE("labels are unique and states share one dimension") {
    CHECK_THROWS_AS(make_experiment({diag({1, 0}), diag({0, 1})}, {"p", "p"}), Error);
    CHECK_THROWS_AS(make_experiment({diag({1, 0}), diag({1})}), Error);
    CHECK_THROWS_AS(make_experiment({}), Error);
  }
}

TEST_CASE("support restriction") {
  SUBCASE("faithful input is unchanged") {
    const auto e = qubit_family();
    const auto r = restrict_to_support(e);
    CHECK(r.was_faithful);
    CHECK(r.experiment.dim == 2);
    CHECK((r.compression.action() - Superoperator::identity(2).action()).norm() <= 1e-12);
  }
  SUBCASE("states of the form rho (+) 0 restrict to rho") {
    const auto base = qubit_family();
    const auto r = restrict_to_support(embed_direct_sum(base, 2));
    CHECK_FALSE(r.was_faithful);
    REQUIRE(r.experiment.dim == 2);
    // Recovered states are unitarily equivalent to the originals: compare
    // through the isometry.
    for (std::size_t t = 0; t < base.size(); ++t) {
      const Matrix back = r.isometry * r.experiment.states[t] * r.isometry.adjoint();
      Matrix padded = Matrix::Zero(4, 4);
      padded.topLeftCorner(2, 2) = base.states[t];
      CHECK(frob_diff(back, padded) <= 1e-10);
    }
  }
  SUBCASE("random rank-deficient families have a strictly positive restricted average") {
    Rng rng(12);
    for (int rep = 0; rep < 15; ++rep) {
      const int n = fixtures::uniform_int(rng, 3, 7);
      std::vector<Matrix> st;
      const Matrix u = random_unitary(rng, n);
      const int live = fixtures::uniform_int(rng, 1, n - 1);
      for (int t = 0; t < 3; ++t) {
        Matrix r = Matrix::Zero(n, n);
        r.topLeftCorner(live, live) = random_density(rng, live, fixtures::uniform_int(rng, 1, live));
        st.push_back(u * r * u.adjoint());
      }
      const auto e = make_experiment(st);
      const auto r = restrict_to_support(e);
      CHECK(min_eigenvalue(r.experiment.average_state()) > 1e-7 * 1e-3);
      CHECK(r.experiment.dim <= live);
      CHECK(r.compression.is_channel(1e-9));
    }
  }
}

TEST_CASE("cocycle generators") {
  const auto e = qubit_family();
  SUBCASE("t = 0 gives identities") {
    for (const auto& g : cocycle_generators(e, {0.0})) CHECK(frob_diff(g, Matrix::Identity(2, 2)) <= 1e-12);
  }
  SUBCASE("a single state is its own average") {
    Rng rng(2);
    const auto single = make_experiment({random_density(rng, 3)});
    for (const auto& g : cocycle_generators(single, cocycle_time_grid(8)))
      CHECK(frob_diff(g, Matrix::Identity(3, 3)) <= 1e-9);
  }
  SUBCASE("commuting families give diagonal cocycles") {
    Rng rng(3);
    const Matrix u = random_unitary(rng, 4);
    std::vector<Matrix> st;
    for (int t = 0; t < 3; ++t) {
      const RealVector p = random_probability(rng, 4);
      st.push_back(u * diag({p(0), p(1), p(2), p(3)}) * u.adjoint());
    }
    for (const auto& g : cocycle_generators(make_experiment(st), cocycle_time_grid(8))) {
      Matrix d = u.adjoint() * g * u;
      d.diagonal().setZero();
      CHECK(d.norm() <= 1e-9);
    }
  }
  SUBCASE("the default grid") {
    const auto g = cocycle_time_grid(8);
    REQUIRE(g.size() == 8);
    CHECK(g.front() == doctest::Approx(0.37));
    CHECK(g.back() == doctest::Approx(4.33));
    CHECK(cocycle_time_grid(16).size() == 16);
  }
}

TEST_CASE("minimal sufficient subalgebra") {
  Rng rng(4);
  CHECK(minimal_sufficient_subalgebra(make_experiment({random_density(rng, 3)})).dim() == 1);
  const auto classical = minimal_sufficient_subalgebra(classical_three_point());
  CHECK(classical.dim() == 2);
  // Functions constant on the points {2, 3}.
  CHECK(classical.contains(diag({1, 0, 0}), 1e-9));
  CHECK(classical.contains(diag({0, 1, 1}), 1e-9));
  CHECK_FALSE(classical.contains(diag({0, 1, 0}), 1e-3));
  CHECK(minimal_sufficient_subalgebra(qubit_family()).dim() == 4);
}

TEST_CASE("koashi-imoto decomposition: single state") {
  Rng rng(5);
  const Matrix rho = random_density(rng, 3);
  const auto e = make_experiment({rho});
  const auto ki = ki_decompose(e);
  REQUIRE(ki.blocks.size() == 1);
  CHECK(ki.blocks[0].block.d == 1);
  CHECK(ki.blocks[0].block.m == 3);
  CHECK(ki.blocks[0].q[0] == doctest::Approx(1.0));
  const Matrix& v = ki.blocks[0].block.isometry;
  CHECK(frob_diff(v * ki.blocks[0].omega * v.adjoint(), rho) <= 1e-9);
}

TEST_CASE("koashi-imoto decomposition: classical three-point pair") {
  const auto e = classical_three_point();
  const auto ki = ki_decompose(e);
  REQUIRE(ki.blocks.size() == 2);
  // Order blocks by multiplicity.
  std::vector<const KIBlock*> b{&ki.blocks[0], &ki.blocks[1]};
  std::sort(b.begin(), b.end(), [](auto* x, auto* y) { return x->block.m < y->block.m; });
  CHECK(b[0]->block.d == 1);
  CHECK(b[1]->block.d == 1);
  CHECK(b[0]->block.m == 1);
  CHECK(b[1]->block.m == 2);
  CHECK(b[0]->q[0] == doctest::Approx(0.5));
  CHECK(b[0]->q[1] == doctest::Approx(1.0 / 3));
  CHECK(b[1]->q[0] == doctest::Approx(0.5));
  CHECK(b[1]->q[1] == doctest::Approx(2.0 / 3));
  // Weights (1/4, 1/4) on the merged points normalise to uniform.
  const Matrix& v = b[1]->block.isometry;
  CHECK(frob_diff(v * b[1]->omega * v.adjoint(), diag({0, 0.5, 0.5})) <= 1e-9);
  CHECK(fixtures::block_partition(ki) == std::vector<std::vector<int>>{{0}, {1, 2}});
  CHECK(max_reconstruction(e, ki) <= 1e-10);
}

TEST_CASE("koashi-imoto decomposition: an ancilla multiplies the multiplicities") {
  Rng rng(6);
  const auto base = qubit_family();
  const auto ki0 = ki_decompose(base);
  for (int k = 2; k <= 3; ++k) {
    const auto e = embed_with_ancilla(base, random_density(rng, k));
    const auto ki = ki_decompose(e);
    REQUIRE(ki.blocks.size() == ki0.blocks.size());
    CHECK(ki.block_d() == ki0.block_d());
    std::vector<int> m0 = ki0.block_m();
    for (auto& m : m0) m *= k;
    CHECK(ki.block_m() == m0);
    CHECK(max_reconstruction(e, ki) <= 1e-8);
  }
}

TEST_CASE("koashi-imoto decomposition: planted random structures") {
  Rng rng(7);
  for (int rep = 0; rep < 25; ++rep) {
    const auto p = fixtures::random_planted_experiment(rng);
    const auto& e = p.experiment;
    const auto ki = ki_decompose(e);
    CHECK(max_reconstruction(e, ki) <= 1e-8);
    for (std::size_t t = 0; t < e.size(); ++t) {
      double s = 0;
      for (const auto& b : ki.blocks) s += b.q[t];
      CHECK(s == doctest::Approx(1.0).epsilon(1e-7));
    }
    for (const auto& b : ki.blocks) CHECK(is_density(b.omega, 1e-7));
  }
}

TEST_CASE("classical experiments merge exactly the points with equal likelihood ratios") {
  Rng rng(8);
  for (int rep = 0; rep < 30; ++rep) {
    const auto f = fixtures::random_classical_experiment(rng, 8, 4, rep % 2 == 0);
    const auto ki = ki_decompose(f.experiment);
    for (const auto& b : ki.blocks) CHECK(b.block.d == 1);
    CHECK(fixtures::block_partition(ki) == fixtures::likelihood_ratio_partition(f.distributions));
  }
}

TEST_CASE("minimal forms") {
  SUBCASE("single state gives the one-dimensional experiment") {
    Rng rng(1);
    const auto m = minimal_form(make_experiment({random_density(rng, 4)}));
    CHECK(m.experiment.dim == 1);
    CHECK(std::abs(m.experiment.states[0](0, 0) - 1.0) <= 1e-12);
  }
  SUBCASE("classical three-point pair gives the two-point experiment") {
    const auto m = minimal_form(classical_three_point());
    REQUIRE(m.experiment.dim == 2);
    CHECK(m.experiment.block_dims == std::vector<int>{1, 1});
    // Up to point order: {(1/2, 1/2), (1/3, 2/3)}.
    std::vector<std::pair<double, double>> pts;
    for (int k = 0; k < 2; ++k) pts.push_back({m.experiment.states[0](k, k).real(), m.experiment.states[1](k, k).real()});
    std::sort(pts.begin(), pts.end());
    CHECK(pts[0].first == doctest::Approx(0.5));
    CHECK(pts[0].second == doctest::Approx(1.0 / 3));
    CHECK(pts[1].first == doctest::Approx(0.5));
    CHECK(pts[1].second == doctest::Approx(2.0 / 3));
  }
  SUBCASE("minimal tomographic family is itself up to a unitary") {
    const auto e = tomographic_qubit();
    const auto m = minimal_form(e);
    REQUIRE(m.experiment.dim == 2);
    IsomorphismOptions o;
    o.check_minimal = false;
    const auto w = experiments_isomorphic(e, m.experiment, o);
    REQUIRE(w);
    CHECK(w->residual <= 1e-7);
  }
  SUBCASE("minimal forms are faithful and idempotent") {
    Rng rng(19);
    IsomorphismOptions o;
    o.check_minimal = false;
    for (int rep = 0; rep < 8; ++rep) {
      const auto p = fixtures::random_planted_experiment(rng);
      const auto m = minimal_form(p.experiment);
      CHECK(min_eigenvalue(m.experiment.average_state()) > 0);
      const auto mm = minimal_form(m.experiment);
      CHECK(mm.experiment.blocks().size() == m.experiment.blocks().size());
      const auto w = experiments_isomorphic(m.experiment, mm.experiment, o);
      REQUIRE(w);
      CHECK(w->residual <= 1e-7);
    }
  }
}

TEST_CASE("conditional expectation of an experiment") {
  SUBCASE("tomographic family gives the identity map") {
    const auto e = tomographic_qubit();
    const auto c = conditional_expectation_for(e, ki_decompose(e));
    CHECK((c.action() - Superoperator::identity(2).action()).norm() <= 1e-8);
  }
  SUBCASE("single state gives the state functional") {
    Rng rng(2);
    const Matrix sigma = random_density(rng, 3);
    const auto e = make_experiment({sigma});
    const auto c = conditional_expectation_for(e, ki_decompose(e));
    const Matrix a = random_gaussian(rng, 3, 3);
    CHECK(frob_diff(c.apply(a), (sigma * a).trace() * Matrix::Identity(3, 3)) <= 1e-9);
    CHECK(frob_diff(c.predual(sigma), sigma) <= 1e-9);
  }
  SUBCASE("random experiments: the predual preserves every state") {
    Rng rng(3);
    for (int rep = 0; rep < 10; ++rep) {
      const auto p = fixtures::random_planted_experiment(rng);
      const auto& e = p.experiment;
      const auto c = conditional_expectation_for(e, ki_decompose(e));
      CHECK(c.is_channel(1e-10));
      CHECK((c.compose(c).action() - c.action()).norm() <= 1e-9);
      for (const auto& rho : e.states) CHECK(frob_diff(c.predual(rho), rho) <= 1e-8);
    }
  }
}

TEST_CASE("fixing channels") {
  SUBCASE("maximally mixed single state admits one") {
    for (int d = 2; d <= 4; ++d) {
      const auto e = make_experiment({Matrix::Identity(d, d) / double(d)});
      const auto g = find_fixing_channel(e, quick_search());
      REQUIRE(g);
      CHECK(g->is_channel(1e-7, 1e-7));
      CHECK(frob_diff(g->predual(e.states[0]), e.states[0]) <= 1e-7);
      CHECK((g->choi() - Superoperator::identity(d).choi()).norm() > 1e-5);
    }
  }
  SUBCASE("duplicated classical points admit one") {
    const auto e = make_experiment({diag({0.2, 0.2, 0.6}), diag({0.1, 0.1, 0.8})}, {}, std::vector<int>{1, 1, 1});
    const auto g = find_fixing_channel(e, quick_search());
    REQUIRE(g);
    for (const auto& rho : e.states) CHECK(frob_diff(g->predual(rho), rho) <= 1e-7);
  }
  SUBCASE("minimal forms admit none") {
    CHECK_FALSE(find_fixing_channel(minimal_form(classical_three_point()).experiment, quick_search()));
    CHECK_FALSE(find_fixing_channel(minimal_form(qubit_family()).experiment, quick_search()));
    CHECK_FALSE(find_fixing_channel(minimal_form(tomographic_qubit()).experiment, quick_search()));
  }
  SUBCASE("a non-minimal classical experiment on the full algebra admits one") {
    CHECK(find_fixing_channel(classical_three_point(), quick_search()));
  }
}

TEST_CASE("coarse-graining") {
  const auto e = qubit_family();
  SUBCASE("every experiment coarse-grains itself") {
    const auto l = check_coarse_graining(e, e, quick_search());
    REQUIRE(l);
    CHECK(coarse_graining_residual(*l, e, e) <= 1e-7);
  }
  SUBCASE("an experiment and its minimal form are equivalent") {
    const auto c = classical_three_point();
    const auto m = minimal_form(c).experiment;
    const auto down = check_coarse_graining(m, c, quick_search());
    const auto up = check_coarse_graining(c, m, quick_search());
    REQUIRE(down);
    REQUIRE(up);
    CHECK(coarse_graining_residual(*down, m, c) <= 1e-7);
    CHECK(coarse_graining_residual(*up, c, m) <= 1e-7);
  }
  SUBCASE("dephasing loses information") {
    std::vector<Matrix> deph;
    for (const auto& r : e.states) deph.push_back(Matrix(r.diagonal().asDiagonal()));
    const auto d = make_experiment(deph, e.labels);
    CHECK(check_coarse_graining(d, e, quick_search()));
    CHECK_FALSE(check_coarse_graining(e, d, quick_search()));
  }
  SUBCASE("labels must agree") {
    const auto other = make_experiment(e.states, {"p", "q"});
    try {
      check_coarse_graining(e, other, quick_search());
      FAIL("expected LabelMismatch");
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::LabelMismatch);
    }
  }
}

TEST_CASE("isomorphism") {
  IsomorphismOptions fast;
  fast.check_minimal = false;
  SUBCASE("block unitary conjugation is detected") {
    Rng rng(31);
    const auto m = minimal_form(tomographic_qubit()).experiment;
    const Matrix u = random_unitary(rng, 2);
    std::vector<Matrix> st;
    for (const auto& r : m.states) st.push_back(u * r * u.adjoint());
    const auto m2 = make_experiment(st, m.labels, m.block_dims);
    IsomorphismOptions o;
    o.search = quick_search();
    const auto w = experiments_isomorphic(m, m2, o);
    REQUIRE(w);
    CHECK(w->residual <= 1e-7);
    for (std::size_t t = 0; t < m.size(); ++t)
      CHECK(frob_diff(w->unitary * m.states[t] * w->unitary.adjoint(), m2.states[t]) <= 1e-7);
  }
  SUBCASE("different block multisets are never isomorphic") {
    const auto a = make_experiment({direct_sum(Matrix::Identity(1, 1) * 0.5, Matrix::Identity(2, 2) * 0.25)}, {}, std::vector<int>{1, 2});
    const auto b = make_experiment({Matrix::Identity(3, 3) / 3.0}, {}, std::vector<int>{1, 1, 1});
    CHECK_FALSE(experiments_isomorphic(a, b, fast));
  }
  SUBCASE("non-minimal inputs are reported") {
    const auto a = make_experiment({Matrix::Identity(2, 2) / 2.0});
    IsomorphismOptions o;
    o.search = quick_search();
    try {
      experiments_isomorphic(a, a, o);
      FAIL("expected NotMinimalForm");
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::NotMinimalForm);
    }
  }
  SUBCASE("classical experiments equal up to a permutation of points") {
    Rng rng(37);
    for (int rep = 0; rep < 20; ++rep) {
      const int n = fixtures::uniform_int(rng, 2, 5), k = fixtures::uniform_int(rng, 1, 3);
      std::vector<std::vector<double>> dist(static_cast<std::size_t>(k));
      std::vector<Matrix> st1;
      for (auto& d : dist) {
        const RealVector p = random_probability(rng, n);
        d.assign(p.data(), p.data() + n);
        st1.push_back(diag(d));
      }
      std::vector<int> perm(static_cast<std::size_t>(n));
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      const bool perturb = rep % 3 == 0;
      std::vector<Matrix> st2;
      for (std::size_t t = 0; t < dist.size(); ++t) {
        const auto& d = dist[t];
        std::vector<double> pd(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) pd[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = d[static_cast<std::size_t>(i)];
        // Swapping two points in the first state only usually breaks the symmetry.
        if (perturb && t == 0) std::swap(pd[0], pd[1]);
        st2.push_back(diag(pd));
      }
      const std::vector<int> ones(static_cast<std::size_t>(n), 1);
      const auto e1 = make_experiment(st1, {}, ones), e2 = make_experiment(st2, {}, ones);
      // Exhaustive permutation oracle.
      std::vector<int> q(static_cast<std::size_t>(n));
      std::iota(q.begin(), q.end(), 0);
      bool oracle = false;
      do {
        bool ok = true;
        for (std::size_t t = 0; t < st1.size() && ok; ++t)
          for (int i = 0; i < n && ok; ++i)
            ok = std::abs(st1[t](i, i) - st2[t](q[static_cast<std::size_t>(i)], q[static_cast<std::size_t>(i)])) <= 1e-12;
        oracle = oracle || ok;
      } while (!oracle && std::next_permutation(q.begin(), q.end()));
      const auto w = experiments_isomorphic(e1, e2, fast);
      CHECK(bool(w) == oracle);
      if (w) CHECK(w->residual <= 1e-7);
    }
  }
}

TEST_CASE("embeddings") {
  const auto e = qubit_family();
  const auto same = embed_with_ancilla(e, Matrix::Identity(1, 1));
  for (std::size_t t = 0; t < e.size(); ++t) CHECK(frob_diff(same.states[t], e.states[t]) == 0.0);
  const auto same2 = embed_direct_sum(e, 0);
  CHECK(same2.dim == e.dim);
  Rng rng(9);
  const Matrix w = random_density(rng, 3);
  const auto a = embed_with_ancilla(e, w);
  CHECK(a.dim == 6);
  CHECK(frob_diff(a.states[1], kron(e.states[1], w)) <= 1e-15);
  const auto p = embed_direct_sum(e, 2);
  CHECK(p.dim == 4);
  CHECK(std::abs(p.states[0].trace() - 1.0) <= 1e-12);
  IsomorphismOptions o;
  o.check_minimal = false;
  CHECK(experiments_isomorphic(minimal_form(e).experiment, minimal_form(a).experiment, o));
  CHECK(experiments_isomorphic(minimal_form(e).experiment, minimal_form(p).experiment, o));
}

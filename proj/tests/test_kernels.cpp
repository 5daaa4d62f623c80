#include <doctest.h>

#include <cmath>

#include "coagfrag/errors.hpp"
#include "coagfrag/kernels.hpp"
#include "coagfrag/rng.hpp"

using namespace coagfrag;

namespace {

CoagKernel additive() {
  // x^0 y^1 + x^1 y^0 = x + y
  CoagKernel k;
  k.family = CoagFamily::SymProd;
  k.a = 0.0;
  k.b = 1.0;
  k.lambda = 1.0;
  return k;
}

CoagKernel sum_pow(double b) {
  CoagKernel k;
  k.family = CoagFamily::SumPow;
  k.a = 1.0;
  k.b = b;
  k.lambda = b;
  return k;
}

}  // namespace

TEST_CASE("catalogue arithmetic") {
  CHECK(additive().eval(2, 3) == 5.0);
  CHECK(sum_pow(1.0).eval(2, 3) == 5.0);
  CHECK(sum_pow(1.0).eval(3, 2) == 5.0);
  CHECK(sum_pow(0.5).eval(2, 2) == 2.0);

  CoagKernel prod;
  prod.family = CoagFamily::SymProd;
  prod.a = 1.0;
  prod.b = 1.0;
  prod.lambda = 1.0;               // metadata only here
  CHECK(prod.eval(2, 3) == 12.0);  // xy + yx

  FragKernel one;
  CHECK(one.eval(5) == 1.0);
  CHECK(one.eval(0) == 0.0);
  FragKernel inv;
  inv.family = FragFamily::BoundedInv;
  CHECK(inv.eval(1) == 0.5);
  FragKernel pw;
  pw.family = FragFamily::Power;
  pw.a = 2.0;
  CHECK(pw.eval(3) == 9.0);
  CHECK(pw.eval(0) == 0.0);
}

TEST_CASE("zero-mass conventions") {
  for (const CoagKernel& k : {additive(), sum_pow(0.5), CoagKernel{}}) {
    CHECK(k.eval(2, 0) == 0.0);
    CHECK(k.eval(0, 2) == 0.0);
    CHECK(k.eval(0, 0) == 0.0);
  }
}

TEST_CASE("symmetry is exact on random pairs") {
  // canonicalization means both orders run the same float expression
  Philox rng(20240901, 3);
  CoagKernel ks[] = {sum_pow(0.5), additive(),
                     CoagKernel{.family = CoagFamily::ProdFrac, .a = 0.8, .b = 0.2, .lambda = 0.6},
                     CoagKernel{.family = CoagFamily::DiffPow, .a = 0.5, .b = 0.4, .g = 0.5,
                                .lambda = 0.7},
                     CoagKernel{.family = CoagFamily::ExpDamped, .a = 1.0, .b = 2.0,
                                .lambda = 0.5}};
  for (const auto& k : ks) {
    for (int i = 0; i < 10000; ++i) {
      double x = 1e6 * rng.uniform();
      double y = 1e6 * rng.uniform();
      CHECK(k.eval(x, y) == k.eval(y, x));
    }
  }
}

TEST_CASE("growth hypothesis sweeps") {
  GridSpec grid;

  SUBCASE("sum_pow 1/2 with kappa0 = 1 holds with equality") {
    CoagKernel k = sum_pow(0.5);
    k.kappa0 = 1.0;
    k.kappa1 = 1.0;
    HypothesisReport rep = verify_coag_hypothesis(k, grid);
    CHECK(rep.consistent());
  }

  SUBCASE("product kernel declared lambda=1 violates the growth bound") {
    CoagKernel k;
    k.family = CoagFamily::SymProd;
    k.a = 1.0;
    k.b = 1.0;
    k.lambda = 1.0;
    k.kappa0 = 1.0;
    k.kappa1 = 10.0;
    HypothesisReport rep = verify_coag_hypothesis(k, grid);
    CHECK_FALSE(rep.consistent());
    // xy at x=y=10 is 100 > kappa0 (x+y) = 20
    bool found = false;
    for (const auto& v : rep.violations)
      if (v.check == "growth" && v.lhs > v.rhs) found = true;
    CHECK(found);
  }

  SUBCASE("two-exponent family fits lambda 0.7 with kappa0 = 2") {
    // max of K/(x+y)^0.7 over the grid is 2^0.3 ~ 1.231, swept before freezing
    CoagKernel k;
    k.family = CoagFamily::SymProd;
    k.a = 0.3;
    k.b = 0.4;
    k.lambda = 0.7;
    k.kappa0 = 2.0;
    k.kappa1 = 1.0;
    HypothesisReport rep = verify_coag_hypothesis(k, grid);
    CHECK(rep.consistent());
  }
}

TEST_CASE("fragmentation hypothesis sweeps") {
  GridSpec grid;

  SUBCASE("constant kernel") {
    FragKernel f;
    f.kappa2 = 1.0;
    f.kappa3 = 0.0;
    CHECK(verify_frag_hypothesis(f, grid).consistent());
  }
  SUBCASE("bounded inverse: |F'| = 1/(1+x)^2 <= 1/x") {
    FragKernel f;
    f.family = FragFamily::BoundedInv;
    f.kappa2 = 1.0;
    f.kappa3 = 1.0;
    f.alpha = 1.0;
    CHECK(verify_frag_hypothesis(f, grid).consistent());
  }
  SUBCASE("linear kernel declared kappa2 = 1 fails at x = 2") {
    FragKernel f;
    f.family = FragFamily::Power;
    f.a = 1.0;
    f.kappa2 = 1.0;
    f.kappa3 = 1e9;
    f.alpha = 1.0;
    HypothesisReport rep = verify_frag_hypothesis(f, grid);
    CHECK_FALSE(rep.consistent());
  }
}

TEST_CASE("kernel truncation") {
  CoagKernel k = truncate_kernel(additive(), 3.0);
  CHECK(k.eval(2, 2) == 3.0);
  CHECK(k.eval(1, 1) == 2.0);  // below the cap, identical values
  CoagKernel k2 = truncate_kernel(additive(), 5.0);
  Philox rng(7, 0);
  for (int i = 0; i < 1000; ++i) {
    double x = 10 * rng.uniform(), y = 10 * rng.uniform();
    CHECK(k.eval(x, y) <= k2.eval(x, y));
    CHECK(k2.eval(x, y) <= additive().eval(x, y));
  }
  CHECK_THROWS_AS(truncate_kernel(additive(), 0.0), Error);
}

TEST_CASE("parameter domain validation") {
  CoagKernel k = sum_pow(0.5);
  k.deterministic_track = true;
  CHECK_NOTHROW(k.validate());
  k.lambda = 1.5;
  CHECK_THROWS_AS(k.validate(), Error);

  CoagKernel bad;
  bad.family = CoagFamily::SymProd;
  bad.a = 0.9;
  bad.b = 0.3;  // requires a <= b
  CHECK_THROWS_AS(bad.validate(), Error);

  FragKernel f;
  f.family = FragFamily::Power;
  f.a = 1.0;
  f.deterministic_track = true;  // unbounded family rejected on this track
  CHECK_THROWS_AS(f.validate(), Error);
  f.deterministic_track = false;
  CHECK_NOTHROW(f.validate());
}

TEST_CASE("holder constants and sups") {
  CHECK(*additive().holder_kappa(10.0) == 1.0);
  CHECK(*sum_pow(0.5).holder_kappa(10.0) == 1.0);
  CHECK(*CoagKernel{}.holder_kappa(10.0) == 0.0);
  CHECK(additive().sup_on_box(3.0) == doctest::Approx(6.0));

  FragKernel one;
  CHECK(*one.holder_mu(5.0) == 0.0);
  CHECK(one.sup_on(7.0) == 1.0);
  FragKernel pw;
  pw.family = FragFamily::Power;
  pw.a = 2.0;
  pw.alpha = 2.0;
  CHECK(*pw.holder_mu(5.0) == 1.0);
  CHECK(pw.sup_on(3.0) == 9.0);
}

TEST_CASE("custom expression kernels") {
  CoagKernel k;
  k.family = CoagFamily::Custom;
  k.custom = Expr::parse("x*y + 1");
  k.lambda = 1.0;
  CHECK(k.eval(2, 3) == 7.0);
  CHECK(k.eval(3, 2) == 7.0);
  CHECK(k.eval(0, 3) == 0.0);

  FragKernel f;
  f.family = FragFamily::Custom;
  f.custom = Expr::parse("1/(1+x*x)");
  CHECK(f.eval(1) == 0.5);
}

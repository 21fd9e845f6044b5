#include <catch2/catch_amalgamated.hpp>

#include "phaseid/correlation.hpp"
#include "phaseid/rng.hpp"

using namespace phaseid;

namespace {

std::vector<double> random_series(std::uint64_t seed, int n) {
  RngStream rng(seed);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = rng.next_normal();
  return v;
}

ReferenceMatrix random_reference(std::uint64_t seed, int t) {
  ReferenceMatrix ref;
  ref.values.resize(t, 3);
  RngStream rng(seed);
  for (int i = 0; i < t; ++i)
    for (int ph = 0; ph < 3; ++ph) ref.values(i, ph) = 1.0 + 0.05 * rng.next_normal();
  return ref;
}

ConsumerMatrix random_consumers(std::uint64_t seed, int t, int l) {
  ConsumerMatrix cons;
  cons.values.resize(t, l);
  for (int j = 0; j < l; ++j) cons.device.push_back(j);
  RngStream rng(seed);
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < l; ++j) cons.values(i, j) = 1.0 + 0.05 * rng.next_normal();
  return cons;
}

}  // namespace

TEST_CASE("pearson closed-form checks", "[correlation]") {
  const auto x = random_series(1, 50);
  SECTION("self correlation is one") { REQUIRE(pearson(x, x) == Catch::Approx(1.0).margin(1e-12)); }
  SECTION("reflection is minus one") {
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 - v);
    REQUIRE(pearson(x, y) == Catch::Approx(-1.0).margin(1e-12));
  }
  SECTION("hand-evaluated example") {
    REQUIRE(pearson({1, 2, 3}, {1, 2, 4}) == Catch::Approx(0.98198).margin(1e-5));
  }
  SECTION("affine image correlates perfectly") {
    std::vector<double> y;
    for (double v : x) y.push_back(2.5 * v + 7.0);
    REQUIRE(pearson(x, y) == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("zero variance tags undefined") {
    REQUIRE(std::isnan(pearson({1, 1, 1, 1}, x.size() >= 4 ? std::vector<double>(x.begin(), x.begin() + 4)
                                                           : x)));
  }
  SECTION("errors") {
    REQUIRE_THROWS_AS(pearson({1, 2}, {1, 2}), DataError);
    REQUIRE_THROWS_AS(pearson({1, 2, 3}, {1, 2}), DataError);
  }
}

TEST_CASE("J1 correlation matrix", "[correlation]") {
  const int t = 40;
  SECTION("a consumer copying reference phase B has argmax B") {
    const auto ref = random_reference(3, t);
    ConsumerMatrix cons;
    cons.device = {0};
    cons.values = ref.values.col(1);
    const auto rho = corr_J1(ref, cons);
    REQUIRE(rho(0, 1) == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(rho(0, 0) < rho(0, 1));
    REQUIRE(rho(0, 2) < rho(0, 1));
  }
  SECTION("no consumers gives an empty matrix") {
    const auto ref = random_reference(3, t);
    ConsumerMatrix cons;
    cons.values.resize(t, 0);
    REQUIRE(corr_J1(ref, cons).rows() == 0);
  }
  SECTION("matches the per-entry oracle on a random panel") {
    const auto ref = random_reference(4, 10);
    const auto cons = random_consumers(5, 10, 4);
    const auto rho = corr_J1(ref, cons);
    for (int w = 0; w < 4; ++w)
      for (int ph = 0; ph < 3; ++ph) {
        std::vector<double> cw, rp;
        for (int i = 0; i < 10; ++i) {
          cw.push_back(cons.values(i, w));
          rp.push_back(ref.values(i, ph));
        }
        REQUIRE(rho(w, ph) == pearson(cw, rp));
        REQUIRE(rho(w, ph) >= -1.0);
        REQUIRE(rho(w, ph) <= 1.0);
      }
  }
}

TEST_CASE("salient index extraction", "[correlation]") {
  ReferenceMatrix ref;
  const int t = 30;
  ref.values = Eigen::MatrixXd::Constant(t, 3, 1.0);
  // plant jumps at diff indices 4, 11, 20 on various phases
  ref.values(5, 0) = 1.2;   // diff 4 up, diff 5 down
  ref.values(12, 1) = 0.8;  // diff 11, 12
  ref.values(21, 2) = 1.3;  // diff 20, 21

  SECTION("planted jumps are found") {
    const auto idx = salient_indices(ref, 0.15);
    REQUIRE(idx == std::vector<int>{4, 5, 11, 12, 20, 21});
  }
  SECTION("beta above the largest change empties the set") {
    REQUIRE(salient_indices(ref, 0.5).empty());
  }
  SECTION("beta zero keeps every non-constant step") {
    const auto ref2 = random_reference(6, 12);
    REQUIRE(salient_indices(ref2, 0.0).size() == 11);
  }
}

TEST_CASE("J2 restricted difference correlation", "[correlation]") {
  const int t = 40;
  const auto ref = random_reference(7, t);
  const auto cons = random_consumers(8, t, 3);

  SECTION("beta zero equals correlation over the full difference series") {
    const auto rho = corr_J2(ref, cons, 0.0);
    for (int w = 0; w < 3; ++w)
      for (int ph = 0; ph < 3; ++ph) {
        std::vector<double> dc, dr;
        for (int i = 0; i + 1 < t; ++i) {
          dc.push_back(cons.values(i + 1, w) - cons.values(i, w));
          dr.push_back(ref.values(i + 1, ph) - ref.values(i, ph));
        }
        REQUIRE(rho(w, ph) == Catch::Approx(pearson(dc, dr)).margin(1e-14));
      }
  }
  SECTION("matches a straight-line diff-filter-correlate oracle") {
    const double beta = 0.04;
    const auto idx = salient_indices(ref, beta);
    REQUIRE(idx.size() >= 3);
    const auto rho = corr_J2(ref, cons, beta);
    for (int w = 0; w < 3; ++w)
      for (int ph = 0; ph < 3; ++ph) {
        std::vector<double> dc, dr;
        for (int i : idx) {
          dc.push_back(cons.values(i + 1, w) - cons.values(i, w));
          dr.push_back(ref.values(i + 1, ph) - ref.values(i, ph));
        }
        REQUIRE(rho(w, ph) == Catch::Approx(pearson(dc, dr)).margin(1e-14));
      }
  }
  SECTION("a consumer tracking phase A wins on A") {
    ConsumerMatrix cons2;
    cons2.device = {0};
    cons2.values = ref.values.col(0);
    const auto rho = corr_J2(ref, cons2, 0.02);
    REQUIRE(rho(0, 0) == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("too few salient rows raises the exclusion error") {
    REQUIRE_THROWS_AS(corr_J2(ref, cons, 10.0), SalientTooSmall);
  }
}

TEST_CASE("J3 augmented-row magnitude correlation", "[correlation]") {
  SECTION("augmentation maps diff indices to sample rows") {
    REQUIRE(augment_salient({5}) == std::vector<int>{5, 6});
    REQUIRE(augment_salient({5, 6}) == std::vector<int>{5, 6, 7});
    REQUIRE(augment_salient({2, 7}) == std::vector<int>{2, 3, 7, 8});
  }
  const int t = 40;
  const auto ref = random_reference(9, t);
  const auto cons = random_consumers(10, t, 3);
  SECTION("matches the row-selection oracle") {
    const double beta = 0.04;
    const auto rows = augment_salient(salient_indices(ref, beta));
    REQUIRE(rows.size() >= 3);
    const auto rho = corr_J3(ref, cons, beta);
    for (int w = 0; w < 3; ++w)
      for (int ph = 0; ph < 3; ++ph) {
        std::vector<double> c, r;
        for (int i : rows) {
          c.push_back(cons.values(i, w));
          r.push_back(ref.values(i, ph));
        }
        REQUIRE(rho(w, ph) == Catch::Approx(pearson(c, r)).margin(1e-14));
      }
  }
  SECTION("beta zero reduces J3 to J1") {
    const auto j3 = corr_J3(ref, cons, 0.0);
    const auto j1 = corr_J1(ref, cons);
    REQUIRE((j3 - j1).norm() < 1e-14);
  }
}

TEST_CASE("tensor construction excludes quiet references", "[correlation]") {
  const int t = 30;
  const auto active = random_reference(11, t);
  ReferenceMatrix quiet;
  quiet.bus0 = 9;
  quiet.values = Eigen::MatrixXd::Constant(t, 3, 1.0);
  const auto cons = random_consumers(12, t, 2);

  const auto tensor = build_tensor(Metric::J2, {active, quiet}, cons, 0.01);
  REQUIRE(tensor.rho.size() == 1);
  REQUIRE(tensor.excluded_ref_bus0 == std::vector<int>{9});

  const auto all_excluded = build_tensor(Metric::J2, {quiet}, cons, 0.01);
  REQUIRE(all_excluded.rho.empty());
}

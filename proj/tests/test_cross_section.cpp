#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "conespec/cross_section.hpp"
#include "conespec/errors.hpp"
#include "doctest.h"

using namespace conespec;

namespace {

struct Level {
  double lambda;
  int multiplicity;
};

// Zonal reduction of -Delta on S^m: for each degree-l harmonic on S^{m-1}
// (eigenvalue l(l+m-2), multiplicity d_l) solve
//   -(sin^{m-1} u')' / sin^{m-1} + l(l+m-2) u / sin^2 = lambda u   on (0, pi)
// by cell-centred finite volumes, densely. The weight vanishes at both poles,
// so no boundary condition is imposed. Eigenvalues are then clustered.
std::vector<Level> sphere_laplacian_oracle(int m, const std::vector<Level>& lower, double cutoff, int cells) {
  const double h = std::numbers::pi / cells;
  std::vector<double> found;
  std::vector<int> weight;
  for (const Level& sector : lower) {
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(cells, cells);
    Eigen::VectorXd w(cells);
    for (int j = 0; j < cells; ++j) {
      const double th = (j + 0.5) * h;
      const double wl = std::pow(std::sin(j * h), m - 1);
      const double wr = std::pow(std::sin((j + 1) * h), m - 1);
      w[j] = std::pow(std::sin(th), m - 1);
      k(j, j) = (wl + wr) / (h * h) + sector.lambda * w[j] / (std::sin(th) * std::sin(th));
      if (j + 1 < cells) k(j, j + 1) = k(j + 1, j) = -wr / (h * h);
    }
    const Eigen::VectorXd s = w.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd sym = s.asDiagonal() * k * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    for (Eigen::Index i = 0; i < es.eigenvalues().size() && es.eigenvalues()[i] < cutoff; ++i) {
      found.push_back(es.eigenvalues()[i]);
      weight.push_back(sector.multiplicity);
    }
  }
  std::vector<std::size_t> order(found.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return found[a] < found[b]; });
  std::vector<Level> out;
  for (std::size_t i : order) {
    if (!out.empty() && std::abs(found[i] - out.back().lambda) < 0.05 * (1.0 + out.back().lambda)) {
      out.back().multiplicity += weight[i];
    } else {
      out.push_back({found[i], weight[i]});
    }
  }
  return out;
}

std::vector<Level> circle_fourier(int degrees) {
  std::vector<Level> out{{0.0, 1}};
  for (int l = 1; l < degrees; ++l) out.push_back({static_cast<double>(l * l), 2});
  return out;
}

}  // namespace

TEST_CASE("round sphere modes match a dense eigensolve of the sphere Laplacian") {
  // S^2 from circle harmonics, then S^3 from the S^2 levels just computed.
  const std::vector<Level> s2 = sphere_laplacian_oracle(2, circle_fourier(6), 25.0, 400);
  REQUIRE(s2.size() >= 4);
  const CrossSection two = CrossSection::round_sphere(2, 1.0);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(s2[k].lambda == doctest::Approx(k * (k + 1.0)).epsilon(2e-3).scale(1e-3));
    CHECK(s2[k].multiplicity == two.mode(k).multiplicity);
    CHECK(two.laplace_eigenvalue(k) == doctest::Approx(k * (k + 1.0)));
  }
  const std::vector<Level> s3 = sphere_laplacian_oracle(3, s2, 20.0, 400);
  REQUIRE(s3.size() >= 3);
  const CrossSection three = CrossSection::round_sphere(3, 1.0);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(s3[k].lambda == doctest::Approx(k * (k + 2.0)).epsilon(2e-3).scale(1e-3));
    CHECK(s3[k].multiplicity == three.mode(k).multiplicity);
    CHECK(three.laplace_eigenvalue(k) == doctest::Approx(k * (k + 2.0)));
  }
}

TEST_CASE("round sphere examples") {
  const CrossSection s2 = CrossSection::round_sphere(2, 1.0);
  CHECK(s2.mu(0) == 2.0);
  CHECK(s2.mu(1) == 10.0);
  CHECK(s2.mu(2) == 26.0);
  CHECK(s2.mode(0).multiplicity == 1);
  CHECK(s2.mode(1).multiplicity == 3);
  CHECK(s2.mode(2).multiplicity == 5);
  CHECK(s2.scal_min() == 2.0);
  CHECK(s2.volume() == doctest::Approx(4 * std::numbers::pi));

  const CrossSection s3 = CrossSection::round_sphere(3, 1.0);
  CHECK(s3.mu(0) == 6.0);
  CHECK(s3.mu(1) == 18.0);
  CHECK(s3.mu(2) == 38.0);
  CHECK(s3.mode(1).multiplicity == 4);
  CHECK(s3.mode(2).multiplicity == 9);
  CHECK(s3.scal_min() == 6.0);
  CHECK(s3.volume() == doctest::Approx(2 * std::numbers::pi * std::numbers::pi));

  CHECK(CrossSection::round_sphere(2, 1e8).scal_min() < 1e-15);
  CHECK(!CrossSection::round_sphere(2, 1.0).mode_count().has_value());
  CHECK(s2.mu(500) > s2.mu(499));

  CHECK_THROWS_AS(CrossSection::round_sphere(2, 0.0), InvalidParameter);
  CHECK_THROWS_AS(CrossSection::round_sphere(2, -1.0), InvalidParameter);
  CHECK_THROWS_AS(CrossSection::round_sphere(1, 1.0), InvalidParameter);
}

TEST_CASE("round sphere first level equals min R and levels increase") {
  for (int m = 2; m <= 6; ++m) {
    for (double c : {0.3, 1.0, 1.7}) {
      const CrossSection cs = CrossSection::round_sphere(m, c);
      CHECK(cs.mu(0) == doctest::Approx(cs.scal_min()).epsilon(1e-15));
      for (std::size_t k = 1; k < 30; ++k) CHECK(cs.mu(k) > cs.mu(k - 1));
    }
  }
}

TEST_CASE("scaling law mu_k(c) = mu_k(1) / c^2") {
  for (int m : {2, 3, 5}) {
    const CrossSection unit = CrossSection::round_sphere(m, 1.0);
    for (double c : {0.25, 0.9, std::sqrt(2.0), 3.0, 40.0}) {
      const CrossSection cs = CrossSection::round_sphere(m, c);
      for (std::size_t k = 0; k < 12; ++k) {
        CHECK(cs.mu(k) == doctest::Approx(unit.mu(k) / (c * c)).epsilon(1e-15));
        CHECK(cs.mode(k).multiplicity == unit.mode(k).multiplicity);
      }
      const CrossSection via = unit.scaled(c);
      CHECK(via.mu(3) == doctest::Approx(cs.mu(3)).epsilon(1e-15));
    }
  }
}

TEST_CASE("cone condition examples") {
  const ConditionReport a = check_cone_condition(CrossSection::round_sphere(2, 1.0), 3);
  CHECK(a.admissible);
  CHECK(a.margin == 1.0);
  const ConditionReport b = check_cone_condition(CrossSection::round_sphere(2, std::sqrt(2.0)), 3);
  CHECK(!b.admissible);
  CHECK(std::abs(b.margin) < 1e-15);
  const ConditionReport c = check_cone_condition(CrossSection::round_sphere(3, 1.0), 4);
  CHECK(c.admissible);
  CHECK(c.margin == 4.0);
  CHECK_THROWS_AS(check_cone_condition(CrossSection::round_sphere(2, 1.0), 4), InvalidParameter);
}

TEST_CASE("admissible exactly when c^2 < m") {
  for (int m = 2; m <= 7; ++m) {
    for (double c2 = 0.1; c2 < 2.0 * m; c2 += 0.173) {
      if (std::abs(c2 - m) < 1e-9) continue;
      const ConditionReport r = check_cone_condition(CrossSection::round_sphere(m, std::sqrt(c2)), m + 1);
      CHECK(r.admissible == (c2 < m));
      CHECK(r.margin == doctest::Approx(m * (m - 1.0) / c2 - (m - 1.0)));
    }
  }
}

TEST_CASE("nu examples and the subcritical error") {
  CHECK(nu(CrossSection::round_sphere(2, 1.0), 0, 3) == 1.0);
  CHECK(nu(CrossSection::round_sphere(3, 1.0), 1, 4) == 4.0);
  CHECK(nu(CrossSection::round_sphere(2, 1.0), 1, 3) == 3.0);
  try {
    nu(CrossSection::round_sphere(2, std::sqrt(2.0)), 0, 3);
    FAIL("expected a subcritical-mode error");
  } catch (const SubcriticalMode& e) {
    CHECK(std::abs(e.deficit()) < 1e-15);
  }
  try {
    nu(CrossSection::round_sphere(2, std::sqrt(2.5)), 0, 3);
    FAIL("expected a subcritical-mode error");
  } catch (const SubcriticalMode& e) {
    CHECK(e.deficit() == doctest::Approx(2.0 / 2.5 - 1.0));
  }
}

TEST_CASE("nu is nondecreasing in the level") {
  for (int m : {2, 3, 4}) {
    const CrossSection cs = CrossSection::round_sphere(m, 1.0);
    double prev = -1.0;
    for (std::size_t i = 0; i < 40; ++i) {
      const double v = nu(cs, i, m + 1);
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("explicit lists and file loading") {
  const std::vector<CrossSectionMode> modes{{2.0, 1}, {10.0, 3}, {26.0, 5}};
  const CrossSection cs = CrossSection::explicit_list(2, modes, 2.0, "listed S2", 4 * std::numbers::pi);
  REQUIRE(cs.mode_count().has_value());
  CHECK(*cs.mode_count() == 3);
  CHECK(cs.mu(1) == 10.0);
  CHECK(cs.mode(2).multiplicity == 5);
  CHECK_THROWS_AS(cs.mode(3), std::out_of_range);
  CHECK(cs.scaled(2.0).mu(1) == doctest::Approx(2.5));
  CHECK(check_cone_condition(cs, 3).margin == 1.0);

  CHECK_THROWS_AS(CrossSection::explicit_list(2, {{10.0, 1}, {2.0, 1}}, 2.0, "unsorted"), InvalidParameter);
  CHECK_THROWS_AS(CrossSection::explicit_list(2, {{2.0, 0}}, 2.0, "mult"), InvalidParameter);
  CHECK_THROWS_AS(CrossSection::explicit_list(2, {{1.0, 1}}, 2.0, "below min R"), InvalidParameter);
  CHECK_THROWS_AS(CrossSection::explicit_list(2, {}, 0.0, "empty"), InvalidParameter);

  const auto path = std::filesystem::temp_directory_path() / "conespec_test_link.json";
  {
    std::ofstream out(path);
    out << R"({"fiber_dim": 3, "scal_min": 6, "label": "S3 listed", "volume": 19.739208802178716,
               "modes": [{"mu": 6, "multiplicity": 1}, {"mu": 18, "multiplicity": 4}, {"mu": 38}]})";
  }
  const CrossSection loaded = CrossSection::load(path.string());
  CHECK(loaded.fiber_dim() == 3);
  CHECK(loaded.label() == "S3 listed");
  CHECK(*loaded.mode_count() == 3);
  CHECK(loaded.mode(1).multiplicity == 4);
  CHECK(loaded.mode(2).multiplicity == 1);
  CHECK(check_cone_condition(loaded, 4).margin == 4.0);
  std::filesystem::remove(path);
  CHECK_THROWS(CrossSection::load((std::filesystem::temp_directory_path() / "conespec_missing.json").string()));
}

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "diamond/atomic_data.hpp"
#include "diamond/cavity_link.hpp"
#include "diamond/diamond_model.hpp"
#include "diamond/full_model.hpp"

using namespace diamond;

namespace {

// CODATA 2018 values, kept separate from the library's constants.
constexpr double kC = 299792458.0;
constexpr double kHbar = 1.054571817e-34;
constexpr double kEps0 = 8.8541878128e-12;
constexpr double kE = 1.602176634e-19;
constexpr double kA0 = 5.29177210903e-11;
constexpr double kPi = std::numbers::pi;

CavityParams design_point() {
  CavityParams p;
  p.wavelength_nm = 1360.0;
  p.quality_factor = 2e5;
  p.mode_volume = 0.7;
  p.refractive_index = 2.016;
  p.dipole_ea0 = 2.0;
  p.decay_length_nm = 150.0;
  return p;
}

double oracle_g_si(const CavityParams& p, bool dielectric) {
  const double lambda = p.wavelength_nm * 1e-9;
  const double omega = 2.0 * kPi * kC / lambda;
  const double volume = p.mode_volume * std::pow(lambda / p.refractive_index, 3);
  const double n2 = dielectric ? p.refractive_index * p.refractive_index : 1.0;
  return p.dipole_ea0 * kE * kA0 * std::sqrt(omega / (2.0 * kHbar * kEps0 * n2 * volume));
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("kappa from the quality factor") {
  const auto p = design_point();
  const Rate k = kappa_from_q(p);
  const double oracle = 2.0 * kPi * kC / (1360e-9 * 2e5);
  CHECK(rel(k.si, oracle) < 1e-12);
  // 2 pi x 1.10 GHz within 1%.
  CHECK(std::abs(k.si / (2.0 * kPi * 1e9) - 1.10) <= 0.011);
  CHECK(rel(k.gamma_units, oracle / (2.0 * kPi * 3.28e6)) < 1e-12);

  auto doubled = p;
  doubled.quality_factor *= 2.0;
  CHECK(rel(kappa_from_q(doubled).si, 0.5 * k.si) < 1e-14);
  auto huge = p;
  huge.quality_factor = 1e300;
  CHECK(kappa_from_q(huge).si < 1e-280);
}

TEST_CASE("peak coupling from the mode volume") {
  auto p = design_point();
  const Rate g = g_from_mode_volume(p);
  CHECK(rel(g.si, oracle_g_si(p, true)) < 1e-9);
  CHECK(rel(g.gamma_units, si_to_gamma(g.si, 3.28)) < 1e-14);

  auto vacuum = p;
  vacuum.normalization = FieldNormalization::vacuum;
  CHECK(rel(g_from_mode_volume(vacuum).si, oracle_g_si(p, false)) < 1e-9);
  CHECK(rel(g_from_mode_volume(vacuum).si, p.refractive_index * g.si) < 1e-12);

  auto bigger = p;
  bigger.mode_volume *= 4.0;
  CHECK(rel(g_from_mode_volume(bigger).si, 0.5 * g.si) < 1e-14);
  auto dark = p;
  dark.dipole_ea0 = 0.0;
  CHECK(g_from_mode_volume(dark).si == 0.0);
  CHECK(mode_volume_m3(p) == doctest::Approx(0.7 * std::pow(1360e-9 / 2.016, 3)).epsilon(1e-12));
}

TEST_CASE("evanescent decay of the coupling") {
  const auto p = design_point();
  const double peak = g_from_mode_volume(p).gamma_units;
  CHECK(g_at_distance(p, 0.0).gamma_units == doctest::Approx(peak).epsilon(1e-15));
  CHECK(rel(g_at_distance(p, p.decay_length_nm).gamma_units, peak / std::numbers::e) < 1e-14);
  double previous = peak;
  for (double z = 10.0; z <= 1000.0; z += 10.0) {
    const double g = g_at_distance(p, z).gamma_units;
    CHECK(g < previous);
    previous = g;
  }
  CHECK_THROWS_AS(g_at_distance(p, -1.0), std::invalid_argument);
}

TEST_CASE("critical coupling splits kappa evenly") {
  const auto [kf, kl] = critical_split(200.0);
  CHECK(kf == 100.0);
  CHECK(kl == 100.0);
  for (double k : {1.0, 3.7, 2000.0}) {
    const auto [a, b] = critical_split(k);
    CHECK(a + b == doctest::Approx(k).epsilon(1e-15));
    CHECK(a == b);
  }
}

TEST_CASE("property: cooperativity scales as Q / V") {
  const auto p = design_point();
  auto c_of = [](const CavityParams& q) {
    return cooperativity(g_from_mode_volume(q).gamma_units, kappa_from_q(q).gamma_units, 1.0, 1.38);
  };
  const double c0 = c_of(p);
  auto q2 = p;
  q2.quality_factor *= 2.0;
  CHECK(rel(c_of(q2), 2.0 * c0) < 1e-12);
  auto v2 = p;
  v2.mode_volume *= 2.0;
  CHECK(rel(c_of(v2), 0.5 * c0) < 1e-12);
  auto both = p;
  both.quality_factor *= 2.0;
  both.mode_volume *= 2.0;
  CHECK(rel(c_of(both), c0) < 1e-12);
}

TEST_CASE("property: SI and gamma units are exact inverses") {
  for (double ref : {3.28, 5.2, 0.1})
    for (double r : {1e-3, 1.0, 1234.5, 6.9e9}) {
      CHECK(rel(gamma_to_si(si_to_gamma(r, ref), ref), r) <= 1e-12);
      CHECK(rel(si_to_gamma(gamma_to_si(r, ref), ref), r) <= 1e-12);
    }
  CHECK(rel(gamma_to_si(1.0, 3.28), 2.0 * kPi * 3.28e6) < 1e-15);
}

TEST_CASE("invalid cavity parameters name the field") {
  auto expect = [](CavityParams p, const std::string& field) {
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find(field) != std::string::npos);
      return;
    }
    FAIL("accepted invalid " << field);
  };
  auto p = design_point();
  p.quality_factor = 0.0;
  expect(p, "quality_factor");
  p = design_point();
  p.refractive_index = 1.0;
  expect(p, "refractive_index");
  p = design_point();
  p.mode_volume = -1.0;
  expect(p, "mode_volume");
  p = design_point();
  p.wavelength_nm = std::nan("");
  expect(p, "wavelength_nm");
  p = design_point();
  p.surface_distance_nm = -5.0;
  expect(p, "surface_distance_nm");
}

TEST_CASE("bundled cavity design and the cesium cavity transition") {
  const auto design = bundled_cavity_design();
  CHECK(design.params.quality_factor == 2e5);
  CHECK(design.params.mode_volume == 0.7);
  CHECK(design.params.refractive_index == 2.016);
  CHECK_FALSE(design.data_version.empty());
  CHECK(design.provenance.count("decay_length_nm") == 1);

  const auto cs = bundled_atom_spec("cesium");
  const auto p = cavity_params_for(cs, "clock", design);
  CHECK(p.wavelength_nm == cs.wavelength_nm("6P1/2", "7S1/2"));
  CHECK(p.reference_gamma_2pi_mhz == 3.28);
  // <7S F=4 m=0| d_0 |6P1/2 F=3 m=0> from the reduced element.
  const auto& r = cs.role("clock");
  const double expected =
      std::abs(dipole_amplitude(cs, r.e3, r.e2, 0)) * cs.reduced_dipole("6P1/2", "7S1/2") / std::sqrt(2.0);
  CHECK(rel(p.dipole_ea0, expected) < 1e-14);
  CHECK(p.dipole_ea0 > 0.5);
  CHECK(p.dipole_ea0 < 4.249);

  nlohmann::json j = nlohmann::json::parse(R"({"schema_version": 1, "data_version": "x",
    "quality_factor": 1e5, "mode_volume": 1.0, "refractive_index": 2.0, "decay_length_nm": 100.0})");
  CHECK(parse_cavity_design(j.dump()).params.quality_factor == 1e5);
  j["finesse"] = 3;
  CHECK_THROWS_AS(parse_cavity_design(j.dump()), AtomDataError);
  j.erase("finesse");
  j["mode_volume"] = -1.0;
  CHECK_THROWS_AS(parse_cavity_design(j.dump()), AtomDataError);
}

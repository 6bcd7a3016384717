#include <doctest.h>
#include <cmath>

#include "mpmwg/materials.hpp"
#include "test_support.hpp"

using namespace mpmwg;

// Reference values evaluated independently from the published coefficients.
TEST_CASE("Sellmeier oracle values") {
  const auto lne = materials::lithium_niobate_extraordinary();
  const auto lno = materials::lithium_niobate_ordinary();
  const auto silica = materials::fused_silica();
  CHECK(lne.refractive_index(1.55) == doctest::Approx(2.1375596498).epsilon(1e-9));
  CHECK(lne.refractive_index(1.53) == doctest::Approx(2.1381403056).epsilon(1e-9));
  CHECK(lne.refractive_index(0.765) == doctest::Approx(2.1796148180).epsilon(1e-9));
  CHECK(lno.refractive_index(1.55) == doctest::Approx(2.2111110087).epsilon(1e-9));
  CHECK(silica.refractive_index(1.55) == doctest::Approx(1.4440236217).epsilon(1e-9));
  CHECK(silica.refractive_index(0.765) == doctest::Approx(1.4539484451).epsilon(1e-9));
  CHECK(refractive_index(lne, 1.55) == doctest::Approx(2.138).epsilon(1e-3));
  CHECK(refractive_index(silica, 1.55) == doctest::Approx(1.444).epsilon(1e-3));
}

TEST_CASE("vacuum and air are unity everywhere") {
  for (double wl : {0.2, 0.765, 1.53, 10.0}) {
    CHECK(materials::vacuum().refractive_index(wl) == 1.0);
    CHECK(materials::air().refractive_index(wl) == 1.0);
  }
}

TEST_CASE("evaluation outside the valid range is an error") {
  const auto lne = materials::lithium_niobate_extraordinary();
  CHECK_ERRC(lne.refractive_index(0.30), Errc::out_of_transparency_window);
  CHECK_ERRC(lne.refractive_index(5.3), Errc::out_of_transparency_window);
  CHECK_ERRC(materials::fused_silica().refractive_index(0.2), Errc::out_of_transparency_window);
}

TEST_CASE("check_transparency window is closed") {
  CHECK(check_transparency(1.530));
  CHECK_FALSE(check_transparency(0.30));
  CHECK(check_transparency(5.2));
  CHECK(check_transparency(0.35));
  CHECK_FALSE(check_transparency(5.2001));
}

TEST_CASE("indices are at least one across every valid range") {
  const auto lib = MaterialLibrary::builtin();
  for (const auto& name : lib.names()) {
    const auto& m = lib.get(name);
    const auto r = m.valid_range();
    const double hi = std::min(r.max_um, 20.0);
    for (int k = 0; k <= 200; ++k) {
      const double lo = std::max(r.min_um, 0.1);
      const double wl = lo + (hi - lo) * k / 200.0;
      CHECK(m.refractive_index(wl) >= 1.0);
    }
  }
}

TEST_CASE("material library from YAML") {
  const auto lib = MaterialLibrary::from_yaml_string(R"(
custom:
  coefficients: [1.0, 0.01]
  range: [0.5, 2.0]
  axis: isotropic
)");
  CHECK(lib.contains("custom"));
  CHECK(lib.contains("ln_e"));
  const double wl = 1.0;
  CHECK(lib.get("custom").refractive_index(wl) == doctest::Approx(std::sqrt(1.0 + 1.0 / (1.0 - 0.01))));
  CHECK_ERRC(MaterialLibrary::from_yaml_string("bad: {coefficients: [1, 0.1], range: [0.5, 2], colour: red}"),
             Errc::config_error);
  CHECK_ERRC(MaterialLibrary::from_yaml_string("bad: {coefficients: [1], range: [0.5, 2]}"), Errc::config_error);
  CHECK_ERRC(lib.get("unobtainium"), Errc::config_error);
}

TEST_CASE("nonlinear coefficients") {
  CHECK(NonlinearCoefficients::d33_pm_per_v == doctest::Approx(-34.4));
}

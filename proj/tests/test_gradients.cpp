#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dscnn/gradcheck.hpp"

using namespace dscnn;

// Full-depth finite-difference runs live in the acceptance suite; the unit
// test keeps a smaller instance count for quick iteration.
TEST_CASE("every layer and variant passes the finite-difference check") {
  GradCheckOptions opts;
  opts.instances = 4;
  const auto cases = run_gradient_checks(opts);
  CHECK(cases.size() == 11);
  for (const GradCheckCase& c : cases) {
    INFO(c.name, " max_rel_err=", c.max_rel_err);
    CHECK(c.pass);
    CHECK(c.instances == opts.instances);
    CHECK(c.components > 0);
    CHECK(c.max_rel_err <= opts.tolerance);
  }
}

TEST_CASE("relative error uses a guarded denominator") {
  CHECK(gradcheck_relative_error(1.0, 1.0) == 0.0);
  CHECK(gradcheck_relative_error(2.0, 1.0) == doctest::Approx(0.5));
  CHECK(gradcheck_relative_error(0.0, 1e-9) == doctest::Approx(1e-6));
}

#include <regex>

#include "doctest.h"
#include "flipguard/error.hpp"
#include "flipguard/plot.hpp"

using namespace flipguard;

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

SummaryRow summary(double fraction, ConditionKind kind, double mean) {
  return {"d", fraction, {kind}, mean, 0.0, 1};
}

}  // namespace

TEST_CASE("one condition, two fractions") {
  const auto svg = render_error_plot({summary(0.0, ConditionKind::kUndefended, 0.1),
                                      summary(0.2, ConditionKind::kUndefended, 0.3)});
  CHECK(count(svg, "<polyline") == 1);
  std::smatch m;
  REQUIRE(std::regex_search(svg, m, std::regex("<polyline[^>]*points=\"([^\"]*)\"")));
  const std::string points = m[1];
  CHECK(count(points, ",") == 2);
  CHECK(svg.find("#d62728") != std::string::npos);
  CHECK(svg.find("Poisoning points (%)") != std::string::npos);
  CHECK(svg.find("Average test classification error") != std::string::npos);
}

TEST_CASE("colours follow the condition") {
  const auto svg = render_error_plot({summary(0.0, ConditionKind::kClean, 0.05),
                                      summary(0.0, ConditionKind::kDefended, 0.06),
                                      summary(0.1, ConditionKind::kDefended, 0.08)},
                                     {"a & b"});
  CHECK(count(svg, "<polyline") == 2);
  CHECK(svg.find("#1f77b4") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
  CHECK(svg.find("a &amp; b") != std::string::npos);
}

TEST_CASE("empty summary") { CHECK_THROWS_AS(render_error_plot({}), DataError); }

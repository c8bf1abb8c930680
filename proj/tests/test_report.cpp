#include "maps/report.hpp"

#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

namespace maps {
namespace {

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

UsageReport two_task_usage() {
  Matrix a = Matrix::Zero(3, 2);
  a.row(0).setOnes();
  Matrix b = Matrix::Constant(3, 4, 1.0 / 3);
  return usage_from_scores(std::vector<Matrix>{a, b});
}

// Every opened tag is closed in order; self-closing tags are skipped.
bool tags_balance(const std::string& svg) {
  std::vector<std::string> stack;
  for (std::size_t pos = svg.find('<'); pos != std::string::npos; pos = svg.find('<', pos + 1)) {
    const std::size_t end = svg.find('>', pos);
    if (end == std::string::npos) return false;
    const std::string tag = svg.substr(pos + 1, end - pos - 1);
    if (tag.empty() || tag[0] == '?' || tag[0] == '!' || tag.back() == '/') continue;
    const std::string name = tag.substr(tag[0] == '/' ? 1 : 0, tag.find_first_of(" \t\n") -
                                                                   (tag[0] == '/' ? 1 : 0));
    if (tag[0] == '/') {
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
    } else {
      stack.push_back(name);
    }
  }
  return stack.empty();
}

TEST(Report, SuccessCsv) {
  std::ostringstream out;
  const TaskSuite suite = suite_subbehavior();
  const std::vector<double> rates{1.0, 0.5, 0.25, 0.0};
  write_success_csv(out, suite, Method::mtmh, rates);
  const auto l = lines(out.str());
  ASSERT_EQ(l.size(), 5u);
  EXPECT_EQ(l[0], kSuccessHeader);
  EXPECT_EQ(l[1], "subbehavior,0,forward,mtmh,1");
  EXPECT_EQ(l[2], "subbehavior,1,backward,mtmh,0.5");
}

TEST(Report, UsageCsv) {
  std::ostringstream out;
  write_usage_csv(out, two_task_usage());
  const auto l = lines(out.str());
  ASSERT_EQ(l.size(), 1u + 2 * 3);
  EXPECT_EQ(l[0], kUsageHeader);
  EXPECT_EQ(l[1], "0,0,1,1,1");
  EXPECT_EQ(l[2], "0,1,0,0,1");
  EXPECT_EQ(l[4].substr(0, 4), "1,0,");
}

TEST(Report, RealsRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17}) EXPECT_EQ(std::stod(format_real(v)), v);
  EXPECT_EQ(format_real(0.5), "0.5");
}

TEST(Report, ComparisonAndTallyCsv) {
  ComparisonTable t;
  t.cells = {{SuiteId::morph, 1, 10, Method::single, {0.5, 0.7}, 0.6, 0.1},
             {SuiteId::morph, 1, 10, Method::maps, {0.75, 0.75}, 0.75, 0.0}};
  std::ostringstream out;
  write_comparison_csv(out, t);
  auto l = lines(out.str());
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[0], kComparisonHeader);
  EXPECT_EQ(l[2], "morph,1,10,maps,0.75,0,2");

  const auto tally = tally_against_single(t);
  std::ostringstream tout;
  write_tally_csv(tout, tally);
  l = lines(tout.str());
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[0], kTallyHeader);
  EXPECT_EQ(l[1], "maps,1,0,0,1,1,0");
}

TEST(Report, SvgIsWellFormed) {
  std::ostringstream out;
  write_usage_svg(out, two_task_usage(), "usage <tasks & modules>");
  const std::string svg = out.str();
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("&lt;tasks &amp; modules&gt;"), std::string::npos);
  EXPECT_EQ(svg.find("<tasks"), std::string::npos);
  EXPECT_TRUE(tags_balance(svg));
  std::size_t bars = 0;
  for (std::size_t p = svg.find("<rect"); p != std::string::npos; p = svg.find("<rect", p + 1)) ++bars;
  EXPECT_GE(bars, 6u);
}

}  // namespace
}  // namespace maps

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "erlab/errors.hpp"
#include "erlab/plot.hpp"

using namespace erlab;

namespace {

// Minimal well-formedness check: every element closes in order.
bool balanced_xml(const std::string& text) {
  std::vector<std::string> stack;
  std::size_t pos = 0;
  while ((pos = text.find('<', pos)) != std::string::npos) {
    const std::size_t end = text.find('>', pos);
    if (end == std::string::npos) return false;
    const std::string tag = text.substr(pos + 1, end - pos - 1);
    pos = end + 1;
    if (tag.empty()) return false;
    if (tag[0] == '?' || tag[0] == '!') continue;
    if (tag.back() == '/') continue;
    const std::string name = tag.substr(tag[0] == '/' ? 1 : 0, tag.find_first_of(" \t\n/", 1) - (tag[0] == '/' ? 1 : 0));
    if (tag[0] == '/') {
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
    } else {
      stack.push_back(name);
    }
  }
  return stack.empty();
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("single point gives one marker") {
  Figure fig;
  fig.title = "one";
  fig.series.push_back({"s", {1.0}, {2.0}});
  const std::string svg = render_svg(fig);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(count(svg, "<circle") == 1);
  CHECK(balanced_xml(svg));
}

TEST_CASE("rendering is deterministic") {
  Figure fig;
  fig.title = "G versus beta";
  fig.log_x = true;
  fig.series.push_back({"logdet", {0.01, 0.1, 1.0}, {3.0, 2.0, 6.0}});
  fig.series.push_back({"softmax & co", {0.01, 0.1, 1.0}, {0.1, 0.12, 0.15}});
  const std::string a = render_svg(fig);
  CHECK(a == render_svg(fig));
  CHECK(balanced_xml(a));
  CHECK(a.find("&amp;") != std::string::npos);

  const std::string path = "test_plot_tmp.svg";
  emit_plot(fig, path);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == a);
  std::filesystem::remove(path);
}

TEST_CASE("non-finite points are skipped") {
  Figure fig;
  fig.series.push_back({"s", {0.0, 1.0, 2.0}, {1.0, std::numeric_limits<double>::quiet_NaN(), 3.0}});
  const std::string svg = render_svg(fig);
  CHECK(count(svg, "<circle") == 2);
}

TEST_CASE("empty input is an error") {
  CHECK_THROWS_AS(render_svg(Figure{}), ValidationError);
  Figure fig;
  fig.series.push_back({"empty", {}, {}});
  CHECK_THROWS_AS(render_svg(fig), ValidationError);
}

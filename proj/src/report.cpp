#include "maps/report.hpp"

#include <cstdio>
#include <ostream>

namespace maps {
namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2",
                                    "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
                                    "#9c755f", "#bab0ac"};

}  // namespace

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_success_csv(std::ostream& out, const TaskSuite& suite, Method method,
                       std::span<const double> rates) {
  out << kSuccessHeader << '\n';
  for (std::size_t k = 0; k < rates.size() && k < suite.tasks.size(); ++k)
    out << to_string(suite.id) << ',' << k << ',' << suite.tasks[k].name << ','
        << to_string(method) << ',' << format_real(rates[k]) << '\n';
}

void write_usage_csv(std::ostream& out, const UsageReport& usage) {
  out << kUsageHeader << '\n';
  for (int k = 0; k < usage.num_tasks(); ++k)
    for (int m = 0; m < usage.num_modules(); ++m)
      out << k << ',' << m << ',' << format_real(usage.mean_gate(k, m)) << ','
          << format_real(usage.argmax_fraction(k, m)) << ','
          << format_real(usage.effective_modules[k]) << '\n';
}

void write_ablation_csv(std::ostream& out, const AblationResult& r) {
  out << kAblationHeader << '\n';
  const std::string aggregate = format_real(r.usage.aggregate_effective_modules());
  const std::string overlap = format_real(r.usage.pairwise_overlap());
  for (int k = 0; k < r.usage.num_tasks(); ++k) {
    std::string row;
    for (int m = 0; m < r.usage.num_modules(); ++m) {
      if (m) row += ' ';
      row += format_real(r.usage.mean_gate(k, m));
    }
    out << to_string(r.term) << ',' << k << ','
        << format_real(r.success[static_cast<std::size_t>(k)]) << ',' << row << ','
        << format_real(r.usage.effective_modules[k]) << ',' << aggregate << ','
        << overlap << '\n';
  }
}

void write_comparison_csv(std::ostream& out, const ComparisonTable& table) {
  out << kComparisonHeader << '\n';
  for (const auto& c : table.cells)
    out << to_string(c.suite) << ',' << c.task << ',' << c.experts << ','
        << to_string(c.method) << ',' << format_real(c.mean) << ','
        << format_real(c.stddev) << ',' << c.per_seed.size() << '\n';
}

void write_tally_csv(std::ostream& out, std::span<const Tally> tally) {
  out << kTallyHeader << '\n';
  for (const auto& t : tally)
    out << to_string(t.method) << ',' << t.better << ',' << t.worse << ','
        << t.ties << ',' << t.cells() << ',' << format_real(t.better_fraction())
        << ',' << format_real(t.worse_fraction()) << '\n';
}

void write_usage_svg(std::ostream& out, const UsageReport& usage,
                     std::string_view title) {
  const int k = usage.num_tasks();
  const int m = usage.num_modules();
  const double bar = 14.0;
  const double gap = 18.0;
  const double left = 50.0;
  const double top = 40.0;
  const double plot_h = 200.0;
  const double group = m * bar + gap;
  const double width = left + k * group + 20.0 + 110.0;
  const double height = top + plot_h + 50.0;
  const double base = top + plot_h;

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width)
      << "\" height=\"" << fixed(height) << "\" font-family=\"sans-serif\""
      << " font-size=\"11\">\n";
  out << "  <text x=\"" << fixed(left) << "\" y=\"20\" font-size=\"14\">"
      << xml_escape(title) << "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double y = base - plot_h * t / 4.0;
    out << "  <line x1=\"" << fixed(left) << "\" y1=\"" << fixed(y) << "\" x2=\""
        << fixed(left + k * group) << "\" y2=\"" << fixed(y)
        << "\" stroke=\"#dddddd\"/>\n";
    out << "  <text x=\"" << fixed(left - 6) << "\" y=\"" << fixed(y + 4)
        << "\" text-anchor=\"end\">" << fixed(t / 4.0) << "</text>\n";
  }
  for (int task = 0; task < k; ++task) {
    const double x0 = left + gap / 2 + task * group;
    for (int mod = 0; mod < m; ++mod) {
      const double h = plot_h * usage.mean_gate(task, mod);
      out << "  <rect x=\"" << fixed(x0 + mod * bar) << "\" y=\"" << fixed(base - h)
          << "\" width=\"" << fixed(bar - 1) << "\" height=\"" << fixed(h)
          << "\" fill=\"" << kPalette[mod % 10] << "\"/>\n";
    }
    out << "  <text x=\"" << fixed(x0 + m * bar / 2) << "\" y=\"" << fixed(base + 16)
        << "\" text-anchor=\"middle\">task " << task << "</text>\n";
  }
  out << "  <line x1=\"" << fixed(left) << "\" y1=\"" << fixed(base) << "\" x2=\""
      << fixed(left + k * group) << "\" y2=\"" << fixed(base)
      << "\" stroke=\"black\"/>\n";
  const double lx = left + k * group + 20.0;
  for (int mod = 0; mod < m; ++mod) {
    const double y = top + mod * 16.0;
    out << "  <rect x=\"" << fixed(lx) << "\" y=\"" << fixed(y) << "\" width=\"10\""
        << " height=\"10\" fill=\"" << kPalette[mod % 10] << "\"/>\n";
    out << "  <text x=\"" << fixed(lx + 14) << "\" y=\"" << fixed(y + 9)
        << "\">module " << mod << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace maps

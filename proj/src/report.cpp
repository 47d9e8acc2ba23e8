#include "hintqa/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace hintqa {
namespace {

using nlohmann::json;

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string pad(std::string_view s, std::size_t width) {
  std::string out(s);
  if (out.size() < width) out.append(width - out.size(), ' ');
  return out;
}

std::string lpad(std::string_view s, std::size_t width) {
  std::string out;
  if (s.size() < width) out.append(width - s.size(), ' ');
  out.append(s);
  return out;
}

bool has_ordering(const EvalReport& r, Ordering o) {
  return std::any_of(r.cells.begin(), r.cells.end(),
                     [o](const ReportCell& c) { return c.ordering == o; });
}

/// Ordering shown in the method/group table: Canonical when present.
Ordering primary_ordering(const EvalReport& r) {
  for (auto o : {Ordering::Canonical, Ordering::Descending, Ordering::Ascending}) {
    if (has_ordering(r, o)) return o;
  }
  return Ordering::Canonical;
}

struct Metric {
  std::string_view label;
  double MetricScores::*field;
};

constexpr Metric kMetrics[] = {{"ExactMatch", &MetricScores::em},
                               {"Precision", &MetricScores::precision},
                               {"Recall", &MetricScores::recall},
                               {"F1", &MetricScores::f1}};

}  // namespace

std::string render_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "model,method,group,ordering,count,em,precision,recall,f1\n";
  for (const auto& c : report.cells) {
    std::string model = c.model;
    if (model.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char ch : model) {
        if (ch == '"') quoted += '"';
        quoted += ch;
      }
      model = quoted + "\"";
    }
    out << model << ',' << to_string(c.method) << ',' << to_string(c.group) << ','
        << to_string(c.ordering) << ',' << c.count << ',' << fixed2(c.percent.em) << ','
        << fixed2(c.percent.precision) << ',' << fixed2(c.percent.recall) << ','
        << fixed2(c.percent.f1) << '\n';
  }
  return out.str();
}

std::string render_table(const EvalReport& report) {
  std::ostringstream out;
  const std::size_t label_w = 24;
  std::vector<std::size_t> col_w;
  for (const auto& m : report.models) col_w.push_back(std::max<std::size_t>(m.size(), 8) + 2);

  auto header = [&](std::string_view first) {
    std::string line = pad(first, label_w);
    for (std::size_t i = 0; i < report.models.size(); ++i) line += lpad(report.models[i], col_w[i]);
    std::string rule(line.size(), '-');
    out << line << '\n' << rule << '\n';
    return rule;
  };
  auto row = [&](std::string_view label, auto&& value_of) {
    std::string line = pad(label, label_w);
    for (std::size_t i = 0; i < report.models.size(); ++i) {
      line += lpad(value_of(report.models[i]), col_w[i]);
    }
    out << line << '\n';
  };

  const auto ordering = primary_ordering(report);
  const char* unit = report.unit == AggregationUnit::Passage ? "per passage" : "per question";
  out << "Performance (%) by selection method and group (" << unit << ", "
      << display_name(ordering) << " ordering)\n\n";
  auto rule = header("Metric / Method");
  for (const auto& metric : kMetrics) {
    out << metric.label << '\n';
    for (auto method : {Method::Convergence, Method::CosineSimilarity}) {
      bool any = std::any_of(report.cells.begin(), report.cells.end(), [&](const ReportCell& c) {
        return c.method == method && c.ordering == ordering;
      });
      if (!any) continue;
      out << display_name(method) << '\n';
      for (auto group : {Group::High, Group::Low}) {
        row(display_name(group), [&](const std::string& model) {
          const auto* c = report.find(method, group, ordering, model);
          return c ? fixed2(c->percent.*metric.field) : std::string("-");
        });
      }
    }
    out << rule << '\n';
  }

  std::vector<Ordering> conv_orderings;
  for (auto o : {Ordering::Descending, Ordering::Ascending, Ordering::Canonical}) {
    bool any = std::any_of(report.cells.begin(), report.cells.end(), [&](const ReportCell& c) {
      return c.method == Method::Convergence && c.ordering == o;
    });
    if (any) conv_orderings.push_back(o);
  }
  if (conv_orderings.size() >= 2) {
    out << "\nExactMatch (%) by sentence ordering (Convergence, " << unit << ")\n\n";
    auto rule2 = header("Method");
    for (auto group : {Group::High, Group::Low}) {
      out << display_name(group) << '\n';
      for (auto o : conv_orderings) {
        row(display_name(o), [&](const std::string& model) {
          const auto* c = report.find(Method::Convergence, group, o, model);
          return c ? fixed2(c->percent.em) : std::string("-");
        });
      }
      out << rule2 << '\n';
    }
  }

  for (const auto& w : report.warnings) out << "warning: " << w << '\n';
  return out.str();
}

json render_json(const EvalReport& report) {
  json cells = json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"model", c.model},
                     {"method", to_string(c.method)},
                     {"group", to_string(c.group)},
                     {"ordering", to_string(c.ordering)},
                     {"count", c.count},
                     {"em", c.percent.em},
                     {"precision", c.percent.precision},
                     {"recall", c.percent.recall},
                     {"f1", c.percent.f1}});
  }
  return {{"unit", report.unit == AggregationUnit::Passage ? "passage" : "question"},
          {"models", report.models},
          {"cells", std::move(cells)},
          {"warnings", report.warnings}};
}

}  // namespace hintqa

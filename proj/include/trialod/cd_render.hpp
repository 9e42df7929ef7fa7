#pragma once

// Critical-difference diagram rendering (SVG 1.1 and 80-column ASCII).
// Output is a pure function of the inputs, byte for byte.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "trialod/ranking.hpp"

namespace trialod {

namespace detail {

inline std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace detail

inline std::string render_cd_svg(const CDResult& cd, const RankTable& table) {
  const std::size_t k = table.n_methods();
  const double left = 140.0, right = 500.0, axis_y = 70.0;
  const auto x_of = [&](double rank) {
    return k < 2 ? left : left + (rank - 1.0) / static_cast<double>(k - 1) * (right - left);
  };
  const std::size_t left_count = (k + 1) / 2;
  const std::size_t label_rows = left_count;
  const double clique_top = axis_y + 14.0;
  const double labels_top = clique_top + 10.0 * static_cast<double>(cd.cliques.size()) + 16.0;
  const double height = labels_top + 20.0 * static_cast<double>(label_rows) + 20.0;

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"640\" height=\"" +
       detail::fmt("%.0f", height) + "\" viewBox=\"0 0 640 " + detail::fmt("%.0f", height) + "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"" + detail::fmt("%.0f", height) + "\" fill=\"white\"/>\n";
  s += "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"black\" stroke=\"black\">\n";

  // Axis with integer ticks.
  s += "<line x1=\"" + detail::fmt("%.2f", x_of(1.0)) + "\" y1=\"" + detail::fmt("%.2f", axis_y) + "\" x2=\"" +
       detail::fmt("%.2f", x_of(static_cast<double>(k))) + "\" y2=\"" + detail::fmt("%.2f", axis_y) +
       "\" stroke-width=\"1\"/>\n";
  for (std::size_t r = 1; r <= k; ++r) {
    const double x = x_of(static_cast<double>(r));
    s += "<line x1=\"" + detail::fmt("%.2f", x) + "\" y1=\"" + detail::fmt("%.2f", axis_y - 5.0) + "\" x2=\"" +
         detail::fmt("%.2f", x) + "\" y2=\"" + detail::fmt("%.2f", axis_y) + "\" stroke-width=\"1\"/>\n";
    s += "<text x=\"" + detail::fmt("%.2f", x) + "\" y=\"" + detail::fmt("%.2f", axis_y - 9.0) +
         "\" text-anchor=\"middle\" stroke=\"none\">" + std::to_string(r) + "</text>\n";
  }

  // Critical distance bar, anchored at rank 1.
  const double cd_end = x_of(std::min(1.0 + cd.critical_distance, static_cast<double>(std::max<std::size_t>(k, 1))));
  s += "<line x1=\"" + detail::fmt("%.2f", x_of(1.0)) + "\" y1=\"30.00\" x2=\"" + detail::fmt("%.2f", cd_end) +
       "\" y2=\"30.00\" stroke-width=\"2\"/>\n";
  s += "<text x=\"" + detail::fmt("%.2f", 0.5 * (x_of(1.0) + cd_end)) +
       "\" y=\"24.00\" text-anchor=\"middle\" stroke=\"none\">CD = " + detail::fmt("%.4f", cd.critical_distance) +
       "</text>\n";

  // Cliques: thick bars joining indistinguishable methods.
  for (std::size_t c = 0; c < cd.cliques.size(); ++c) {
    const auto& members = cd.cliques[c];
    const double y = clique_top + 10.0 * static_cast<double>(c);
    s += "<line class=\"clique\" x1=\"" + detail::fmt("%.2f", x_of(table.average_ranks[members.front()]) - 3.0) +
         "\" y1=\"" + detail::fmt("%.2f", y) + "\" x2=\"" +
         detail::fmt("%.2f", x_of(table.average_ranks[members.back()]) + 3.0) + "\" y2=\"" + detail::fmt("%.2f", y) +
         "\" stroke-width=\"4\"/>\n";
  }

  // Method labels: best half on the left, the rest on the right.
  for (std::size_t pos = 0; pos < cd.order.size(); ++pos) {
    const std::size_t m = cd.order[pos];
    const bool on_left = pos < left_count;
    const std::size_t row = on_left ? pos : cd.order.size() - 1 - pos;
    const double y = labels_top + 20.0 * static_cast<double>(row);
    const double x = x_of(table.average_ranks[m]);
    const double end_x = on_left ? left - 10.0 : right + 10.0;
    s += "<polyline points=\"" + detail::fmt("%.2f", x) + "," + detail::fmt("%.2f", axis_y) + " " +
         detail::fmt("%.2f", x) + "," + detail::fmt("%.2f", y) + " " + detail::fmt("%.2f", end_x) + "," +
         detail::fmt("%.2f", y) + "\" fill=\"none\" stroke-width=\"1\"/>\n";
    s += "<text x=\"" + detail::fmt("%.2f", on_left ? end_x - 4.0 : end_x + 4.0) + "\" y=\"" +
         detail::fmt("%.2f", y + 4.0) + "\" text-anchor=\"" + (on_left ? "end" : "start") + "\" stroke=\"none\">" +
         detail::xml_escape(table.methods[m]) + " (" + detail::fmt("%.3f", table.average_ranks[m]) + ")</text>\n";
  }
  s += "</g>\n</svg>\n";
  return s;
}

inline std::string render_cd_text(const CDResult& cd, const RankTable& table) {
  constexpr std::size_t kLabel = 12, kArea = 58, kWidth = 80;
  const std::size_t k = table.n_methods();
  const auto col_of = [&](double rank) -> std::size_t {
    if (k < 2) return 0;
    const double t = std::clamp((rank - 1.0) / static_cast<double>(k - 1), 0.0, 1.0);
    return static_cast<std::size_t>(std::lround(t * static_cast<double>(kArea - 1)));
  };
  const auto fit = [&](std::string line) {
    while (!line.empty() && line.back() == ' ') line.pop_back();
    if (line.size() > kWidth) line.resize(kWidth);
    return line + "\n";
  };
  const auto label = [&](std::string name) {
    if (name.size() > kLabel - 1) name.resize(kLabel - 1);
    return name + std::string(kLabel - name.size(), ' ');
  };

  std::string out;
  out += fit("Critical difference: " + std::to_string(k) + " methods, N=" + std::to_string(table.n_datasets()) +
             ", alpha=" + detail::fmt("%.2f", cd.alpha) + ", CD=" + detail::fmt("%.4f", cd.critical_distance));
  out += fit("Friedman chi2=" + detail::fmt("%.4f", cd.friedman_statistic) + ", p=" + detail::fmt("%.4g", cd.friedman_p));

  std::string ticks(kArea, ' '), axis(kArea, '-');
  for (std::size_t r = 1; r <= k; ++r) {
    const std::size_t c = col_of(static_cast<double>(r));
    axis[c] = '|';
    const std::string num = std::to_string(r);
    const std::size_t at = std::min(c, kArea - num.size());
    for (std::size_t t = 0; t < num.size(); ++t) ticks[at + t] = num[t];
  }
  out += fit(std::string(kLabel, ' ') + ticks);
  out += fit(std::string(kLabel, ' ') + axis);

  for (std::size_t m : cd.order) {
    std::string area(kArea, ' ');
    area[col_of(table.average_ranks[m])] = '*';
    out += fit(label(table.methods[m]) + area + " " + detail::fmt("%.3f", table.average_ranks[m]));
  }

  std::string cd_bar(kArea, ' ');
  const std::size_t cd_end = col_of(1.0 + cd.critical_distance);
  for (std::size_t c = 0; c <= cd_end; ++c) cd_bar[c] = '=';
  out += fit(label("CD") + cd_bar);

  for (std::size_t c = 0; c < cd.cliques.size(); ++c) {
    const auto& members = cd.cliques[c];
    std::string bar(kArea, ' ');
    for (std::size_t p = col_of(table.average_ranks[members.front()]); p <= col_of(table.average_ranks[members.back()]); ++p) {
      bar[p] = '#';
    }
    out += fit(label("clique " + std::to_string(c + 1)) + bar);
  }
  for (std::size_t c = 0; c < cd.cliques.size(); ++c) {
    std::string names;
    for (std::size_t m : cd.cliques[c]) names += (names.empty() ? "" : ", ") + table.methods[m];
    out += fit("clique " + std::to_string(c + 1) + ": " + names);
  }
  if (cd.cliques.empty()) out += fit("no cliques: every pair of methods differs by at least CD");
  return out;
}

}  // namespace trialod

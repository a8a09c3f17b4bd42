#include "tsfuse/harness/plots.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "tsfuse/errors.h"

namespace tsfuse::plots {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header(int w, int h) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\" font-family=\"sans-serif\" font-size=\"11\">\n"
      "<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n",
      w, h, w, h, w, h);
}

std::string text(double x, double y, const std::string& s,
                 const char* anchor = "start", int size = 11) {
  return fmt::format(
      "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"{}\" font-size=\"{}\">{}"
      "</text>\n",
      x, y, anchor, size, escape(s));
}

// Diverging blue-white-red over z in [-2, 2].
std::string diverging(double z) {
  const double t = std::clamp(z / 2.0, -1.0, 1.0);
  auto mix = [](double a, double b, double u) {
    return static_cast<int>(std::lround(a + (b - a) * u));
  };
  if (t >= 0) {
    return fmt::format("rgb({},{},{})", mix(255, 202, t), mix(255, 0, t),
                       mix(255, 32, t));
  }
  return fmt::format("rgb({},{},{})", mix(255, 5, -t), mix(255, 113, -t),
                     mix(255, 176, -t));
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

}  // namespace

Matrix zscore_rows(const Matrix& m) {
  Matrix z(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double mean = m.row(r).mean();
    const double sd = std::sqrt((m.row(r).array() - mean).square().mean());
    if (sd <= 1e-12 || m.cols() == 0) {
      z.row(r).setZero();
    } else {
      z.row(r) = (m.row(r).array() - mean) / sd;
    }
  }
  return z;
}

std::string heatmap_svg(const Heatmap& h) {
  const int rows = static_cast<int>(h.values.rows());
  const int cols = static_cast<int>(h.values.cols());
  const int cell_w = 70, cell_h = 22, left = 190, top = 50;
  const int w = left + cols * cell_w + 20;
  const int ht = top + rows * cell_h + 20;
  const Matrix z = zscore_rows(h.values);
  std::string s = header(w, ht);
  s += text(w / 2.0, 20, h.title, "middle", 13);
  for (int c = 0; c < cols; ++c) {
    s += text(left + c * cell_w + cell_w / 2.0, top - 8,
              c < static_cast<int>(h.col_labels.size()) ? h.col_labels[c] : "",
              "middle");
  }
  for (int r = 0; r < rows; ++r) {
    const double y = top + r * cell_h;
    s += text(left - 6, y + cell_h * 0.7,
              r < static_cast<int>(h.row_labels.size()) ? h.row_labels[r] : "",
              "end");
    for (int c = 0; c < cols; ++c) {
      const double x = left + c * cell_w;
      s += fmt::format(
          "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{}\" height=\"{}\" "
          "fill=\"{}\" stroke=\"#ccc\"/>\n",
          x, y, cell_w, cell_h, diverging(z(r, c)));
      s += text(x + cell_w / 2.0, y + cell_h * 0.7,
                fmt::format("{:.2f}", h.values(r, c)), "middle", 10);
    }
  }
  return s + "</svg>\n";
}

std::string shap_bar_svg(const std::vector<attribution::ShapSummaryRow>& rows,
                         const std::string& title) {
  const int bar_h = 20, left = 190, top = 40, width = 360;
  const int h = top + static_cast<int>(rows.size()) * bar_h + 40;
  std::string s = header(left + width + 80, h);
  s += text((left + width + 80) / 2.0, 20, title, "middle", 13);
  double max_v = 0.0;
  for (const auto& r : rows) max_v = std::max(max_v, r.mean_abs);
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const double y = top + i * bar_h;
    const double len = max_v > 0 ? width * r.mean_abs / max_v : 0.0;
    s += text(left - 6, y + bar_h * 0.7, r.feature, "end");
    s += fmt::format(
        "<rect x=\"{}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{}\" "
        "fill=\"{}\"/>\n",
        left, y + 2, len, bar_h - 4, r.sign >= 0 ? "#ca0020" : "#0571b0");
    s += text(left + len + 4, y + bar_h * 0.7,
              fmt::format("{:.3g} ({})", r.mean_abs, r.sign >= 0 ? "+" : "-"));
  }
  s += text(left + width / 2.0, h - 10, "mean |SHAP|", "middle");
  return s + "</svg>\n";
}

std::string box_plot_svg(const std::vector<BoxGroup>& groups,
                         const std::string& title, const std::string& y_label) {
  const int box_w = 60, left = 70, top = 40, plot_h = 300;
  const int w = left + static_cast<int>(groups.size()) * (box_w + 30) + 30;
  const int h = top + plot_h + 60;
  double lo = 0.0, hi = 0.0;
  for (const auto& g : groups) {
    for (double v : g.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi - lo < 1e-9) {
    lo -= 1.0;
    hi += 1.0;
  }
  auto ypos = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };
  std::string s = header(w, h);
  s += text(w / 2.0, 20, title, "middle", 13);
  s += fmt::format(
      "<line x1=\"{}\" y1=\"{:.1f}\" x2=\"{}\" y2=\"{:.1f}\" stroke=\"#999\" "
      "stroke-dasharray=\"4 3\"/>\n",
      left - 10, ypos(0.0), w - 10, ypos(0.0));
  s += fmt::format(
      "<text x=\"14\" y=\"{:.1f}\" transform=\"rotate(-90 14 {:.1f})\" "
      "text-anchor=\"middle\">{}</text>\n",
      top + plot_h / 2.0, top + plot_h / 2.0, escape(y_label));
  for (double v : {lo, 0.0, hi}) {
    s += text(left - 14, ypos(v) + 4, fmt::format("{:.2f}", v), "end", 10);
  }
  for (size_t i = 0; i < groups.size(); ++i) {
    const auto& g = groups[i];
    const double x = left + i * (box_w + 30);
    s += text(x + box_w / 2.0, top + plot_h + 18, g.label, "middle");
    s += text(x + box_w / 2.0, top + plot_h + 32,
              fmt::format("n={}", g.values.size()), "middle", 10);
    if (g.values.empty()) continue;
    const double q1 = quantile(g.values, 0.25), q2 = quantile(g.values, 0.5),
                 q3 = quantile(g.values, 0.75);
    const double iqr = q3 - q1;
    double wlo = q1, whi = q3;
    for (double v : g.values) {
      if (v >= q1 - 1.5 * iqr) wlo = std::min(wlo, v);
      if (v <= q3 + 1.5 * iqr) whi = std::max(whi, v);
    }
    const double cx = x + box_w / 2.0;
    s += fmt::format(
        "<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" "
        "stroke=\"black\"/>\n",
        cx, ypos(whi), cx, ypos(wlo));
    s += fmt::format(
        "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{}\" height=\"{:.1f}\" "
        "fill=\"#9ecae1\" stroke=\"black\"/>\n",
        x, ypos(q3), box_w, std::max(ypos(q1) - ypos(q3), 0.5));
    s += fmt::format(
        "<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" "
        "stroke=\"black\" stroke-width=\"2\"/>\n",
        x, ypos(q2), x + box_w, ypos(q2));
    for (double v : g.values) {
      if (v < wlo || v > whi) {
        s += fmt::format(
            "<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"2.5\" fill=\"none\" "
            "stroke=\"black\"/>\n",
            cx, ypos(v));
      }
    }
  }
  return s + "</svg>\n";
}

std::string gate_profile_svg(
    const std::vector<std::vector<case_study::GateBin>>& profile,
    const std::vector<std::string>& branch_names, const std::string& title) {
  const int panel_w = 240, panel_h = 160, left = 50, top = 40, gap = 30;
  const int n = static_cast<int>(profile.size());
  const int w = left + n * (panel_w + gap) + 10;
  const int h = top + panel_h + 50;
  double extent = 1e-9;
  for (const auto& p : profile) {
    for (const auto& b : p) extent = std::max(extent, std::abs(b.net_rate));
  }
  std::string s = header(w, h);
  s += text(w / 2.0, 20, title, "middle", 13);
  for (int i = 0; i < n; ++i) {
    const double x0 = left + i * (panel_w + gap);
    const double mid = top + panel_h / 2.0;
    s += fmt::format(
        "<rect x=\"{:.1f}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" "
        "stroke=\"#999\"/>\n",
        x0, top, panel_w, panel_h);
    s += fmt::format(
        "<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" "
        "stroke=\"#999\"/>\n",
        x0, mid, x0 + panel_w, mid);
    const auto& bins = profile[i];
    const double bw = bins.empty() ? 0.0 : double(panel_w) / bins.size();
    for (size_t b = 0; b < bins.size(); ++b) {
      const double len = (panel_h / 2.0 - 4) * bins[b].net_rate / extent;
      const double y = len >= 0 ? mid - len : mid;
      s += fmt::format(
          "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" "
          "fill=\"{}\"/>\n",
          x0 + b * bw + 1, y, std::max(bw - 2, 0.5), std::abs(len),
          len >= 0 ? "#1a9641" : "#d7191c");
    }
    s += text(x0 + panel_w / 2.0, top + panel_h + 16,
              "gate " + (i < static_cast<int>(branch_names.size())
                             ? branch_names[i]
                             : std::to_string(i)),
              "middle");
  }
  s += text(left - 8, top + 10, fmt::format("{:+.2f}", extent), "end", 10);
  s += text(left - 8, top + panel_h, fmt::format("{:+.2f}", -extent), "end", 10);
  return s + "</svg>\n";
}

void write_svg(const std::filesystem::path& path, const std::string& svg) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << svg;
}

}  // namespace tsfuse::plots

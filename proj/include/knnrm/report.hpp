#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "knnrm/harness.hpp"
#include "knnrm/theory.hpp"

namespace knnrm::report {

/// Round-trip formatting: 17 significant digits.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Display formatting with `digits` significant figures.
inline std::string fmt_sig(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline void write_ledger_csv(std::ostream& os, const theory::ConstantsLedger& ledger) {
  os << "name,value\n";
  for (const auto& [name, value] : ledger.entries()) os << name << ',' << fmt(value) << '\n';
}

inline void write_bound_csv(std::ostream& os, const theory::BoundCurve& curve) {
  os << "n,bound,T0,T1,T2\n";
  for (std::size_t i = 0; i < curve.n_values.size(); ++i) {
    const auto& t = curve.terms[i];
    os << curve.n_values[i] << ',' << fmt(curve.bound_values[i]) << ',' << fmt(t.t0) << ',' << fmt(t.t1) << ','
       << fmt(t.t2) << '\n';
  }
}

inline void write_sweep_csv(std::ostream& os, const ExperimentResult& result) {
  os << "beta,gamma,n,reps,mse,std_error,update_fraction,seed\n";
  for (const auto& c : result.cells) {
    os << fmt(c.beta) << ',' << fmt(c.gamma) << ',' << c.n << ',' << c.reps << ',' << fmt(c.mse) << ','
       << fmt(c.std_error) << ',' << fmt(c.update_fraction) << ',' << result.seed << '\n';
  }
}

inline void write_trajectory_csv(std::ostream& os, std::span<const double> trajectory) {
  os << "step,theta\n";
  for (std::size_t i = 0; i < trajectory.size(); ++i) os << i << ',' << fmt(trajectory[i]) << '\n';
}

struct PrecisionRow {
  std::size_t d;
  double eta_eps;
  std::size_t n;
  std::optional<double> value;
};

inline void write_precision_csv(std::ostream& os, std::span<const PrecisionRow> rows) {
  os << "d,eta_eps,n,precision,precision_2sf\n";
  for (const auto& r : rows) {
    os << r.d << ',' << fmt(r.eta_eps) << ',' << r.n << ',';
    if (r.value) {
      os << fmt(*r.value) << ',' << fmt_sig(*r.value, 2) << '\n';
    } else {
      os << "none,none\n";
    }
  }
}

inline std::string xml_escape(const std::string& s) {
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

/// Standalone SVG heatmap of mse over the (beta, gamma) grid: gamma on the
/// x axis, beta on the y axis, one rectangle per cell, linear white-to-red
/// scale between the smallest and largest mse.
inline void write_heatmap_svg(std::ostream& os, const ExperimentResult& result, const std::string& title,
                              int width = 800, int height = 600) {
  std::vector<double> betas, gammas;
  for (const auto& c : result.cells) {
    betas.push_back(c.beta);
    gammas.push_back(c.gamma);
  }
  auto uniq = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(betas);
  uniq(gammas);
  double lo = 0.0, hi = 1.0;
  if (!result.cells.empty()) {
    auto [mn, mx] = std::minmax_element(result.cells.begin(), result.cells.end(),
                                        [](const CellResult& a, const CellResult& b) { return a.mse < b.mse; });
    lo = mn->mse;
    hi = mx->mse;
  }
  const double span = hi > lo ? hi - lo : 1.0;

  const int left = 90, right = 130, top = 50, bottom = 70;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  const double cw = gammas.empty() ? 0.0 : plot_w / static_cast<double>(gammas.size());
  const double ch = betas.empty() ? 0.0 : plot_h / static_cast<double>(betas.size());
  auto index_of = [](const std::vector<double>& v, double x) {
    return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), x) - v.begin());
  };
  auto color = [&](double mse) {
    const double t = std::clamp((mse - lo) / span, 0.0, 1.0);
    const int g = static_cast<int>(std::lround(255.0 * (1.0 - t)));
    char buf[16];
    std::snprintf(buf, sizeof buf, "#ff%02x%02x", g, g);
    return std::string(buf);
  };

  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"18\">"
     << xml_escape(title) << "</text>\n";
  for (const auto& c : result.cells) {
    const double px = left + cw * static_cast<double>(index_of(gammas, c.gamma));
    const double py = top + plot_h - ch * static_cast<double>(index_of(betas, c.beta) + 1);
    os << "<rect x=\"" << fmt_sig(px, 6) << "\" y=\"" << fmt_sig(py, 6) << "\" width=\"" << fmt_sig(cw, 6)
       << "\" height=\"" << fmt_sig(ch, 6) << "\" fill=\"" << color(c.mse) << "\" stroke=\"#888\" stroke-width=\"0.5\">"
       << "<title>beta=" << fmt_sig(c.beta, 3) << " gamma=" << fmt_sig(c.gamma, 3) << " mse=" << fmt_sig(c.mse, 4)
       << "</title></rect>\n";
  }
  for (std::size_t j = 0; j < gammas.size(); ++j) {
    os << "<text x=\"" << fmt_sig(left + cw * (static_cast<double>(j) + 0.5), 6) << "\" y=\"" << top + plot_h + 18
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_sig(gammas[j], 2)
       << "</text>\n";
  }
  for (std::size_t i = 0; i < betas.size(); ++i) {
    os << "<text x=\"" << left - 8 << "\" y=\"" << fmt_sig(top + plot_h - ch * (static_cast<double>(i) + 0.5) + 4, 6)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_sig(betas[i], 2)
       << "</text>\n";
  }
  os << "<text x=\"" << fmt_sig(left + plot_w / 2, 6) << "\" y=\"" << height - 20
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">gamma</text>\n"
     << "<text x=\"24\" y=\"" << fmt_sig(top + plot_h / 2, 6) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
     << "font-size=\"14\" transform=\"rotate(-90 24 " << fmt_sig(top + plot_h / 2, 6) << ")\">beta</text>\n";
  // colour bar
  const double bx = width - right + 30;
  for (int s = 0; s < 20; ++s) {
    const double t = static_cast<double>(s) / 19.0;
    os << "<rect x=\"" << fmt_sig(bx, 6) << "\" y=\"" << fmt_sig(top + plot_h * (1.0 - (s + 1) / 20.0), 6)
       << "\" width=\"20\" height=\"" << fmt_sig(plot_h / 20.0 + 0.5, 6) << "\" fill=\"" << color(lo + t * span)
       << "\"/>\n";
  }
  os << "<text x=\"" << fmt_sig(bx + 26, 6) << "\" y=\"" << top + 10
     << "\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_sig(hi, 3) << "</text>\n"
     << "<text x=\"" << fmt_sig(bx + 26, 6) << "\" y=\"" << fmt_sig(top + plot_h, 6)
     << "\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_sig(lo, 3) << "</text>\n"
     << "<text x=\"" << fmt_sig(bx, 6) << "\" y=\"" << top - 8
     << "\" font-family=\"sans-serif\" font-size=\"12\">mse</text>\n"
     << "</svg>\n";
}

}  // namespace knnrm::report

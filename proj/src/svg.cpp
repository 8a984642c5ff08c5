#include "wormsim/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace wormsim::svg {

Document::Document(double width, double height) : width_(width), height_(height) {}

namespace {

std::string render_attrs(const Attributes& attrs) {
  std::string out;
  for (const auto& [k, v] : attrs) out += " " + k + "=\"" + escape(v) + "\"";
  return out;
}

}  // namespace

void Document::element(const std::string& tag, const Attributes& attrs) {
  body_ += "<" + tag + render_attrs(attrs) + "/>\n";
}

void Document::text(double x, double y, const std::string& content, const Attributes& extra) {
  Attributes attrs{{"x", num(x)}, {"y", num(y)}};
  attrs.insert(attrs.end(), extra.begin(), extra.end());
  body_ += "<text" + render_attrs(attrs) + ">" + escape(content) + "</text>\n";
}

void Document::open_group(const Attributes& attrs) { body_ += "<g" + render_attrs(attrs) + ">\n"; }

void Document::close_group() { body_ += "</g>\n"; }

void Document::comment(const std::string& content) {
  std::string safe = content;
  for (std::size_t p = safe.find("--"); p != std::string::npos; p = safe.find("--"))
    safe.replace(p, 2, "- ");
  body_ += "<!-- " + safe + " -->\n";
}

std::string Document::str() const {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_) + "\" height=\"" +
         num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) +
         "\" font-family=\"sans-serif\" font-size=\"11\">\n"
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
         body_ + "</svg>\n";
}

Scale::Scale(double lo, double hi, double out_lo, double out_hi)
    : lo_(lo), hi_(hi), out_lo_(out_lo), out_hi_(out_hi) {}

double Scale::operator()(double v) const {
  if (!(hi_ > lo_)) return 0.5 * (out_lo_ + out_hi_);
  return out_lo_ + (v - lo_) / (hi_ - lo_) * (out_hi_ - out_lo_);
}

std::vector<double> ticks(double lo, double hi, int approx_count) {
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) return {lo};
  const double raw = (hi - lo) / std::max(approx_count, 1);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step)
    out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

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

std::string heat_color(double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
  const int g = static_cast<int>(std::lround(230.0 * (1.0 - t)));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", 230 + static_cast<int>(std::lround(25 * t)), g, g);
  return buf;
}

void axes(Document& doc, const Frame& f, const Scale& x, const Scale& y, const std::string& x_label,
          const std::string& y_label, bool x_ticks, bool y_ticks) {
  doc.element("rect", {{"x", num(f.left)}, {"y", num(f.top)}, {"width", num(f.width)},
                       {"height", num(f.height)}, {"fill", "none"}, {"stroke", "#333"}});
  const double bottom = f.top + f.height;
  if (x_ticks)
    for (double t : ticks(x.lo(), x.hi())) {
      const double px = x(t);
      doc.element("line", {{"x1", num(px)}, {"y1", num(bottom)}, {"x2", num(px)},
                           {"y2", num(bottom + 4)}, {"stroke", "#333"}});
      doc.text(px, bottom + 15, num(t), {{"text-anchor", "middle"}});
    }
  if (y_ticks)
    for (double t : ticks(y.lo(), y.hi())) {
      const double py = y(t);
      doc.element("line", {{"x1", num(f.left - 4)}, {"y1", num(py)}, {"x2", num(f.left)},
                           {"y2", num(py)}, {"stroke", "#333"}});
      doc.text(f.left - 6, py + 4, num(t), {{"text-anchor", "end"}});
    }
  if (!x_label.empty())
    doc.text(f.left + f.width / 2, bottom + 30, x_label, {{"text-anchor", "middle"}});
  if (!y_label.empty()) {
    const double cx = f.left - 48;
    const double cy = f.top + f.height / 2;
    doc.text(cx, cy, y_label,
             {{"text-anchor", "middle"}, {"transform", "rotate(-90 " + num(cx) + " " + num(cy) + ")"}});
  }
}

}  // namespace wormsim::svg

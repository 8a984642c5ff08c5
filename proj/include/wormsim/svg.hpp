#ifndef WORMSIM_SVG_HPP_
#define WORMSIM_SVG_HPP_

#include <string>
#include <utility>
#include <vector>

namespace wormsim::svg {

using Attributes = std::vector<std::pair<std::string, std::string>>;

/// Minimal SVG builder. Numbers that come from data are passed in as the
/// exact strings written to the companion CSV, so the two files agree.
class Document {
 public:
  Document(double width, double height);

  void element(const std::string& tag, const Attributes& attrs);
  void text(double x, double y, const std::string& content, const Attributes& extra = {});
  void open_group(const Attributes& attrs);
  void close_group();
  void comment(const std::string& content);

  std::string str() const;

 private:
  double width_;
  double height_;
  std::string body_;
};

/// Maps [lo, hi] onto [out_lo, out_hi]; a flat domain maps to the midpoint.
class Scale {
 public:
  Scale(double lo, double hi, double out_lo, double out_hi);
  double operator()(double v) const;
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  double lo_, hi_, out_lo_, out_hi_;
};

/// Round-number ticks covering [lo, hi].
std::vector<double> ticks(double lo, double hi, int approx_count = 5);

std::string num(double v);  // compact coordinate formatting
std::string escape(const std::string& s);

/// White-to-red ramp for t in [0, 1].
std::string heat_color(double t);

struct Frame {
  double left, top, width, height;
};

/// Axes box with ticks and labels.
void axes(Document& doc, const Frame& frame, const Scale& x, const Scale& y,
          const std::string& x_label, const std::string& y_label, bool x_ticks = true,
          bool y_ticks = true);

}  // namespace wormsim::svg

#endif  // WORMSIM_SVG_HPP_

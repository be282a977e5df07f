#pragma once

#include <array>

namespace klvote {

/// Axis-aligned box in boundary coordinates (x1, y1, x2, y2), pixels.
///
/// Edges are continuous: width is x2 - x1 with no +1 pixel correction.
/// A valid box has x1 <= x2 and y1 <= y2; zero-area boxes are valid.
/// Decoded predictions may come out crossed (x1 > x2 or y1 > y2); such
/// boxes are representable so they can be inspected, see crossed().
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  /// Area of a valid box. Crossed boxes report 0.
  double area() const noexcept;

  bool finite() const noexcept;
  bool crossed() const noexcept { return x1 > x2 || y1 > y2; }
  bool valid() const noexcept { return finite() && !crossed(); }

  double operator[](int i) const noexcept { return std::array{x1, y1, x2, y2}[i]; }
  std::array<double, 4> coords() const noexcept { return {x1, y1, x2, y2}; }
  static Box from_coords(const std::array<double, 4>& c) noexcept { return {c[0], c[1], c[2], c[3]}; }

  friend bool operator==(const Box&, const Box&) = default;
};

/// Builds a box and throws InvalidInput unless it satisfies the Box invariants.
Box make_box(double x1, double y1, double x2, double y2);

/// Converts (x, y, w, h) with (x, y) the top-left corner.
Box box_from_xywh(double x, double y, double w, double h);

/// Reorders crossed coordinates so that x1 <= x2 and y1 <= y2.
Box clamp_to_valid(const Box& b) noexcept;

/// Intersection over union. Returns 0 when the union has zero area.
double iou(const Box& a, const Box& b) noexcept;

/// Reference box for offset regression. Width and height are strictly positive.
class Anchor {
 public:
  /// Throws InvalidInput on non-finite coordinates or non-positive extent.
  Anchor(double x1, double y1, double x2, double y2);
  explicit Anchor(const Box& b) : Anchor(b.x1, b.y1, b.x2, b.y2) {}

  const Box& box() const noexcept { return box_; }
  double width() const noexcept { return box_.width(); }
  double height() const noexcept { return box_.height(); }

 private:
  Box box_;
};

/// Anchor-normalized boundary offsets.
struct OffsetTarget {
  double tx1 = 0.0;
  double ty1 = 0.0;
  double tx2 = 0.0;
  double ty2 = 0.0;

  friend bool operator==(const OffsetTarget&, const OffsetTarget&) = default;
};

/// tx1 = (x1 - x1a) / wa, ty1 = (y1 - y1a) / ha, and likewise for x2, y2.
/// Throws InvalidInput if the box has a non-finite coordinate.
OffsetTarget encode(const Box& box, const Anchor& anchor);

/// Inverse of encode. Does not clamp; the result may be crossed.
Box decode(const OffsetTarget& t, const Anchor& anchor);

}  // namespace klvote

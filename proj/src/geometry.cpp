#include "klvote/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "klvote/error.hpp"

namespace klvote {

double Box::area() const noexcept {
  if (crossed()) return 0.0;
  return width() * height();
}

bool Box::finite() const noexcept {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2);
}

Box make_box(double x1, double y1, double x2, double y2) {
  Box b{x1, y1, x2, y2};
  if (!b.finite()) throw InvalidInput("box has a non-finite coordinate");
  if (b.crossed()) {
    std::ostringstream os;
    os << "box (" << x1 << ", " << y1 << ", " << x2 << ", " << y2 << ") has x1 > x2 or y1 > y2";
    throw InvalidInput(os.str());
  }
  return b;
}

Box box_from_xywh(double x, double y, double w, double h) {
  if (!(w >= 0.0) || !(h >= 0.0)) throw InvalidInput("xywh box has negative or NaN extent");
  return make_box(x, y, x + w, y + h);
}

Box clamp_to_valid(const Box& b) noexcept {
  return {std::min(b.x1, b.x2), std::min(b.y1, b.y2), std::max(b.x1, b.x2), std::max(b.y1, b.y2)};
}

double iou(const Box& a, const Box& b) noexcept {
  if (a.crossed() || b.crossed()) return 0.0;
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

Anchor::Anchor(double x1, double y1, double x2, double y2) : box_{x1, y1, x2, y2} {
  if (!box_.finite()) throw InvalidInput("anchor has a non-finite coordinate");
  if (!(box_.width() > 0.0) || !(box_.height() > 0.0))
    throw InvalidInput("anchor width and height must be strictly positive");
}

OffsetTarget encode(const Box& box, const Anchor& anchor) {
  if (!box.finite()) throw InvalidInput("cannot encode a box with non-finite coordinates");
  const Box& a = anchor.box();
  const double wa = anchor.width();
  const double ha = anchor.height();
  return {(box.x1 - a.x1) / wa, (box.y1 - a.y1) / ha, (box.x2 - a.x2) / wa, (box.y2 - a.y2) / ha};
}

Box decode(const OffsetTarget& t, const Anchor& anchor) {
  const Box& a = anchor.box();
  const double wa = anchor.width();
  const double ha = anchor.height();
  return {a.x1 + t.tx1 * wa, a.y1 + t.ty1 * ha, a.x2 + t.tx2 * wa, a.y2 + t.ty2 * ha};
}

}  // namespace klvote

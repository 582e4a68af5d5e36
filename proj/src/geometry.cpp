#include "betop/geometry.hpp"

#include <algorithm>
#include <numbers>

namespace betop {

double wrap_angle(double a) {
    double r = std::remainder(a, 2.0 * std::numbers::pi);
    if (r <= -std::numbers::pi) {
        r += 2.0 * std::numbers::pi;
    }
    return r;
}

Vec2 rotate(const Vec2& v, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

Pose2::Pose2(double x_, double y_, double heading_) : x(x_), y(y_), heading(wrap_angle(heading_)) {}

Vec2 to_local_point(const Vec2& p, const Pose2& frame) {
    return rotate(p - frame.position(), -frame.heading);
}

Pose2 inverse_frame(const Pose2& frame) {
    const Vec2 b = rotate(frame.position(), -frame.heading);
    return Pose2{-b.x, -b.y, -frame.heading};
}

namespace {

int orientation_sign(const Vec2& p, const Vec2& q, const Vec2& r) {
    const double v = (q - p).cross(r - p);
    if (v > 0.0) return 1;
    if (v < 0.0) return -1;
    return 0;
}

// q is known collinear with [p, r]; true iff q lies inside the bounding box.
bool on_segment(const Vec2& p, const Vec2& q, const Vec2& r) {
    return std::min(p.x, r.x) <= q.x && q.x <= std::max(p.x, r.x) &&
           std::min(p.y, r.y) <= q.y && q.y <= std::max(p.y, r.y);
}

}  // namespace

bool segments_intersect(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1) {
    const int d1 = orientation_sign(b0, b1, a0);
    const int d2 = orientation_sign(b0, b1, a1);
    const int d3 = orientation_sign(a0, a1, b0);
    const int d4 = orientation_sign(a0, a1, b1);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
        ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
        return true;
    }
    if (d1 == 0 && on_segment(b0, a0, b1)) return true;
    if (d2 == 0 && on_segment(b0, a1, b1)) return true;
    if (d3 == 0 && on_segment(a0, b0, a1)) return true;
    if (d4 == 0 && on_segment(a0, b1, a1)) return true;
    return false;
}

}  // namespace betop

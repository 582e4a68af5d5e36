#pragma once

#include <cmath>

namespace betop {

struct Vec2 {
    double x{0.0};
    double y{0.0};

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
};

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Rotates v counter-clockwise by angle radians.
Vec2 rotate(const Vec2& v, double angle);

// 2D pose. The constructor normalizes heading into (-pi, pi].
struct Pose2 {
    double x{0.0};
    double y{0.0};
    double heading{0.0};

    Pose2() = default;
    Pose2(double x_, double y_, double heading_);

    Vec2 position() const { return {x, y}; }
};

/// Maps a point into the frame's local coordinates: rotate(p - b, -heading).
Vec2 to_local_point(const Vec2& p, const Pose2& frame);

/// Returns the pose G with to_local_point(to_local_point(p, F), G) == p.
Pose2 inverse_frame(const Pose2& frame);

/// Closed-segment intersection via orientation predicates. Endpoint touches
/// count as intersections; zero-length segments behave as points.
bool segments_intersect(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1);

}  // namespace betop

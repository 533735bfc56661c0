#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "layerkit/errors.hpp"

namespace layerkit {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
    friend Vec2 operator*(Vec2 v, double s) { return {s * v.x, s * v.y}; }
    friend bool operator==(const Vec2&, const Vec2&) = default;

    double norm() const { return std::hypot(x, y); }
};

/// Cubic Bezier path of a text instance. When tau == 0 the control
/// points are carried along but ignored by layout and rendering.
struct Bending {
    std::array<Vec2, 4> p{};
    int tau = 0;

    friend bool operator==(const Bending&, const Bending&) = default;
};

/// Cubic Bernstein evaluation. Exact at the endpoints: B(0) = p0, B(1) = p3.
inline Vec2 bezier_point(const Bending& b, double t) {
    const double u = 1.0 - t;
    const double w0 = u * u * u;
    const double w1 = 3.0 * u * u * t;
    const double w2 = 3.0 * u * t * t;
    const double w3 = t * t * t;
    return w0 * b.p[0] + w1 * b.p[1] + w2 * b.p[2] + w3 * b.p[3];
}

inline Vec2 bezier_derivative(const Bending& b, double t) {
    const double u = 1.0 - t;
    const Vec2 d0 = b.p[1] - b.p[0];
    const Vec2 d1 = b.p[2] - b.p[1];
    const Vec2 d2 = b.p[3] - b.p[2];
    return 3.0 * u * u * d0 + 6.0 * u * t * d1 + 3.0 * t * t * d2;
}

/// Cumulative chord-length table over 256 uniform parameter segments.
/// Inverts arc length with linear interpolation inside a segment and
/// extrapolates along the endpoint tangents outside [0, length].
class ArcTable {
public:
    static constexpr int kSegments = 256;

    explicit ArcTable(const Bending& b) : bend_(b), cumulative_(kSegments + 1, 0.0) {
        Vec2 prev = bezier_point(b, 0.0);
        for (int i = 1; i <= kSegments; ++i) {
            const double t = static_cast<double>(i) / kSegments;
            const Vec2 cur = bezier_point(b, t);
            cumulative_[static_cast<std::size_t>(i)] =
                cumulative_[static_cast<std::size_t>(i - 1)] + (cur - prev).norm();
            prev = cur;
        }
        if (total_length() == 0.0) {
            throw DegenerateCurve("bezier path has zero total length");
        }
    }

    double total_length() const { return cumulative_.back(); }

    struct Sample {
        Vec2 position;
        double angle = 0.0; // tangent angle, atan2(dy, dx) in the y-down frame
    };

    /// Position and tangent at arc length s (canvas units, may lie
    /// outside [0, length]).
    Sample at_length(double s) const {
        const double len = total_length();
        if (s < 0.0) {
            Sample e = at_parameter(0.0);
            const Vec2 dir = unit_tangent(0.0);
            e.position = e.position + s * dir;
            return e;
        }
        if (s > len) {
            Sample e = at_parameter(1.0);
            const Vec2 dir = unit_tangent(1.0);
            e.position = e.position + (s - len) * dir;
            return e;
        }
        // Binary search for the segment containing s.
        std::size_t lo = 0, hi = kSegments;
        while (lo + 1 < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (cumulative_[mid] <= s) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        const double seg_len = cumulative_[lo + 1] - cumulative_[lo];
        const double frac = seg_len > 0.0 ? (s - cumulative_[lo]) / seg_len : 0.0;
        const double t = (static_cast<double>(lo) + frac) / kSegments;
        return at_parameter(t);
    }

    Sample at_parameter(double t) const {
        const Vec2 d = tangent_at(t);
        return {bezier_point(bend_, t), std::atan2(d.y, d.x)};
    }

private:
    Vec2 tangent_at(double t) const {
        Vec2 d = bezier_derivative(bend_, t);
        if (d.x == 0.0 && d.y == 0.0) {
            // Cusp (coincident control points); probe slightly inward.
            const double eps = 1e-6;
            d = bezier_derivative(bend_, t < 0.5 ? t + eps : t - eps);
        }
        return d;
    }

    Vec2 unit_tangent(double t) const {
        const Vec2 d = tangent_at(t);
        const double n = d.norm();
        return n > 0.0 ? Vec2{d.x / n, d.y / n} : Vec2{1.0, 0.0};
    }

    Bending bend_;
    std::vector<double> cumulative_;
};

/// Point and tangent angle at normalized arc length s in [0, 1].
inline ArcTable::Sample arc_length_param(const Bending& b, double s) {
    const ArcTable table(b);
    if (s < 0.0) s = 0.0;
    if (s > 1.0) s = 1.0;
    return table.at_length(s * table.total_length());
}

/// Rotation about a pivot. Positive angle turns +x toward +y, matching
/// the y-down pixel frame used everywhere in this library.
inline Vec2 rotate_about(Vec2 p, Vec2 pivot, double angle) {
    if (angle == 0.0) return p;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const Vec2 d = p - pivot;
    return {pivot.x + d.x * c - d.y * s, pivot.y + d.x * s + d.y * c};
}

} // namespace layerkit

#include "snapcube/phantoms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <tuple>

#include "font5x7.hpp"
#include "snapcube/error.hpp"

namespace snapcube {
namespace {

ReflectivityVolume empty_volume(const PhantomFrame& f) {
    validate(f.depth);
    ReflectivityVolume v;
    v.data = Array3(f.nx, f.ny, f.depth.num_planes);
    v.pixel_pitch_um = f.pixel_pitch_um;
    v.depth = f.depth;
    return v;
}

void check_plane(const PhantomFrame& f, std::size_t plane) {
    if (plane >= f.depth.num_planes) throw ValidationError("plane-index", "plane index outside the depth grid");
}

void put_plane(ReflectivityVolume& v, const Array2& img, std::size_t plane) {
    auto s = v.data.slice(plane);
    for (std::size_t n = 0; n < img.size(); ++n) s[n] = std::max(s[n], img[n]);
}

}  // namespace

ReflectivityVolume bar_target(const PhantomFrame& frame, std::size_t period_px, BarOrientation orientation,
                              std::size_t plane) {
    if (period_px < 2) throw ValidationError("bar-period", "bar period must be >= 2 px");
    check_plane(frame, plane);
    ReflectivityVolume v = empty_volume(frame);
    const std::size_t half = period_px / 2;
    for (std::size_t i = 0; i < frame.nx; ++i) {
        for (std::size_t j = 0; j < frame.ny; ++j) {
            const std::size_t along = orientation == BarOrientation::vertical ? j : i;
            v.data(i, j, plane) = (along % period_px) < half ? 1.0 : 0.0;
        }
    }
    return v;
}

double usaf_bar_width_um(int group, int element) {
    if (element < 1 || element > 6) throw ValidationError("usaf-element", "USAF element must be in 1..6");
    const double lp_per_mm = std::pow(2.0, group + (element - 1) / 6.0);
    return 1000.0 / (2.0 * lp_per_mm);
}

ReflectivityVolume bar_groups(const PhantomFrame& frame, const std::vector<BarGroup>& groups, std::size_t plane) {
    check_plane(frame, plane);
    ReflectivityVolume v = empty_volume(frame);
    for (const auto& g : groups) {
        if (g.period_px < 2) throw ValidationError("bar-period", "bar period must be >= 2 px");
        const std::size_t w = g.bar_width();
        const bool vertical = g.orientation == BarOrientation::vertical;
        const std::size_t rows = vertical ? g.length : g.across();
        const std::size_t cols = vertical ? g.across() : g.length;
        if (g.x0 + rows > frame.nx || g.y0 + cols > frame.ny) {
            throw ValidationError("bar-group-fit", "bar group extends past the frame");
        }
        for (std::size_t a = 0; a < rows; ++a) {
            for (std::size_t b = 0; b < cols; ++b) {
                const std::size_t across = vertical ? b : a;
                if ((across / w) % 2 == 0) v.data(g.x0 + a, g.y0 + b, plane) = 1.0;
            }
        }
    }
    return v;
}

std::vector<BarGroup> layout_bar_groups(const PhantomFrame& frame, const std::vector<std::size_t>& periods_px,
                                        BarOrientation orientation, std::size_t margin_px) {
    std::vector<BarGroup> groups;
    const bool vertical = orientation == BarOrientation::vertical;
    const std::size_t along_extent = vertical ? frame.nx : frame.ny;
    const std::size_t across_extent = vertical ? frame.ny : frame.nx;
    if (along_extent <= 2 * margin_px) throw ValidationError("bar-group-fit", "frame too small for bar groups");
    std::size_t cursor = margin_px;
    for (std::size_t p : periods_px) {
        if (p < 2 || p % 2) throw ValidationError("bar-period", "group periods must be even and >= 2 px");
        BarGroup g;
        g.period_px = p;
        g.orientation = orientation;
        g.length = along_extent - 2 * margin_px;
        if (cursor + g.across() + margin_px > across_extent) {
            throw ValidationError("bar-group-fit", "bar groups do not fit in the frame");
        }
        g.x0 = vertical ? margin_px : cursor;
        g.y0 = vertical ? cursor : margin_px;
        cursor += g.across() + margin_px;
        groups.push_back(g);
    }
    return groups;
}

ReflectivityVolume mirror(const PhantomFrame& frame, std::size_t plane, double value) {
    check_plane(frame, plane);
    ReflectivityVolume v = empty_volume(frame);
    for (double& s : v.data.slice(plane)) s = value;
    return v;
}

Array2 glyph_raster(std::size_t nx, std::size_t ny, const std::string& text, const GlyphPose& pose) {
    if (pose.scale < 1) throw ValidationError("glyph-scale", "glyph scale must be >= 1");
    Array2 flat(nx, ny);
    if (text.empty()) return flat;
    const long s = pose.scale;
    const long height = 7 * s;
    const long width = static_cast<long>(text.size()) * 6 * s - s;
    const long top = (static_cast<long>(nx) - height) / 2 + pose.offset_x;
    const long left = (static_cast<long>(ny) - width) / 2 + pose.offset_y;
    for (std::size_t c = 0; c < text.size(); ++c) {
        const auto* g = detail::find_glyph(static_cast<char>(std::toupper(static_cast<unsigned char>(text[c]))));
        if (!g) throw ValidationError("glyph-charset", std::string("no glyph for '") + text[c] + "'");
        for (long r = 0; r < height; ++r) {
            for (long q = 0; q < 5 * s; ++q) {
                if (g->rows[static_cast<std::size_t>(r / s)][static_cast<std::size_t>(q / s)] != '#') continue;
                const long i = top + r, j = left + static_cast<long>(c) * 6 * s + q;
                if (i < 0 || j < 0 || i >= static_cast<long>(nx) || j >= static_cast<long>(ny)) {
                    throw ValidationError("glyph-fit", "glyph string does not fit the field of view");
                }
                flat(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = 1.0;
            }
        }
    }

    double turns = std::fmod(pose.rotation_deg, 360.0);
    if (turns < 0) turns += 360.0;
    if (turns == 0.0) return flat;

    double c, sn;
    if (std::fmod(turns, 90.0) == 0.0) {
        const int q = static_cast<int>(turns / 90.0);
        constexpr int cs[4] = {1, 0, -1, 0};
        constexpr int ss[4] = {0, 1, 0, -1};
        c = cs[q];
        sn = ss[q];
    } else {
        const double a = turns * std::numbers::pi / 180.0;
        c = std::cos(a);
        sn = std::sin(a);
    }
    Array2 out(nx, ny);
    const double cx = (static_cast<double>(nx) - 1.0) / 2.0, cy = (static_cast<double>(ny) - 1.0) / 2.0;
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            // Display coordinates: u to the right, v upward; rotate back by -angle.
            const double u1 = static_cast<double>(j) - cy, v1 = cx - static_cast<double>(i);
            const double u = c * u1 + sn * v1, v = -sn * u1 + c * v1;
            const long si = std::lround(cx - v), sj = std::lround(cy + u);
            if (si >= 0 && sj >= 0 && si < static_cast<long>(nx) && sj < static_cast<long>(ny)) {
                out(i, j) = flat(static_cast<std::size_t>(si), static_cast<std::size_t>(sj));
            }
        }
    }
    return out;
}

ReflectivityVolume glyph_layer(const PhantomFrame& frame, const std::string& text, const GlyphPose& pose,
                               std::size_t plane) {
    check_plane(frame, plane);
    ReflectivityVolume v = empty_volume(frame);
    put_plane(v, glyph_raster(frame.nx, frame.ny, text, pose), plane);
    return v;
}

ReflectivityVolume double_layer_target(const PhantomFrame& frame, const Array2& pattern, std::size_t plane1,
                                       std::size_t plane2, long stagger_px, bool occlusion) {
    check_plane(frame, plane1);
    check_plane(frame, plane2);
    if (!(plane2 > plane1)) throw ValidationError("layer-order", "second layer must lie deeper than the first");
    if (pattern.nx() != frame.nx || pattern.ny() != frame.ny) {
        throw ValidationError("dimension-mismatch", "pattern shape differs from the frame");
    }
    ReflectivityVolume v = empty_volume(frame);
    Array2 lower(frame.nx, frame.ny);
    for (std::size_t i = 0; i < frame.nx; ++i) {
        for (std::size_t j = 0; j < frame.ny; ++j) {
            const long si = static_cast<long>(i) - stagger_px, sj = static_cast<long>(j) - stagger_px;
            if (si < 0 || sj < 0 || si >= static_cast<long>(frame.nx) || sj >= static_cast<long>(frame.ny)) continue;
            lower(i, j) = pattern(static_cast<std::size_t>(si), static_cast<std::size_t>(sj));
        }
    }
    if (occlusion) {
        for (std::size_t n = 0; n < lower.size(); ++n) {
            if (pattern[n] > 0.0) lower[n] = 0.0;
        }
    }
    put_plane(v, pattern, plane1);
    put_plane(v, lower, plane2);
    return v;
}

std::vector<GlyphSample> glyph_dataset(const PhantomFrame& frame, std::size_t count, double validation_fraction,
                                       std::uint64_t seed) {
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
        throw ValidationError("validation-fraction", "validation fraction must be in [0, 1)");
    }
    static constexpr std::string_view kCharset = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
    std::mt19937_64 rng(seed);

    // Pose grid; every fifth pose cell (by index sum) is reserved for validation.
    const long max_off = static_cast<long>(std::min(frame.nx, frame.ny)) / 8;
    auto is_val = [&](const GlyphPose& p) {
        const long cell = (p.offset_x + max_off) / 2 + (p.offset_y + max_off) / 2 +
                          static_cast<long>(p.rotation_deg) / 15;
        return cell % 5 == 0;
    };

    const auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(count)));
    std::vector<GlyphSample> samples;
    samples.reserve(count);
    std::uniform_int_distribution<long> off(-max_off / 2, max_off / 2);
    std::uniform_int_distribution<int> rot(0, 23);
    std::uniform_int_distribution<std::size_t> len(1, 2);
    std::uniform_int_distribution<std::size_t> ch(0, kCharset.size() - 1);
    std::uniform_int_distribution<std::size_t> plane(0, frame.depth.num_planes - 1);

    for (std::size_t n = 0; n < count; ++n) {
        const bool want_val = n >= count - n_val;
        GlyphSample s;
        for (;;) {
            s.pose.offset_x = 2 * off(rng);
            s.pose.offset_y = 2 * off(rng);
            s.pose.rotation_deg = 15.0 * rot(rng);
            s.text.clear();
            const std::size_t l = len(rng);
            for (std::size_t c = 0; c < l; ++c) s.text.push_back(kCharset[ch(rng)]);
            if (is_val(s.pose) != want_val) continue;
            try {
                glyph_raster(frame.nx, frame.ny, s.text, s.pose);
            } catch (const ValidationError&) {
                continue;  // does not fit; redraw
            }
            break;
        }
        s.plane = plane(rng);
        s.split = want_val ? "validation" : "train";
        s.id = (want_val ? "val_" : "train_") + std::to_string(n);
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace snapcube

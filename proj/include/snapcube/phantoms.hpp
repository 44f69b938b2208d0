#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snapcube/types.hpp"

namespace snapcube {

/// Lateral size, pitch and depth sampling shared by generated objects.
struct PhantomFrame {
    std::size_t nx = 64;
    std::size_t ny = 64;
    double pixel_pitch_um = 1.0;
    DepthGrid depth;
};

enum class BarOrientation { vertical, horizontal };  // vertical: bars run along x, vary along y

/// Three-bar group placed on an image: bars of width period/2 separated by
/// gaps of the same width, length `length` pixels.
struct BarGroup {
    std::size_t period_px = 2;
    BarOrientation orientation = BarOrientation::vertical;
    std::size_t x0 = 0;  // top-left corner of the group's bounding box
    std::size_t y0 = 0;
    std::size_t length = 0;
    std::size_t bar_width() const { return period_px / 2; }
    std::size_t across() const { return 5 * bar_width(); }  // extent across the bars
};

/// Infinite binary grating of the given period on one plane.
ReflectivityVolume bar_target(const PhantomFrame& frame, std::size_t period_px, BarOrientation orientation,
                              std::size_t plane);

/// Bar width (µm) of a 1951 USAF element: 1 / (2 * 2^(group + (element - 1) / 6)) mm.
double usaf_bar_width_um(int group, int element);

/// Rasterises three-bar groups on one plane.
ReflectivityVolume bar_groups(const PhantomFrame& frame, const std::vector<BarGroup>& groups, std::size_t plane);

/// Lays out one vertical three-bar group per period, left to right with a
/// fixed margin; returns the placed groups. Throws if they do not fit.
std::vector<BarGroup> layout_bar_groups(const PhantomFrame& frame, const std::vector<std::size_t>& periods_px,
                                        BarOrientation orientation, std::size_t margin_px = 2);

/// Laterally uniform plane of reflectivity `value` (a mirror).
ReflectivityVolume mirror(const PhantomFrame& frame, std::size_t plane, double value = 1.0);

struct GlyphPose {
    long offset_x = 0;  // pixels, relative to the centred glyph string
    long offset_y = 0;
    double rotation_deg = 0.0;  // about the frame centre, counter-clockwise
    int scale = 1;              // font pixels per glyph cell
};

/// Glyph string in the embedded 5x7 font (digits, A-Z, space).
/// Multiples of 90 degrees rotate exactly; other angles use nearest neighbour.
ReflectivityVolume glyph_layer(const PhantomFrame& frame, const std::string& text, const GlyphPose& pose,
                               std::size_t plane);
Array2 glyph_raster(std::size_t nx, std::size_t ny, const std::string& text, const GlyphPose& pose);

/// Two patterned planes; layer 2 is the pattern translated by `stagger_px`
/// along both axes. With `occlusion`, layer 2 is blocked wherever layer 1 reflects.
ReflectivityVolume double_layer_target(const PhantomFrame& frame, const Array2& pattern, std::size_t plane1,
                                       std::size_t plane2, long stagger_px, bool occlusion = true);

/// One randomly posed glyph sample for the learned-reconstruction dataset.
struct GlyphSample {
    std::string id;
    std::string text;
    GlyphPose pose;
    std::size_t plane = 0;
    std::string split;  // "train" or "validation"
};

/// Samples `count` glyph objects with poses on fixed grids (offsets in steps
/// of 2 px, rotations in steps of 15 degrees). Validation samples use poses
/// disjoint from every training pose.
std::vector<GlyphSample> glyph_dataset(const PhantomFrame& frame, std::size_t count, double validation_fraction,
                                       std::uint64_t seed);

}  // namespace snapcube

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "snapcube/array.hpp"
#include "snapcube/types.hpp"

namespace snapcube::io {

// Container format: `<stem>.raw` holds little-endian float64 values in the
// project layout (y fastest, then x, then channel/plane); `<stem>.hdr` is a
// plain-text sidecar of `key = value` lines. Required keys: format, dtype,
// shape, layout. Everything else (units, grid parameters, kind) is free-form
// attributes. Doubles are written with 17 significant digits so a read-back
// reproduces them exactly.

using Attributes = std::map<std::string, std::string>;

struct Header {
    std::string dtype = "float64";
    std::vector<std::size_t> shape;
    std::string layout = "y-fastest";
    Attributes attrs;
};

std::string format_double(double v);
double parse_double(const std::string& s);

void write_array(const std::filesystem::path& stem, const Array2& a, const Attributes& attrs = {});
void write_array(const std::filesystem::path& stem, const Array3& a, const Attributes& attrs = {});
Header read_header(const std::filesystem::path& stem);
Array2 read_array2(const std::filesystem::path& stem, Header* header = nullptr);
Array3 read_array3(const std::filesystem::path& stem, Header* header = nullptr);

void save(const std::filesystem::path& stem, const SpectralCube& cube);
SpectralCube load_spectral_cube(const std::filesystem::path& stem);
void save(const std::filesystem::path& stem, const ReflectivityVolume& volume);
ReflectivityVolume load_reflectivity_volume(const std::filesystem::path& stem);
void save(const std::filesystem::path& stem, const CodedAperture& aperture);
CodedAperture load_coded_aperture(const std::filesystem::path& stem);
/// Writes `<stem>` (image) and, when present, `<stem>_dc_reference`, `<stem>_dc_sample`.
void save(const std::filesystem::path& stem, const Measurement& m);
Measurement load_measurement(const std::filesystem::path& stem);

/// 16-bit binary PGM (P5, maxval 65535, big-endian samples). Values are
/// mapped linearly from [lo, hi] to [0, 65535] with rounding and clipping.
void write_pgm16(const std::filesystem::path& path, const Array2& image, double lo, double hi);
/// Returns raw sample codes (0..maxval).
Array2 read_pgm16(const std::filesystem::path& path);

/// Writes `text` to `path` creating parent directories; throws IoError.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace snapcube::io

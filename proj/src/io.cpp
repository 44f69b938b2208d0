#include "snapcube/io.hpp"

#include <bit>
#include <cmath>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "snapcube/error.hpp"

namespace snapcube::io {
namespace fs = std::filesystem;

namespace {

constexpr const char* kFormatTag = "snapcube-container-1";

fs::path with_suffix(const fs::path& stem, const char* suffix) {
    return fs::path(stem.string() + suffix);
}

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + p.parent_path().string() + ": " + ec.message());
    }
}

void write_payload(const fs::path& path, const double* data, std::size_t n) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            auto bits = std::bit_cast<std::uint64_t>(data[i]);
            char buf[8];
            for (int b = 0; b < 8; ++b) buf[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
            out.write(buf, 8);
        }
    }
    if (!out) throw IoError("write failed for " + path.string());
}

void read_payload(const fs::path& path, double* data, std::size_t n) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> buf(n * sizeof(double));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
        throw IoError("payload " + path.string() + " is shorter than its header shape");
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(buf[i * 8 + b]) << (8 * b);
        data[i] = std::bit_cast<double>(bits);
    }
}

void write_header(const fs::path& stem, const std::vector<std::size_t>& shape, const Attributes& attrs) {
    std::ostringstream os;
    os << "format = " << kFormatTag << '\n';
    os << "dtype = float64\n";
    os << "byte_order = little\n";
    os << "shape =";
    for (auto s : shape) os << ' ' << s;
    os << '\n';
    os << "layout = y-fastest\n";
    for (const auto& [k, v] : attrs) os << k << " = " << v << '\n';
    write_text(with_suffix(stem, ".hdr"), os.str());
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::size_t expect_rank(const Header& h, std::size_t rank, const fs::path& stem) {
    if (h.shape.size() != rank) {
        throw IoError(stem.string() + ": expected rank " + std::to_string(rank) + ", header has " +
                      std::to_string(h.shape.size()));
    }
    std::size_t n = 1;
    for (auto s : h.shape) n *= s;
    return n;
}

const std::string& attr(const Header& h, const std::string& key, const fs::path& stem) {
    auto it = h.attrs.find(key);
    if (it == h.attrs.end()) throw IoError(stem.string() + ": header lacks '" + key + "'");
    return it->second;
}

std::size_t parse_size(const std::string& s) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw IoError("bad integer '" + s + "'");
    return v;
}

Attributes spectral_attrs(const SpectralGrid& g) {
    return {{"center_wavelength_nm", format_double(g.center_wavelength_nm)},
            {"channel_spacing_nm", format_double(g.channel_spacing_nm)},
            {"num_channels", std::to_string(g.num_channels)}};
}

SpectralGrid spectral_from(const Header& h, const fs::path& stem) {
    SpectralGrid g;
    g.center_wavelength_nm = parse_double(attr(h, "center_wavelength_nm", stem));
    g.channel_spacing_nm = parse_double(attr(h, "channel_spacing_nm", stem));
    g.num_channels = parse_size(attr(h, "num_channels", stem));
    return g;
}

Attributes camera_attrs(const CameraModel& c) {
    return {{"full_well_capacity_e", format_double(c.full_well_capacity_e)},
            {"bit_depth", std::to_string(c.bit_depth)},
            {"pixel_pitch_um", format_double(c.pixel_pitch_um)},
            {"oversample_factor", std::to_string(c.oversample_factor)}};
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, p);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw IoError("bad number '" + s + "'");
    return v;
}

void write_text(const fs::path& path, const std::string& text) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_array(const fs::path& stem, const Array2& a, const Attributes& attrs) {
    write_payload(with_suffix(stem, ".raw"), a.data(), a.size());
    write_header(stem, {a.nx(), a.ny()}, attrs);
}

void write_array(const fs::path& stem, const Array3& a, const Attributes& attrs) {
    write_payload(with_suffix(stem, ".raw"), a.data(), a.size());
    write_header(stem, {a.nx(), a.ny(), a.nz()}, attrs);
}

Header read_header(const fs::path& stem) {
    std::istringstream in(read_text(with_suffix(stem, ".hdr")));
    Header h;
    bool tagged = false;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty() || trim(line)[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError(stem.string() + ".hdr: malformed line '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "format") {
            if (value != kFormatTag) throw IoError(stem.string() + ".hdr: unknown format '" + value + "'");
            tagged = true;
        } else if (key == "dtype") {
            if (value != "float64") throw IoError(stem.string() + ".hdr: unsupported dtype '" + value + "'");
            h.dtype = value;
        } else if (key == "byte_order") {
            if (value != "little") throw IoError(stem.string() + ".hdr: unsupported byte order");
        } else if (key == "shape") {
            std::istringstream s(value);
            std::string tok;
            while (s >> tok) h.shape.push_back(parse_size(tok));
        } else if (key == "layout") {
            if (value != "y-fastest") throw IoError(stem.string() + ".hdr: unsupported layout '" + value + "'");
            h.layout = value;
        } else {
            h.attrs[key] = value;
        }
    }
    if (!tagged) throw IoError(stem.string() + ".hdr: missing format tag");
    return h;
}

Array2 read_array2(const fs::path& stem, Header* header) {
    Header h = read_header(stem);
    expect_rank(h, 2, stem);
    Array2 a(h.shape[0], h.shape[1]);
    read_payload(with_suffix(stem, ".raw"), a.data(), a.size());
    if (header) *header = std::move(h);
    return a;
}

Array3 read_array3(const fs::path& stem, Header* header) {
    Header h = read_header(stem);
    expect_rank(h, 3, stem);
    Array3 a(h.shape[0], h.shape[1], h.shape[2]);
    read_payload(with_suffix(stem, ".raw"), a.data(), a.size());
    if (header) *header = std::move(h);
    return a;
}

void save(const fs::path& stem, const SpectralCube& cube) {
    Attributes a = spectral_attrs(cube.grid);
    a["type"] = "SpectralCube";
    a["kind"] = cube.kind == CubeKind::ac_only ? "ac_only" : "total_intensity";
    a["axes"] = "x y lambda";
    write_array(stem, cube.data, a);
}

SpectralCube load_spectral_cube(const fs::path& stem) {
    Header h;
    SpectralCube c;
    c.data = read_array3(stem, &h);
    c.grid = spectral_from(h, stem);
    const auto& kind = attr(h, "kind", stem);
    c.kind = kind == "total_intensity" ? CubeKind::total_intensity : CubeKind::ac_only;
    return c;
}

void save(const fs::path& stem, const ReflectivityVolume& v) {
    write_array(stem, v.data,
                {{"type", "ReflectivityVolume"},
                 {"axes", "x y z"},
                 {"pixel_pitch_um", format_double(v.pixel_pitch_um)},
                 {"num_planes", std::to_string(v.depth.num_planes)},
                 {"plane_spacing_um", format_double(v.depth.plane_spacing_um)},
                 {"origin_um", format_double(v.depth.origin_um)}});
}

ReflectivityVolume load_reflectivity_volume(const fs::path& stem) {
    Header h;
    ReflectivityVolume v;
    v.data = read_array3(stem, &h);
    v.pixel_pitch_um = parse_double(attr(h, "pixel_pitch_um", stem));
    v.depth.num_planes = parse_size(attr(h, "num_planes", stem));
    v.depth.plane_spacing_um = parse_double(attr(h, "plane_spacing_um", stem));
    v.depth.origin_um = parse_double(attr(h, "origin_um", stem));
    return v;
}

void save(const fs::path& stem, const CodedAperture& m) {
    write_array(stem, m.pattern,
                {{"type", "CodedAperture"},
                 {"axes", "x y_measurement"},
                 {"dispersion_step", std::to_string(m.dispersion_step)}});
}

CodedAperture load_coded_aperture(const fs::path& stem) {
    Header h;
    CodedAperture m;
    m.pattern = read_array2(stem, &h);
    m.dispersion_step = std::stoi(attr(h, "dispersion_step", stem));
    return m;
}

void save(const fs::path& stem, const Measurement& m) {
    Attributes a = camera_attrs(m.camera);
    a["type"] = "Measurement";
    a["axes"] = "x y_measurement";
    write_array(stem, m.image, a);
    if (m.dc_reference) {
        write_array(fs::path(stem.string() + "_dc_reference"), *m.dc_reference, {{"type", "DcReference"}});
    }
    if (m.dc_sample) {
        write_array(fs::path(stem.string() + "_dc_sample"), *m.dc_sample, {{"type", "DcSample"}});
    }
}

Measurement load_measurement(const fs::path& stem) {
    Header h;
    Measurement m;
    m.image = read_array2(stem, &h);
    m.camera.full_well_capacity_e = parse_double(attr(h, "full_well_capacity_e", stem));
    m.camera.bit_depth = std::stoi(attr(h, "bit_depth", stem));
    m.camera.pixel_pitch_um = parse_double(attr(h, "pixel_pitch_um", stem));
    m.camera.oversample_factor = std::stoi(attr(h, "oversample_factor", stem));
    const fs::path ref(stem.string() + "_dc_reference");
    const fs::path smp(stem.string() + "_dc_sample");
    if (fs::exists(with_suffix(ref, ".hdr"))) m.dc_reference = read_array2(ref);
    if (fs::exists(with_suffix(smp, ".hdr"))) m.dc_sample = read_array2(smp);
    return m;
}

void write_pgm16(const fs::path& path, const Array2& image, double lo, double hi) {
    if (!(hi > lo)) throw IoError("write_pgm16: empty intensity range");
    std::ostringstream os;
    os << "P5\n" << image.ny() << ' ' << image.nx() << "\n65535\n";
    std::string bytes = os.str();
    bytes.reserve(bytes.size() + image.size() * 2);
    for (double v : image.values()) {
        double t = (v - lo) / (hi - lo) * 65535.0;
        t = std::clamp(t, 0.0, 65535.0);
        const auto code = static_cast<std::uint16_t>(std::lround(t));
        bytes.push_back(static_cast<char>(code >> 8));
        bytes.push_back(static_cast<char>(code & 0xff));
    }
    write_text(path, bytes);
}

Array2 read_pgm16(const fs::path& path) {
    const std::string bytes = read_text(path);
    std::istringstream in(bytes);
    std::string magic;
    std::size_t width = 0, height = 0, maxval = 0;
    in >> magic >> width >> height >> maxval;
    if (magic != "P5" || !in || maxval == 0 || maxval > 65535) {
        throw IoError(path.string() + ": not a binary PGM");
    }
    in.get();  // single whitespace after maxval
    const auto offset = static_cast<std::size_t>(in.tellg());
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    if (bytes.size() < offset + width * height * bpp) throw IoError(path.string() + ": truncated PGM");
    Array2 out(height, width);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + offset);
    for (std::size_t n = 0; n < width * height; ++n) {
        out[n] = bpp == 2 ? static_cast<double>((p[2 * n] << 8) | p[2 * n + 1]) : static_cast<double>(p[n]);
    }
    return out;
}

}  // namespace snapcube::io

#include "vsr/clip_io.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace vsr {
namespace fs = std::filesystem;

namespace {

std::vector<float> to_unit(const std::vector<std::uint8_t>& bytes) {
    std::vector<float> out(bytes.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) out[i] = static_cast<float>(bytes[i]) / 255.0f;
    return out;
}

Plane read_plane(std::istream& in, int w, int h, const std::string& what) {
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw ClipFormatError("truncated frame payload in " + what);
    }
    Plane p(w, h);
    p.data = to_unit(bytes);
    return p;
}

void write_plane(std::ostream& out, const Plane& p) {
    std::vector<std::uint8_t> bytes(p.data.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize8(p.data[i]);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_chroma_or_neutral(std::ostream& out, const Frame& f) {
    if (f.chroma) {
        write_plane(out, (*f.chroma)[0]);
        write_plane(out, (*f.chroma)[1]);
    } else {
        const Plane grey(chroma_extent(f.width()), chroma_extent(f.height()), 128.0f / 255.0f);
        write_plane(out, grey);
        write_plane(out, grey);
    }
}

void require_positive(Geometry g, const std::string& what) {
    if (g.width < 1 || g.height < 1) {
        throw ClipFormatError(what + ": invalid geometry " + std::to_string(g.width) + "x" + std::to_string(g.height));
    }
}

std::uintmax_t frame_bytes(Geometry g) {
    return static_cast<std::uintmax_t>(g.width) * g.height +
           2 * static_cast<std::uintmax_t>(chroma_extent(g.width)) * chroma_extent(g.height);
}

VideoClip read_raw_yuv(const fs::path& path, Geometry g) {
    require_positive(g, path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ClipFormatError("cannot open " + path.string());
    const auto frameBytes = frame_bytes(g);
    const auto total = fs::file_size(path);
    if (total == 0 || total % frameBytes != 0) {
        throw ClipFormatError("truncated frame payload in " + path.string() + ": " + std::to_string(total) +
                              " bytes is not a multiple of " + std::to_string(frameBytes));
    }
    VideoClip clip;
    const auto count = total / frameBytes;
    for (std::uintmax_t i = 0; i < count; ++i) {
        Plane y = read_plane(in, g.width, g.height, path.string());
        Plane u = read_plane(in, chroma_extent(g.width), chroma_extent(g.height), path.string());
        Plane v = read_plane(in, chroma_extent(g.width), chroma_extent(g.height), path.string());
        clip.frames.push_back(Frame::from_planes(std::move(y), std::move(u), std::move(v)));
    }
    return clip;
}

VideoClip read_y4m(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ClipFormatError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ClipFormatError("empty file " + path.string());
    const Y4MHeader header = parse_y4m_header(line);
    const Geometry g = header.geometry;
    require_positive(g, path.string());
    VideoClip clip;
    clip.frameRate = header.frameRate;
    while (std::getline(in, line)) {
        if (line.rfind("FRAME", 0) != 0) {
            throw ClipFormatError("malformed header: expected FRAME marker in " + path.string());
        }
        Plane y = read_plane(in, g.width, g.height, path.string());
        if (header.chroma) {
            Plane u = read_plane(in, chroma_extent(g.width), chroma_extent(g.height), path.string());
            Plane v = read_plane(in, chroma_extent(g.width), chroma_extent(g.height), path.string());
            clip.frames.push_back(Frame::from_planes(std::move(y), std::move(u), std::move(v)));
        } else {
            clip.frames.push_back(Frame::from_luma(std::move(y)));
        }
    }
    if (clip.frames.empty()) throw ClipFormatError("no frames in " + path.string());
    return clip;
}

VideoClip read_pgm_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw ClipFormatError(dir.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ClipFormatError("no .pgm files in " + dir.string());
    VideoClip clip;
    for (const auto& f : files) clip.frames.push_back(Frame::from_luma(read_pgm(f)));
    clip.validate();
    return clip;
}

// Next whitespace-delimited PGM header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

int parse_positive(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(text, &used);
    } catch (const std::exception&) {
        throw ClipFormatError("malformed header: bad " + what + " '" + text + "'");
    }
    if (used != text.size() || v < 1) throw ClipFormatError("malformed header: bad " + what + " '" + text + "'");
    return v;
}

}  // namespace

std::uint8_t quantize8(float v) {
    const double scaled = std::floor(static_cast<double>(v) * 255.0 + 0.5);
    return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

Geometry parse_geometry(const std::string& text) {
    const auto x = text.find_first_of("xX");
    if (x == std::string::npos) throw std::invalid_argument("geometry must be WxH, got '" + text + "'");
    try {
        return Geometry{parse_positive(text.substr(0, x), "width"), parse_positive(text.substr(x + 1), "height")};
    } catch (const ClipFormatError&) {
        throw std::invalid_argument("geometry must be WxH, got '" + text + "'");
    }
}

ClipFormat clip_format_from_string(const std::string& name) {
    if (name == "y4m") return ClipFormat::Y4M;
    if (name == "yuv" || name == "raw") return ClipFormat::RawYUV420;
    if (name == "pgm" || name == "pgmdir") return ClipFormat::PGMDir;
    throw std::invalid_argument("unknown clip format '" + name + "' (y4m, yuv, pgm)");
}

const char* to_string(ClipFormat format) {
    switch (format) {
        case ClipFormat::Y4M: return "y4m";
        case ClipFormat::RawYUV420: return "yuv";
        case ClipFormat::PGMDir: return "pgm";
    }
    return "y4m";
}

ClipFormat guess_clip_format(const fs::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".y4m") return ClipFormat::Y4M;
    if (ext == ".yuv") return ClipFormat::RawYUV420;
    return ClipFormat::PGMDir;
}

Y4MHeader parse_y4m_header(const std::string& line) {
    std::istringstream ss(line);
    std::string magic;
    ss >> magic;
    if (magic != "YUV4MPEG2") throw ClipFormatError("malformed header: missing YUV4MPEG2 signature");
    Y4MHeader h;
    std::string tok;
    while (ss >> tok) {
        const char tag = tok[0];
        const std::string value = tok.substr(1);
        switch (tag) {
            case 'W': h.geometry.width = parse_positive(value, "width"); break;
            case 'H': h.geometry.height = parse_positive(value, "height"); break;
            case 'F': {
                const auto colon = value.find(':');
                if (colon == std::string::npos) throw ClipFormatError("malformed header: bad frame rate " + value);
                const int num = parse_positive(value.substr(0, colon), "frame rate");
                const int den = parse_positive(value.substr(colon + 1), "frame rate");
                h.frameRate = static_cast<double>(num) / den;
                break;
            }
            case 'C':
                if (value.rfind("420", 0) == 0) {
                    h.chroma = true;
                } else if (value == "mono") {
                    h.chroma = false;
                } else {
                    throw ClipFormatError("unsupported colorspace C" + value + " (only 4:2:0 and mono)");
                }
                break;
            default: break;  // I, A, X carry nothing we use
        }
    }
    if (h.geometry.width == 0 || h.geometry.height == 0) throw ClipFormatError("malformed header: missing W or H");
    return h;
}

Plane read_pgm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ClipFormatError("cannot open " + path.string());
    if (pgm_token(in) != "P5") throw ClipFormatError("malformed header: " + path.string() + " is not binary PGM (P5)");
    const int w = parse_positive(pgm_token(in), "width");
    const int h = parse_positive(pgm_token(in), "height");
    const int maxval = parse_positive(pgm_token(in), "maxval");
    if (maxval != 255) throw ClipFormatError("unsupported PGM maxval " + std::to_string(maxval));
    return read_plane(in, w, h, path.string());
}

void write_pgm(const Plane& plane, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ClipFormatError("cannot write " + path.string());
    out << "P5\n" << plane.width << ' ' << plane.height << "\n255\n";
    write_plane(out, plane);
}

VideoClip read_clip(const fs::path& path, ClipFormat format, std::optional<Geometry> geometry) {
    VideoClip clip;
    switch (format) {
        case ClipFormat::Y4M: clip = read_y4m(path); break;
        case ClipFormat::RawYUV420:
            if (!geometry) throw ClipFormatError("raw YUV input requires --size WxH");
            clip = read_raw_yuv(path, *geometry);
            break;
        case ClipFormat::PGMDir: clip = read_pgm_dir(path); break;
    }
    return clip;
}

void write_clip(const VideoClip& clip, const fs::path& path, ClipFormat format) {
    clip.validate();
    const Geometry g{clip.width(), clip.height()};
    switch (format) {
        case ClipFormat::Y4M: {
            require_positive(g, path.string());
            std::ofstream out(path, std::ios::binary);
            if (!out) throw ClipFormatError("cannot write " + path.string());
            const bool whole = std::abs(clip.frameRate - std::round(clip.frameRate)) < 1e-9;
            const long den = whole ? 1 : 1001;
            const long num = std::lround(clip.frameRate * den);
            out << "YUV4MPEG2 W" << g.width << " H" << g.height << " F" << num << ':' << den << " Ip A1:1 C420jpeg\n";
            for (const Frame& f : clip.frames) {
                out << "FRAME\n";
                write_plane(out, f.luma);
                write_chroma_or_neutral(out, f);
            }
            break;
        }
        case ClipFormat::RawYUV420: {
            require_positive(g, path.string());
            std::ofstream out(path, std::ios::binary);
            if (!out) throw ClipFormatError("cannot write " + path.string());
            for (const Frame& f : clip.frames) {
                write_plane(out, f.luma);
                write_chroma_or_neutral(out, f);
            }
            break;
        }
        case ClipFormat::PGMDir: {
            fs::create_directories(path);
            char name[32];
            for (std::size_t i = 0; i < clip.frames.size(); ++i) {
                std::snprintf(name, sizeof(name), "%05zu.pgm", i);
                write_pgm(clip.frames[i].luma, path / name);
            }
            break;
        }
    }
}

}  // namespace vsr

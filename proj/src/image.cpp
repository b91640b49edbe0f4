#include "spgnn/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace spgnn {

namespace {

// Skips whitespace and '#' comment lines between PNM header tokens.
int read_pnm_int(std::istream& is, const std::string& path) {
    int c = is.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = is.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = is.get();
    }
    if (c == EOF || !std::isdigit(c)) throw std::runtime_error("malformed PNM header: " + path);
    int v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        c = is.get();
    }
    if (c != EOF) is.unget();
    return v;
}

void expect_magic(std::istream& is, const char* magic, const std::string& path) {
    char a = static_cast<char>(is.get());
    char b = static_cast<char>(is.get());
    if (a != magic[0] || b != magic[1])
        throw std::runtime_error(std::string("not a ") + magic + " file: " + path);
}

}  // namespace

Tensor load_ppm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open image: " + path);
    expect_magic(is, "P6", path);
    int w = read_pnm_int(is, path);
    int h = read_pnm_int(is, path);
    int maxval = read_pnm_int(is, path);
    if (maxval != 255) throw std::runtime_error("unsupported PPM maxval (want 255): " + path);
    if (w < 32 || h < 32)
        throw std::runtime_error("image too small (min 32x32): " + path);
    is.get();  // single whitespace after maxval
    std::vector<unsigned char> raw(static_cast<size_t>(w) * h * 3);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!is) throw std::runtime_error("truncated PPM data: " + path);
    Tensor img({3, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = raw[(static_cast<size_t>(y) * w + x) * 3 + c] / 255.0;
                img.at(c, y, x) = std::clamp(v, 0.0, 1.0);
            }
    return img;
}

void save_ppm(const std::string& path, const Tensor& img) {
    if (img.rank() != 3 || img.dim(0) != 3)
        throw std::invalid_argument("save_ppm: tensor must be [3,H,W]");
    int h = img.dim(1), w = img.dim(2);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open image for writing: " + path);
    os << "P6\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> raw(static_cast<size_t>(w) * h * 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
                raw[(static_cast<size_t>(y) * w + x) * 3 + c] =
                    static_cast<unsigned char>(std::lround(v * 255.0));
            }
    os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!os) throw std::runtime_error("image write failed: " + path);
}

void save_pgm16(const std::string& path, const std::vector<int>& values, int w, int h) {
    if (values.size() != static_cast<size_t>(w) * h)
        throw std::invalid_argument("save_pgm16: value count != w*h");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << "P5\n" << w << " " << h << "\n65535\n";
    for (int v : values) {
        if (v < 0 || v > 65535) throw std::invalid_argument("save_pgm16: value out of range");
        os.put(static_cast<char>((v >> 8) & 0xff));
        os.put(static_cast<char>(v & 0xff));
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<int> load_pgm16(const std::string& path, int& w, int& h) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    expect_magic(is, "P5", path);
    w = read_pnm_int(is, path);
    h = read_pnm_int(is, path);
    int maxval = read_pnm_int(is, path);
    if (maxval != 65535) throw std::runtime_error("unsupported PGM maxval (want 65535): " + path);
    is.get();
    std::vector<int> values(static_cast<size_t>(w) * h);
    for (auto& v : values) {
        int hi = is.get(), lo = is.get();
        if (hi == EOF || lo == EOF) throw std::runtime_error("truncated PGM data: " + path);
        v = (hi << 8) | lo;
    }
    return values;
}

Tensor pad_reflect_to_multiple(const Tensor& img, int multiple) {
    if (img.rank() != 3) throw std::invalid_argument("pad_reflect_to_multiple: rank must be 3");
    int c = img.dim(0), h = img.dim(1), w = img.dim(2);
    int ph = (h + multiple - 1) / multiple * multiple;
    int pw = (w + multiple - 1) / multiple * multiple;
    if (ph == h && pw == w) return img;
    if (ph - h >= h || pw - w >= w)
        throw std::invalid_argument("pad_reflect_to_multiple: image too small to reflect");
    Tensor out({c, ph, pw});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < ph; ++y) {
            int sy = y < h ? y : 2 * h - 2 - y;
            for (int x = 0; x < pw; ++x) {
                int sx = x < w ? x : 2 * w - 2 - x;
                out.at(ch, y, x) = img.at(ch, sy, sx);
            }
        }
    return out;
}

}  // namespace spgnn

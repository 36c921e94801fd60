#include <boundcue/io.hpp>

#include <boundcue/errors.hpp>

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>

namespace boundcue {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& file, const char* mode) {
    FilePtr f(std::fopen(file.c_str(), mode));
    if (!f) throw Error("cannot open " + file.string());
    return f;
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

std::uint32_t get_u32(const std::string& in, std::size_t off) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[off + b])) << (8 * b);
    return v;
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

}  // namespace

Image read_png(const std::filesystem::path& file) {
    auto fp = open_file(file, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) throw Error("libpng initialization failed");
    std::vector<png_bytep> rows;
    std::vector<unsigned char> buffer;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("malformed PNG " + file.string());
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (depth == 16) png_set_swap(png);  // little-endian 16-bit samples
    png_read_update_info(png, info);

    Image img;
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.channels = png_get_channels(png, info);
    depth = png_get_bit_depth(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    buffer.resize(stride * img.height);
    rows.resize(img.height);
    for (int y = 0; y < img.height; ++y) rows[y] = buffer.data() + stride * y;
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);

    img.data.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
    const std::size_t n = img.data.size();
    if (depth == 16) {
        for (std::size_t i = 0; i < n; ++i) {
            const unsigned v = buffer[2 * i] | (buffer[2 * i + 1] << 8);
            img.data[i] = v / 65535.0;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) img.data[i] = buffer[i] / 255.0;
    }
    return img;
}

void write_png(const std::filesystem::path& file, const Image& img, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16) throw Error("PNG bit depth must be 8 or 16");
    int color = 0;
    switch (img.channels) {
        case 1: color = PNG_COLOR_TYPE_GRAY; break;
        case 3: color = PNG_COLOR_TYPE_RGB; break;
        case 4: color = PNG_COLOR_TYPE_RGBA; break;
        default: throw Error("PNG channel count must be 1, 3 or 4");
    }
    const std::size_t bytes = static_cast<std::size_t>(bit_depth / 8);
    const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels * bytes;
    std::vector<unsigned char> buffer(stride * img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const double v = std::clamp(img.data[i], 0.0, 1.0);
        if (bit_depth == 16) {
            const auto q = static_cast<unsigned>(std::lround(v * 65535.0));
            buffer[2 * i] = static_cast<unsigned char>(q >> 8);  // PNG is big-endian
            buffer[2 * i + 1] = static_cast<unsigned char>(q & 0xffu);
        } else {
            buffer[i] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
    }

    auto fp = open_file(file, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) throw Error("libpng initialization failed");
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y) rows[y] = buffer.data() + stride * y;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("failed writing PNG " + file.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, bit_depth, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::string encode_bczf(const HeightField& z) {
    std::string out = "BCZF";
    put_u32(out, static_cast<std::uint32_t>(z.width()));
    put_u32(out, static_cast<std::uint32_t>(z.height()));
    put_u32(out, kBczfMaskedNan);
    out.reserve(out.size() + 4 * z.values.size());
    for (std::size_t i = 0; i < z.values.size(); ++i)
        put_f32(out, z.mask[i] ? static_cast<float>(z.values[i])
                               : std::numeric_limits<float>::quiet_NaN());
    return out;
}

HeightField decode_bczf(const std::string& bytes) {
    if (bytes.size() < 16 || bytes.compare(0, 4, "BCZF") != 0)
        throw Error("not a BCZF height field");
    const auto w = get_u32(bytes, 4), h = get_u32(bytes, 8), flags = get_u32(bytes, 12);
    if (bytes.size() != 16 + 4ull * w * h) throw Error("BCZF size does not match header");
    HeightField z(static_cast<int>(w), static_cast<int>(h));
    for (std::size_t i = 0; i < z.values.size(); ++i) {
        const float f = std::bit_cast<float>(get_u32(bytes, 16 + 4 * i));
        const bool off = (flags & kBczfMaskedNan) && std::isnan(f);
        z.mask[i] = off ? 0 : 1;
        z.values[i] = off ? 0.0 : static_cast<double>(f);
    }
    return z;
}

void write_bczf(const std::filesystem::path& file, const HeightField& z) {
    write_file(file, encode_bczf(z));
}

HeightField read_bczf(const std::filesystem::path& file) { return decode_bczf(read_file(file)); }

std::string encode_pfm(const HeightField& z) {
    std::string out = "Pf\n" + std::to_string(z.width()) + " " + std::to_string(z.height()) +
                      "\n-1.0\n";
    for (int y = z.height() - 1; y >= 0; --y)
        for (int x = 0; x < z.width(); ++x)
            put_f32(out, z.mask(x, y) ? static_cast<float>(z(x, y)) : 0.0f);
    return out;
}

std::string encode_obj(const HeightField& z) {
    std::ostringstream os;
    os << std::setprecision(9);
    Grid<int> vertex(z.width(), z.height(), 0);
    int next = 1;
    for (int y = 0; y < z.height(); ++y)
        for (int x = 0; x < z.width(); ++x)
            if (z.mask(x, y)) {
                vertex(x, y) = next++;
                os << "v " << x << ' ' << -y << ' ' << z(x, y) << '\n';
            }
    for (int y = 0; y + 1 < z.height(); ++y)
        for (int x = 0; x + 1 < z.width(); ++x) {
            const int a = vertex(x, y), b = vertex(x + 1, y);
            const int c = vertex(x, y + 1), d = vertex(x + 1, y + 1);
            if (!a || !b || !c || !d) continue;
            // counter-clockwise seen from +z after the y flip
            os << "f " << a << ' ' << c << ' ' << b << '\n';
            os << "f " << b << ' ' << c << ' ' << d << '\n';
        }
    return os.str();
}

Image normals_image(const NormalField& nf, const Mask& mask) {
    Image img{nf.n.width(), nf.n.height(), 3, {}};
    img.data.assign(static_cast<std::size_t>(img.width) * img.height * 3, 0.0);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            if (!mask(x, y)) continue;
            const Vec3& n = nf.n(x, y);
            img.at(x, y, 0) = 0.5 * (n.x + 1.0);
            img.at(x, y, 1) = 0.5 * (n.y + 1.0);
            img.at(x, y, 2) = 0.5 * (n.z + 1.0);
        }
    return img;
}

std::string read_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error("cannot open " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& file, const std::string& bytes) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + file.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("cannot write " + file.string());
}

}  // namespace boundcue

#pragma once

#include <boundcue/geometry.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace boundcue {

/// Interleaved image with samples in [0, 1].
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> data;

    double& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

Image read_png(const std::filesystem::path& file);
/// `bit_depth` is 8 or 16; channels 1 (gray), 3 (RGB) or 4 (RGBA).
void write_png(const std::filesystem::path& file, const Image& img, int bit_depth);

/// BCZF: "BCZF", u32 width, u32 height, u32 flags, then width*height
/// little-endian float32 heights, row-major. With flag bit 0 set, NaN marks
/// pixels off the mask.
inline constexpr std::uint32_t kBczfMaskedNan = 1u;

std::string encode_bczf(const HeightField& z);
HeightField decode_bczf(const std::string& bytes);
void write_bczf(const std::filesystem::path& file, const HeightField& z);
HeightField read_bczf(const std::filesystem::path& file);

/// Single-channel little-endian PFM ("Pf", scale -1, bottom row first).
/// Off-mask heights are written as 0.
std::string encode_pfm(const HeightField& z);

/// Triangulated surface, two triangles per 2x2 pixel quad fully on the mask.
/// Vertices are (x, -y, Z) so the mesh appears upright in viewers.
std::string encode_obj(const HeightField& z);

/// RGB visualization mapping N in [-1, 1]^3 to [0, 1]^3; black off the mask.
Image normals_image(const NormalField& nf, const Mask& mask);

std::string read_file(const std::filesystem::path& file);
void write_file(const std::filesystem::path& file, const std::string& bytes);

}  // namespace boundcue

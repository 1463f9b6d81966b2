#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tdtl::features {

struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // row-major

    GrayImage() = default;
    GrayImage(std::size_t w, std::size_t h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(w * h, fill) {}

    std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
    std::uint8_t& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }

    /// Intensity with coordinates clamped to the image bounds.
    double clamped(long x, long y) const;
};

struct Landmark {
    double x = 0.0;
    double y = 0.0;
};

inline constexpr std::size_t kLandmarkCount = 68;

struct LandmarkSet {
    std::array<Landmark, kLandmarkCount> points;
};

enum class DescriptorKind { Lbp, Sift, External };

struct FeatureVector {
    std::vector<double> values;
    DescriptorKind kind = DescriptorKind::External;
};

inline constexpr std::size_t kLbpBins = 59;        // 58 uniform + 1 catch-all
inline constexpr std::size_t kLbpGrid = 8;         // 8x8 regions
inline constexpr std::size_t kLbpLength = 3776;    // 64 * 59
inline constexpr std::size_t kSiftLength = 8704;   // 68 * 128

/// 8-bit code of the 3x3 ring around interior pixel (x, y). Neighbor order
/// NW,N,NE,E,SE,S,SW,W maps to bits 0..7; a bit is 1 iff neighbor >= center.
std::uint8_t lbp_code(const GrayImage& img, std::size_t x, std::size_t y);

/// Bin index for a code: the 58 uniform patterns (<= 2 circular transitions)
/// in ascending numeric order occupy bins 0..57, everything else bin 58.
std::size_t lbp_uniform_bin(std::uint8_t code);

/// Uniform-LBP histograms over an 8x8 region grid covering the image interior
/// (the 1-pixel border is dropped; remainder rows/columns go to the last
/// region row/column). Histograms concatenate in row-major region order into
/// exactly 3776 values. Requires width >= 16 and height >= 16.
FeatureVector lbp_u2_histogram(const GrayImage& img);

/// 128-value upright descriptor per landmark: 16x16 window at the rounded
/// point, central-difference gradients with border clamping, 4x4 spatial
/// cells x 8 orientation bins, bilinear orientation weighting, Gaussian
/// spatial weighting (sigma 8 px), then L2 normalize / clamp 0.2 /
/// renormalize. Descriptors shorter than 1e-12 pre-normalization come back
/// all zero. Concatenates to exactly 8704 values.
FeatureVector sift_at_landmarks(const GrayImage& img, const LandmarkSet& lm);

/// Landmark CSV: header `image_id,idx,x,y`, 68 rows per image with idx 0..67.
std::map<std::string, LandmarkSet> load_landmarks_csv(const std::string& path);
void save_landmarks_csv(const std::string& path,
                        const std::map<std::string, LandmarkSet>& sets);

}  // namespace tdtl::features

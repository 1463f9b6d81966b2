#include "tdtl/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "tdtl/csv.hpp"
#include "tdtl/errors.hpp"

namespace tdtl::features {

double GrayImage::clamped(long x, long y) const {
    const long xc = std::clamp<long>(x, 0, static_cast<long>(width) - 1);
    const long yc = std::clamp<long>(y, 0, static_cast<long>(height) - 1);
    return static_cast<double>(pixels[static_cast<std::size_t>(yc) * width +
                                      static_cast<std::size_t>(xc)]);
}

std::uint8_t lbp_code(const GrayImage& img, std::size_t x, std::size_t y) {
    if (x == 0 || y == 0 || x + 1 >= img.width || y + 1 >= img.height)
        throw ContractError("lbp_code: pixel is not interior");
    const std::uint8_t c = img.at(x, y);
    // Bit order NW,N,NE,E,SE,S,SW,W -> bits 0..7; ties (neighbor == center) set the bit.
    const std::uint8_t n[8] = {img.at(x - 1, y - 1), img.at(x, y - 1), img.at(x + 1, y - 1),
                               img.at(x + 1, y),     img.at(x + 1, y + 1), img.at(x, y + 1),
                               img.at(x - 1, y + 1), img.at(x - 1, y)};
    std::uint8_t code = 0;
    for (int b = 0; b < 8; ++b)
        if (n[b] >= c) code |= static_cast<std::uint8_t>(1u << b);
    return code;
}

namespace {

int circular_transitions(std::uint8_t code) {
    int t = 0;
    for (int b = 0; b < 8; ++b) {
        const int cur = (code >> b) & 1;
        const int nxt = (code >> ((b + 1) % 8)) & 1;
        if (cur != nxt) ++t;
    }
    return t;
}

// code -> bin table; uniform codes in ascending numeric order get 0..57.
std::array<std::size_t, 256> build_bin_table() {
    std::array<std::size_t, 256> table{};
    std::size_t next = 0;
    for (int code = 0; code < 256; ++code)
        if (circular_transitions(static_cast<std::uint8_t>(code)) <= 2)
            table[static_cast<std::size_t>(code)] = next++;
        else
            table[static_cast<std::size_t>(code)] = kLbpBins - 1;
    return table;
}

const std::array<std::size_t, 256> kBinTable = build_bin_table();

}  // namespace

std::size_t lbp_uniform_bin(std::uint8_t code) { return kBinTable[code]; }

FeatureVector lbp_u2_histogram(const GrayImage& img) {
    if (img.width < 16 || img.height < 16)
        throw ContractError("lbp_u2_histogram: image must be at least 16x16, got " +
                            std::to_string(img.width) + "x" + std::to_string(img.height));

    const std::size_t wi = img.width - 2;   // interior width
    const std::size_t hi = img.height - 2;  // interior height
    const std::size_t base_w = wi / kLbpGrid;
    const std::size_t base_h = hi / kLbpGrid;

    FeatureVector out;
    out.kind = DescriptorKind::Lbp;
    out.values.assign(kLbpLength, 0.0);

    for (std::size_t y = 1; y + 1 < img.height; ++y) {
        const std::size_t ry = std::min((y - 1) / base_h, kLbpGrid - 1);
        for (std::size_t x = 1; x + 1 < img.width; ++x) {
            const std::size_t rx = std::min((x - 1) / base_w, kLbpGrid - 1);
            const std::size_t bin = kBinTable[lbp_code(img, x, y)];
            out.values[(ry * kLbpGrid + rx) * kLbpBins + bin] += 1.0;
        }
    }
    return out;
}

FeatureVector sift_at_landmarks(const GrayImage& img, const LandmarkSet& lm) {
    if (img.width == 0 || img.height == 0)
        throw ContractError("sift_at_landmarks: empty image");
    for (const Landmark& p : lm.points)
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw ContractError("sift_at_landmarks: non-finite landmark coordinate");

    constexpr int kHalf = 8;              // window offsets in [-8, 7]
    constexpr double kSigma = 8.0;
    constexpr double kClamp = 0.2;
    constexpr std::size_t kDescLen = 128;

    FeatureVector out;
    out.kind = DescriptorKind::Sift;
    out.values.assign(kSiftLength, 0.0);

    for (std::size_t li = 0; li < kLandmarkCount; ++li) {
        const long cx = std::clamp<long>(std::lround(lm.points[li].x), 0,
                                         static_cast<long>(img.width) - 1);
        const long cy = std::clamp<long>(std::lround(lm.points[li].y), 0,
                                         static_cast<long>(img.height) - 1);
        double desc[kDescLen] = {0.0};

        for (int dy = -kHalf; dy < kHalf; ++dy) {
            for (int dx = -kHalf; dx < kHalf; ++dx) {
                const long px = cx + dx, py = cy + dy;
                const double gx = (img.clamped(px + 1, py) - img.clamped(px - 1, py)) / 2.0;
                const double gy = (img.clamped(px, py + 1) - img.clamped(px, py - 1)) / 2.0;
                const double mag = std::hypot(gx, gy);
                if (mag == 0.0) continue;

                double angle = std::atan2(gy, gx);
                if (angle < 0.0) angle += 2.0 * std::numbers::pi;
                double pos = angle * 4.0 / std::numbers::pi;  // in [0, 8)
                if (pos >= 8.0) pos -= 8.0;
                const int b0 = static_cast<int>(pos);
                const int b1 = (b0 + 1) % 8;
                const double w1 = pos - b0;

                const double weight =
                    mag * std::exp(-(double(dx) * dx + double(dy) * dy) /
                                   (2.0 * kSigma * kSigma));
                const int cell = ((dy + kHalf) / 4) * 4 + (dx + kHalf) / 4;
                desc[cell * 8 + b0] += weight * (1.0 - w1);
                desc[cell * 8 + b1] += weight * w1;
            }
        }

        double norm = 0.0;
        for (double v : desc) norm += v * v;
        norm = std::sqrt(norm);
        if (norm < 1e-12) continue;  // flat window: leave the zero descriptor

        for (double& v : desc) v /= norm;
        // Clamp and renormalize until the bound holds; a couple of passes
        // suffice except for degenerate near-empty histograms.
        for (int pass = 0; pass < 10; ++pass) {
            double n2 = 0.0;
            for (double& v : desc) {
                v = std::min(v, kClamp);
                n2 += v * v;
            }
            n2 = std::sqrt(n2);
            for (double& v : desc) v /= n2;
            double mx = 0.0;
            for (double v : desc) mx = std::max(mx, v);
            if (mx <= kClamp * (1.0 + 1e-6)) break;
        }
        std::copy(desc, desc + kDescLen, out.values.begin() + li * kDescLen);
    }
    return out;
}

std::map<std::string, LandmarkSet> load_landmarks_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open landmark file: " + path);

    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(f, line)) throw ParseError("empty landmark file", 1);
    ++lineno;
    if (csv::split_line(line) != std::vector<std::string>{"image_id", "idx", "x", "y"})
        throw ParseError("landmark header must be image_id,idx,x,y", lineno);

    std::map<std::string, LandmarkSet> sets;
    std::map<std::string, std::vector<bool>> seen;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = csv::split_line(line);
        if (fields.size() != 4) throw ParseError("expected 4 fields", lineno);
        std::size_t idx;
        double x, y;
        try {
            idx = std::stoul(fields[1]);
            x = std::stod(fields[2]);
            y = std::stod(fields[3]);
        } catch (const std::exception&) {
            throw ParseError("malformed landmark row", lineno);
        }
        if (idx >= kLandmarkCount) throw ParseError("landmark idx out of range", lineno);
        auto& flags = seen[fields[0]];
        flags.resize(kLandmarkCount, false);
        if (flags[idx])
            throw ValidationError("duplicate landmark idx " + std::to_string(idx) +
                                  " for image " + fields[0]);
        flags[idx] = true;
        sets[fields[0]].points[idx] = Landmark{x, y};
    }
    for (const auto& [id, flags] : seen) {
        const std::size_t have =
            static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
        if (have != kLandmarkCount)
            throw ValidationError("image " + id + " has " + std::to_string(have) +
                                  " landmarks, expected 68");
    }
    return sets;
}

void save_landmarks_csv(const std::string& path,
                        const std::map<std::string, LandmarkSet>& sets) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open landmark file for writing: " + path);
    f << "image_id,idx,x,y\n";
    char buf[64];
    for (const auto& [id, lm] : sets) {
        for (std::size_t i = 0; i < kLandmarkCount; ++i) {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g", i, lm.points[i].x,
                          lm.points[i].y);
            f << csv::escape(id) << ',' << buf << '\n';
        }
    }
    if (!f) throw IoError("failed writing landmark file: " + path);
}

}  // namespace tdtl::features

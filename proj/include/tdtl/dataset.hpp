#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tdtl/features.hpp"
#include "tdtl/matrix.hpp"

namespace tdtl::data {

enum class Domain { Source, Target };

std::string domain_name(Domain d);
Domain parse_domain(const std::string& s);

/// One sample: an image path or an inline feature row, an optional label
/// (-1 = unknown), a domain tag and a view-point id. Source samples must be
/// labeled; target labels are kept for evaluation only.
struct SampleRecord {
    std::string id;
    std::string path;  // image mode; empty in feature mode
    int label = -1;
    Domain domain = Domain::Source;
    int view = 0;
};

struct Manifest {
    std::vector<SampleRecord> samples;
    std::size_t class_count = 0;
    std::vector<std::string> class_names;

    std::vector<int> labels() const;
    std::vector<std::string> ids() const;
};

/// Synthetic multi-view, two-domain benchmark. Feature mode places class
/// means on a circle of radius 4 inside a 2-plane of a feature_dim-space;
/// each view rotates that plane by view * rotation_step_deg, and the target
/// domain is translated by a fixed random direction of length `shift` with
/// noise scaled by target_noise_scale. Image mode draws 32x32 oriented bars:
/// orientation encodes class, shear encodes view, a brightness offset plus
/// extra noise encode the domain.
struct SyntheticConfig {
    std::size_t class_count = 4;
    std::size_t views_per_domain = 2;
    std::size_t samples_per_class_view = 25;
    enum class Mode { Feature, Image } mode = Mode::Feature;
    double shift = 4.0;
    double rotation_step_deg = 15.0;
    double noise_std = 1.2;
    double target_noise_scale = 1.0;
    std::vector<double> class_weights;  // relative per-class multipliers; empty = uniform
    std::size_t feature_dim = 16;
    std::uint64_t seed = 42;
};

struct GeneratedDomain {
    Manifest manifest;
    linalg::Matrix features;                   // feature mode; rows align with manifest
    std::vector<features::GrayImage> images;   // image mode; aligned likewise
};

std::pair<GeneratedDomain, GeneratedDomain> generate_synthetic(const SyntheticConfig& cfg);

/// Fixed 68-point layout (face-like ellipse plus inner grid) used as the
/// landmark stand-in for synthetic images.
features::LandmarkSet synthetic_landmarks(std::size_t width, std::size_t height);

/// Manifest CSV: optional `# classes=c names=a|b|...` comment line, then
/// header `id,path,label,domain,view`. Unknown label is -1.
void save_manifest(const std::string& path, const Manifest& manifest);
Manifest load_manifest(const std::string& path);

/// Feature CSV: same optional comment line, then header
/// `id,label,domain,view,f0,...,f{D-1}`.
void save_feature_csv(const std::string& path, const Manifest& manifest,
                      const linalg::Matrix& features);
std::pair<linalg::Matrix, Manifest> load_feature_csv(const std::string& path);

/// Binary 8-bit PGM (P5).
void save_pgm(const std::string& path, const features::GrayImage& img);
features::GrayImage load_pgm(const std::string& path);

}  // namespace tdtl::data

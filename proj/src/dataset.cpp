#include "tdtl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "tdtl/csv.hpp"
#include "tdtl/errors.hpp"
#include "tdtl/rng.hpp"

namespace tdtl::data {

std::string domain_name(Domain d) { return d == Domain::Source ? "source" : "target"; }

Domain parse_domain(const std::string& s) {
    if (s == "source") return Domain::Source;
    if (s == "target") return Domain::Target;
    throw ValidationError("unknown domain tag: " + s);
}

std::vector<int> Manifest::labels() const {
    std::vector<int> out;
    out.reserve(samples.size());
    for (const SampleRecord& s : samples) out.push_back(s.label);
    return out;
}

std::vector<std::string> Manifest::ids() const {
    std::vector<std::string> out;
    out.reserve(samples.size());
    for (const SampleRecord& s : samples) out.push_back(s.id);
    return out;
}

namespace {

constexpr double kCircleRadius = 4.0;
constexpr std::size_t kImageSide = 32;

std::vector<std::size_t> per_class_counts(const SyntheticConfig& cfg) {
    std::vector<std::size_t> counts(cfg.class_count, cfg.samples_per_class_view);
    if (!cfg.class_weights.empty()) {
        if (cfg.class_weights.size() != cfg.class_count)
            throw ContractError("class_weights length must equal class_count");
        for (std::size_t k = 0; k < cfg.class_count; ++k) {
            if (cfg.class_weights[k] <= 0.0)
                throw ContractError("class_weights must be positive");
            counts[k] = static_cast<std::size_t>(std::llround(
                cfg.class_weights[k] * static_cast<double>(cfg.samples_per_class_view)));
            if (counts[k] == 0) counts[k] = 1;
        }
    }
    return counts;
}

// Class-k mean for one view: circle point in the (e0,e1) plane, then the
// plane rotated by the view angle within (e0,e2) and (e1,e3).
std::vector<double> class_view_mean(const SyntheticConfig& cfg, std::size_t k,
                                    std::size_t view) {
    std::vector<double> m(cfg.feature_dim, 0.0);
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(cfg.class_count);
    const double a = kCircleRadius * std::cos(theta);
    const double b = kCircleRadius * std::sin(theta);
    const double phi = static_cast<double>(view) * cfg.rotation_step_deg *
                       std::numbers::pi / 180.0;
    m[0] = a * std::cos(phi);
    m[2] = a * std::sin(phi);
    m[1] = b * std::cos(phi);
    m[3] = b * std::sin(phi);
    return m;
}

features::GrayImage render_bar_image(const SyntheticConfig& cfg, std::size_t k,
                                     std::size_t view, bool target, Rng& rng) {
    features::GrayImage img(kImageSide, kImageSide);
    const double angle = std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(cfg.class_count);
    const double shear = 0.25 * static_cast<double>(view);
    const double base = 40.0 + (target ? cfg.shift * 10.0 : 0.0);
    const double noise = 12.0 * cfg.noise_std * (target ? cfg.target_noise_scale : 1.0);
    const double half = static_cast<double>(kImageSide) / 2.0;

    for (std::size_t y = 0; y < kImageSide; ++y) {
        for (std::size_t x = 0; x < kImageSide; ++x) {
            const double v = static_cast<double>(y) - half + 0.5;
            double u = static_cast<double>(x) - half + 0.5;
            u -= shear * v;  // view shear
            const double across = -std::sin(angle) * u + std::cos(angle) * v;
            const double along = std::cos(angle) * u + std::sin(angle) * v;
            double val = base;
            if (std::fabs(along) <= 12.0)
                val += 170.0 * std::exp(-across * across / (2.0 * 1.5 * 1.5));
            val += noise * rng.normal();
            img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(val), 0L, 255L));
        }
    }
    return img;
}

GeneratedDomain generate_domain(const SyntheticConfig& cfg, Domain domain,
                                const std::vector<double>& shift_dir, Rng& rng) {
    const bool target = domain == Domain::Target;
    const std::vector<std::size_t> counts = per_class_counts(cfg);

    GeneratedDomain out;
    out.manifest.class_count = cfg.class_count;
    for (std::size_t k = 0; k < cfg.class_count; ++k)
        out.manifest.class_names.push_back("c" + std::to_string(k));

    std::vector<std::vector<double>> rows;
    std::size_t index = 0;
    const char prefix = target ? 't' : 's';
    for (std::size_t k = 0; k < cfg.class_count; ++k) {
        for (std::size_t v = 0; v < cfg.views_per_domain; ++v) {
            for (std::size_t i = 0; i < counts[k]; ++i) {
                char idbuf[32];
                std::snprintf(idbuf, sizeof(idbuf), "%c%05zu", prefix, index++);
                SampleRecord rec;
                rec.id = idbuf;
                rec.label = static_cast<int>(k);
                rec.domain = domain;
                rec.view = static_cast<int>(v);

                if (cfg.mode == SyntheticConfig::Mode::Feature) {
                    std::vector<double> x = class_view_mean(cfg, k, v);
                    const double sd =
                        cfg.noise_std * (target ? cfg.target_noise_scale : 1.0);
                    for (std::size_t d = 0; d < cfg.feature_dim; ++d) {
                        x[d] += cfg.shift * (target ? shift_dir[d] : 0.0);
                        x[d] += sd * rng.normal();
                    }
                    rows.push_back(std::move(x));
                } else {
                    rec.path = std::string("images/") + idbuf + ".pgm";
                    out.images.push_back(render_bar_image(cfg, k, v, target, rng));
                }
                out.manifest.samples.push_back(std::move(rec));
            }
        }
    }

    if (cfg.mode == SyntheticConfig::Mode::Feature) {
        out.features = linalg::Matrix(rows.size(), cfg.feature_dim);
        for (std::size_t i = 0; i < rows.size(); ++i)
            std::copy(rows[i].begin(), rows[i].end(), out.features.row_ptr(i));
    }
    return out;
}

}  // namespace

std::pair<GeneratedDomain, GeneratedDomain> generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.class_count < 2) throw ContractError("class_count must be >= 2");
    if (cfg.views_per_domain < 1) throw ContractError("views_per_domain must be >= 1");
    if (cfg.samples_per_class_view < 1)
        throw ContractError("samples_per_class_view must be >= 1");
    if (cfg.noise_std < 0.0) throw ContractError("noise_std must be >= 0");
    if (cfg.mode == SyntheticConfig::Mode::Feature && cfg.feature_dim < 4)
        throw ContractError("feature_dim must be >= 4");

    Rng rng(cfg.seed);
    // Fixed random unit direction for the domain shift, drawn first so the
    // sample stream is unaffected by it. Half of its energy lies inside the
    // class-structure span (the first four axes), so the translation confuses
    // classes instead of merely moving the cloud off-plane.
    std::vector<double> dir(cfg.feature_dim, 0.0);
    if (cfg.mode == SyntheticConfig::Mode::Feature) {
        const std::size_t plane = std::min<std::size_t>(4, cfg.feature_dim);
        std::vector<double> raw(cfg.feature_dim);
        for (double& d : raw) d = rng.normal();
        double nin = 0.0, nout = 0.0;
        for (std::size_t i = 0; i < cfg.feature_dim; ++i)
            (i < plane ? nin : nout) += raw[i] * raw[i];
        nin = std::sqrt(nin);
        nout = std::sqrt(nout);
        for (std::size_t i = 0; i < cfg.feature_dim; ++i) {
            if (i < plane)
                dir[i] = nin > 1e-12 ? raw[i] / nin * std::numbers::sqrt2 / 2.0 : 0.0;
            else
                dir[i] = nout > 1e-12 ? raw[i] / nout * std::numbers::sqrt2 / 2.0 : 0.0;
        }
        double norm = 0.0;
        for (double d : dir) norm += d * d;
        if (norm < 1e-12) dir[0] = 1.0;
    }

    GeneratedDomain source = generate_domain(cfg, Domain::Source, dir, rng);
    GeneratedDomain target = generate_domain(cfg, Domain::Target, dir, rng);
    return {std::move(source), std::move(target)};
}

features::LandmarkSet synthetic_landmarks(std::size_t width, std::size_t height) {
    features::LandmarkSet lm;
    const double cx = static_cast<double>(width) / 2.0;
    const double cy = static_cast<double>(height) / 2.0;
    std::size_t n = 0;
    // 28 contour points on an ellipse, then an 8x5 inner grid.
    for (std::size_t i = 0; i < 28; ++i) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / 28.0;
        lm.points[n++] = {cx + 0.42 * static_cast<double>(width) * std::cos(t),
                          cy + 0.45 * static_cast<double>(height) * std::sin(t)};
    }
    for (std::size_t gy = 0; gy < 5; ++gy)
        for (std::size_t gx = 0; gx < 8; ++gx)
            lm.points[n++] = {cx + (static_cast<double>(gx) - 3.5) *
                                       static_cast<double>(width) * 0.09,
                              cy + (static_cast<double>(gy) - 2.0) *
                                       static_cast<double>(height) * 0.14};
    return lm;
}

namespace {

void write_class_header(std::ofstream& f, const Manifest& m) {
    f << "# classes=" << m.class_count;
    if (!m.class_names.empty()) {
        f << " names=";
        for (std::size_t i = 0; i < m.class_names.size(); ++i) {
            if (i) f << '|';
            f << m.class_names[i];
        }
    }
    f << "\n";
}

// Parses the optional `# classes=...` line; returns true if it consumed it.
bool parse_class_header(const std::string& line, Manifest& m) {
    if (line.rfind("# classes=", 0) != 0) return false;
    std::istringstream ss(line.substr(2));
    std::string tok;
    while (ss >> tok) {
        if (tok.rfind("classes=", 0) == 0)
            m.class_count = std::stoul(tok.substr(8));
        else if (tok.rfind("names=", 0) == 0) {
            std::string names = tok.substr(6);
            std::string cur;
            for (char ch : names) {
                if (ch == '|') {
                    m.class_names.push_back(cur);
                    cur.clear();
                } else {
                    cur.push_back(ch);
                }
            }
            if (!cur.empty()) m.class_names.push_back(cur);
        }
    }
    return true;
}

void finalize_classes(Manifest& m) {
    if (m.class_count == 0) {
        int max_label = -1;
        for (const SampleRecord& s : m.samples) max_label = std::max(max_label, s.label);
        m.class_count = static_cast<std::size_t>(max_label + 1);
    }
    if (m.class_names.empty())
        for (std::size_t k = 0; k < m.class_count; ++k)
            m.class_names.push_back("c" + std::to_string(k));
}

void validate_manifest(const Manifest& m) {
    std::set<std::string> ids;
    for (const SampleRecord& s : m.samples) {
        if (!ids.insert(s.id).second)
            throw ValidationError("duplicate sample id: " + s.id);
        if (s.label < -1 || (s.label >= 0 &&
                             static_cast<std::size_t>(s.label) >= m.class_count))
            throw ValidationError("label " + std::to_string(s.label) +
                                  " outside [-1, " + std::to_string(m.class_count) +
                                  ") for sample " + s.id);
        if (s.domain == Domain::Source && s.label < 0)
            throw ValidationError("source sample " + s.id + " is unlabeled");
    }
}

}  // namespace

void save_manifest(const std::string& path, const Manifest& manifest) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open manifest for writing: " + path);
    write_class_header(f, manifest);
    f << "id,path,label,domain,view\n";
    for (const SampleRecord& s : manifest.samples)
        f << csv::join({s.id, s.path, std::to_string(s.label), domain_name(s.domain),
                        std::to_string(s.view)})
          << "\n";
    if (!f) throw IoError("failed writing manifest: " + path);
}

Manifest load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open manifest: " + path);
    Manifest m;
    std::string line;
    std::size_t lineno = 0;

    if (!std::getline(f, line)) throw ParseError("empty manifest", 1);
    ++lineno;
    if (parse_class_header(line, m)) {
        if (!std::getline(f, line)) throw ParseError("missing manifest header", lineno + 1);
        ++lineno;
    }
    if (csv::split_line(line) !=
        std::vector<std::string>{"id", "path", "label", "domain", "view"})
        throw ParseError("manifest header must be id,path,label,domain,view", lineno);

    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = csv::split_line(line);
        if (fields.size() != 5)
            throw ParseError("expected 5 fields, got " + std::to_string(fields.size()),
                             lineno);
        SampleRecord rec;
        rec.id = fields[0];
        rec.path = fields[1];
        try {
            rec.label = std::stoi(fields[2]);
            rec.domain = parse_domain(fields[3]);
            rec.view = std::stoi(fields[4]);
        } catch (const ValidationError&) {
            throw ParseError("unknown domain tag '" + fields[3] + "'", lineno);
        } catch (const std::exception&) {
            throw ParseError("malformed manifest row", lineno);
        }
        m.samples.push_back(std::move(rec));
    }
    finalize_classes(m);
    validate_manifest(m);
    return m;
}

void save_feature_csv(const std::string& path, const Manifest& manifest,
                      const linalg::Matrix& features) {
    if (features.rows != manifest.samples.size())
        throw ContractError("feature rows (" + std::to_string(features.rows) +
                            ") do not match manifest size (" +
                            std::to_string(manifest.samples.size()) + ")");
    std::ofstream f(path);
    if (!f) throw IoError("cannot open feature file for writing: " + path);
    write_class_header(f, manifest);
    f << "id,label,domain,view";
    for (std::size_t d = 0; d < features.cols; ++d) f << ",f" << d;
    f << "\n";
    char buf[32];
    for (std::size_t i = 0; i < features.rows; ++i) {
        const SampleRecord& s = manifest.samples[i];
        f << csv::escape(s.id) << ',' << s.label << ',' << domain_name(s.domain) << ','
          << s.view;
        for (std::size_t d = 0; d < features.cols; ++d) {
            std::snprintf(buf, sizeof(buf), "%.17g", features(i, d));
            f << ',' << buf;
        }
        f << "\n";
    }
    if (!f) throw IoError("failed writing feature file: " + path);
}

std::pair<linalg::Matrix, Manifest> load_feature_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open feature file: " + path);
    Manifest m;
    std::string line;
    std::size_t lineno = 0;

    if (!std::getline(f, line)) throw ParseError("empty feature file", 1);
    ++lineno;
    if (parse_class_header(line, m)) {
        if (!std::getline(f, line)) throw ParseError("missing feature header", lineno + 1);
        ++lineno;
    }
    const auto header = csv::split_line(line);
    if (header.size() < 5 || header[0] != "id" || header[1] != "label" ||
        header[2] != "domain" || header[3] != "view" || header[4] != "f0")
        throw ParseError("feature header must be id,label,domain,view,f0,...", lineno);
    const std::size_t dim = header.size() - 4;

    std::vector<double> values;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = csv::split_line(line);
        if (fields.size() != 4 + dim)
            throw ParseError("expected " + std::to_string(4 + dim) + " fields, got " +
                             std::to_string(fields.size()), lineno);
        SampleRecord rec;
        rec.id = fields[0];
        try {
            rec.label = std::stoi(fields[1]);
            rec.domain = parse_domain(fields[2]);
            rec.view = std::stoi(fields[3]);
            for (std::size_t d = 0; d < dim; ++d) {
                std::size_t used = 0;
                values.push_back(std::stod(fields[4 + d], &used));
                if (used != fields[4 + d].size())
                    throw ParseError("malformed feature value", lineno);
            }
        } catch (const ParseError&) {
            throw;
        } catch (const ValidationError&) {
            throw ParseError("unknown domain tag '" + fields[2] + "'", lineno);
        } catch (const std::exception&) {
            throw ParseError("malformed feature row", lineno);
        }
        m.samples.push_back(std::move(rec));
    }
    finalize_classes(m);
    validate_manifest(m);

    linalg::Matrix x(m.samples.size(), dim);
    std::copy(values.begin(), values.end(), x.data.begin());
    return {std::move(x), std::move(m)};
}

void save_pgm(const std::string& path, const features::GrayImage& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open image for writing: " + path);
    f << "P5\n" << img.width << " " << img.height << "\n255\n";
    f.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (!f) throw IoError("failed writing image: " + path);
}

features::GrayImage load_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open image: " + path);
    std::string magic;
    f >> magic;
    if (magic != "P5") throw IoError("not a binary PGM (P5): " + path);
    std::size_t w = 0, h = 0;
    int maxval = 0;
    f >> w >> h >> maxval;
    if (!f || w == 0 || h == 0 || maxval != 255)
        throw IoError("unsupported PGM header in " + path);
    f.get();  // single whitespace after maxval
    features::GrayImage img(w, h);
    f.read(reinterpret_cast<char*>(img.pixels.data()),
           static_cast<std::streamsize>(img.pixels.size()));
    if (!f) throw IoError("truncated PGM: " + path);
    return img;
}

}  // namespace tdtl::data

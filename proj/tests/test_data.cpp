#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tdtl/dataset.hpp"
#include "tdtl/errors.hpp"
#include "tdtl/metrics.hpp"
#include "tdtl/rng.hpp"

using namespace tdtl;
using namespace tdtl::data;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

// Brute-force 1-NN used as an independent check of generated domain gaps.
std::vector<int> nn1_bruteforce(const linalg::Matrix& train, const std::vector<int>& labels,
                                const linalg::Matrix& test) {
    std::vector<int> out(test.rows);
    for (std::size_t i = 0; i < test.rows; ++i) {
        double best = 1e300;
        std::size_t arg = 0;
        for (std::size_t j = 0; j < train.rows; ++j) {
            double d = 0.0;
            for (std::size_t k = 0; k < train.cols; ++k) {
                const double diff = test(i, k) - train(j, k);
                d += diff * diff;
            }
            if (d < best) {
                best = d;
                arg = j;
            }
        }
        out[i] = labels[arg];
    }
    return out;
}

double cross_domain_nn1_accuracy(const SyntheticConfig& cfg) {
    auto [src, tgt] = generate_synthetic(cfg);
    const std::vector<int> pred =
        nn1_bruteforce(src.features, src.manifest.labels(), tgt.features);
    return accuracy(pred, tgt.manifest.labels());
}

}  // namespace

TEST_SUITE_BEGIN("data");

TEST_CASE("accuracy basics") {
    CHECK(accuracy({1, 2, 3}, {1, 2, 3}) == 100.0);
    CHECK(accuracy({0, 0}, {1, 1}) == 0.0);
    CHECK(accuracy({1, 1, 0, 0}, {1, 0, 1, 0}) == 50.0);
    CHECK_THROWS_AS(accuracy({}, {}), ContractError);
    CHECK_THROWS_AS(accuracy({1}, {1, 2}), ContractError);
}

TEST_CASE("f1_macro hand fixture") {
    // Confusion [[3,1],[2,4]]: p = (0.6, 0.8), r = (0.75, 2/3),
    // F1 = (2/3, 8/11), macro = 0.696969...
    std::vector<int> truth = {0, 0, 0, 0, 1, 1, 1, 1, 1, 1};
    std::vector<int> pred = {0, 0, 0, 1, 0, 0, 1, 1, 1, 1};
    linalg::Matrix m = confusion_matrix(pred, truth, 2);
    CHECK(m(0, 0) == 3.0);
    CHECK(m(0, 1) == 1.0);
    CHECK(m(1, 0) == 2.0);
    CHECK(m(1, 1) == 4.0);
    CHECK(f1_macro(pred, truth, 2) == doctest::Approx(0.6970).epsilon(1e-4));

    CHECK(f1_macro({0, 1, 2}, {0, 1, 2}, 3) == 1.0);
    // A class that never occurs and is never predicted contributes 0.
    CHECK(f1_macro({0, 1}, {0, 1}, 3) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("confusion matrix basics") {
    linalg::Matrix perfect = confusion_matrix({0, 1, 1, 2}, {0, 1, 1, 2}, 3);
    CHECK(perfect(0, 0) == 1.0);
    CHECK(perfect(1, 1) == 2.0);
    CHECK(perfect(2, 2) == 1.0);
    CHECK(perfect(0, 1) == 0.0);

    linalg::Matrix one = confusion_matrix({2}, {0}, 3);
    CHECK(one(0, 2) == 1.0);

    // 6-sample hand tally.
    std::vector<int> truth = {0, 0, 1, 1, 2, 2};
    std::vector<int> pred = {0, 1, 1, 1, 0, 2};
    linalg::Matrix m = confusion_matrix(pred, truth, 3);
    CHECK(m(0, 0) == 1.0);
    CHECK(m(0, 1) == 1.0);
    CHECK(m(1, 1) == 2.0);
    CHECK(m(2, 0) == 1.0);
    CHECK(m(2, 2) == 1.0);

    CHECK_THROWS_AS(confusion_matrix({3}, {0}, 3), ContractError);
}

TEST_CASE("metric identities hold on random labelings") {
    Rng rng(4);
    for (int it = 0; it < 20; ++it) {
        const std::size_t n = 5 + rng.below(50);
        const std::size_t c = 2 + rng.below(5);
        std::vector<int> pred(n), truth(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = static_cast<int>(rng.below(c));
            truth[i] = static_cast<int>(rng.below(c));
        }
        linalg::Matrix m = confusion_matrix(pred, truth, c);
        double total = 0.0;
        for (double v : m.data) total += v;
        CHECK(accuracy(pred, truth) ==
              doctest::Approx(100.0 * linalg::trace(m) / total).epsilon(1e-12));

        const double f1 = f1_macro(pred, truth, c);
        CHECK(f1 >= 0.0);
        CHECK(f1 <= 1.0);

        // Jointly permuting samples changes nothing.
        std::vector<std::size_t> perm(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        rng.shuffle(perm);
        std::vector<int> pred2(n), truth2(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred2[i] = pred[perm[i]];
            truth2[i] = truth[perm[i]];
        }
        CHECK(accuracy(pred2, truth2) == accuracy(pred, truth));
        CHECK(f1_macro(pred2, truth2, c) == doctest::Approx(f1).epsilon(1e-12));
    }
}

TEST_CASE("majority-biased predictions on imbalanced data: macro F1 < accuracy") {
    // 4:4:4:1 class ratio, classifier stuck on the majority classes.
    std::vector<int> truth, pred;
    for (int k = 0; k < 4; ++k) {
        const int n = k == 3 ? 5 : 20;
        for (int i = 0; i < n; ++i) {
            truth.push_back(k);
            pred.push_back(k == 3 ? 0 : k);  // minority class always missed
        }
    }
    const double acc = accuracy(pred, truth);
    const double f1 = f1_macro(pred, truth, 4);
    CHECK(f1 < acc / 100.0);
}

TEST_CASE("synthetic generator is deterministic") {
    SyntheticConfig cfg;
    cfg.samples_per_class_view = 5;
    auto [s1, t1] = generate_synthetic(cfg);
    auto [s2, t2] = generate_synthetic(cfg);
    CHECK(s1.features.data == s2.features.data);
    CHECK(t1.features.data == t2.features.data);
    CHECK(s1.manifest.samples.size() == t1.manifest.samples.size());
    for (std::size_t i = 0; i < s1.manifest.samples.size(); ++i)
        CHECK(s1.manifest.samples[i].id == s2.manifest.samples[i].id);
}

TEST_CASE("null shift with zero noise gives identical domains") {
    SyntheticConfig cfg;
    cfg.shift = 0.0;
    cfg.rotation_step_deg = 0.0;
    cfg.noise_std = 0.0;
    cfg.samples_per_class_view = 3;
    auto [src, tgt] = generate_synthetic(cfg);
    REQUIRE(src.features.rows == tgt.features.rows);
    for (std::size_t i = 0; i < src.features.data.size(); ++i)
        CHECK(src.features.data[i] == tgt.features.data[i]);
}

TEST_CASE("default config has a real domain gap") {
    // Same evaluation protocol with the shift switched off stands in for the
    // within-domain accuracy; the shifted run must come out strictly worse.
    double cross = 0.0, within = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SyntheticConfig cfg;
        cfg.seed = seed;
        cross += cross_domain_nn1_accuracy(cfg) / 5.0;
        cfg.shift = 0.0;
        within += cross_domain_nn1_accuracy(cfg) / 5.0;
    }
    CHECK(cross < within);
}

TEST_CASE("raw cross-domain accuracy weakly decreases with shift, on average") {
    const double shifts[] = {0.0, 2.0, 4.0, 6.0};
    double mean[4] = {0, 0, 0, 0};
    for (int s = 0; s < 4; ++s) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            SyntheticConfig cfg;
            cfg.samples_per_class_view = 10;
            cfg.shift = shifts[s];
            cfg.seed = seed;
            mean[s] += cross_domain_nn1_accuracy(cfg) / 10.0;
        }
    }
    for (int s = 0; s + 1 < 4; ++s) CHECK(mean[s] >= mean[s + 1] - 1.0);
}

TEST_CASE("class weights produce the requested imbalance") {
    SyntheticConfig cfg;
    cfg.samples_per_class_view = 5;
    cfg.class_weights = {4.0, 4.0, 4.0, 1.0};
    auto [src, tgt] = generate_synthetic(cfg);
    std::vector<int> counts(4, 0);
    for (const SampleRecord& s : src.manifest.samples) counts[s.label]++;
    CHECK(counts[0] == 40);  // 4*5 per view, 2 views
    CHECK(counts[3] == 10);
}

TEST_CASE("manifest round trip") {
    Manifest m;
    m.class_count = 3;
    m.class_names = {"a", "b", "c"};
    m.samples = {{"x1", "imgs/x1.pgm", 0, Domain::Source, 0},
                 {"x2", "", 2, Domain::Source, 1},
                 {"t1", "", -1, Domain::Target, 0}};
    const auto path = temp_file("tdtl_manifest_test.csv");
    save_manifest(path.string(), m);
    Manifest r = load_manifest(path.string());
    REQUIRE(r.samples.size() == 3);
    CHECK(r.class_count == 3);
    CHECK(r.class_names == m.class_names);
    CHECK(r.samples[0].id == "x1");
    CHECK(r.samples[0].path == "imgs/x1.pgm");
    CHECK(r.samples[1].label == 2);
    CHECK(r.samples[2].label == -1);
    CHECK(r.samples[2].domain == Domain::Target);
    std::filesystem::remove(path);
}

TEST_CASE("manifest parse and validation errors") {
    const auto path = temp_file("tdtl_manifest_bad.csv");
    {
        std::ofstream f(path);
        f << "id,path,label,domain,view\n";
        f << "a,,0,source,0\n";
        f << "b,,1,nowhere,0\n";
    }
    try {
        load_manifest(path.string());
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    {
        std::ofstream f(path);
        f << "id,path,label,domain,view\n";
        f << "a,,0,source,0\n";
        f << "a,,1,source,0\n";
    }
    CHECK_THROWS_AS(load_manifest(path.string()), ValidationError);
    {
        std::ofstream f(path);
        f << "id,path,label,domain,view\n";
        f << "a,,-1,source,0\n";  // unlabeled source
    }
    CHECK_THROWS_AS(load_manifest(path.string()), ValidationError);
    {
        std::ofstream f(path);
        f << "# classes=4\n";
        f << "id,path,label,domain,view\n";
    }
    Manifest empty = load_manifest(path.string());
    CHECK(empty.samples.empty());
    CHECK(empty.class_count == 4);
    std::filesystem::remove(path);
}

TEST_CASE("feature csv round trip is exact") {
    SyntheticConfig cfg;
    cfg.samples_per_class_view = 2;
    auto [src, tgt] = generate_synthetic(cfg);
    const auto path = temp_file("tdtl_features_test.csv");
    save_feature_csv(path.string(), src.manifest, src.features);
    auto [x, m] = load_feature_csv(path.string());
    REQUIRE(x.rows == src.features.rows);
    REQUIRE(x.cols == src.features.cols);
    CHECK(x.data == src.features.data);  // %.17g round-trips doubles exactly
    CHECK(m.class_count == src.manifest.class_count);
    for (std::size_t i = 0; i < m.samples.size(); ++i) {
        CHECK(m.samples[i].id == src.manifest.samples[i].id);
        CHECK(m.samples[i].view == src.manifest.samples[i].view);
    }
    std::filesystem::remove(path);
}

TEST_CASE("feature csv malformed rows carry line numbers") {
    const auto path = temp_file("tdtl_features_bad.csv");
    {
        std::ofstream f(path);
        f << "id,label,domain,view,f0,f1\n";
        f << "a,0,source,0,1.5,2.5\n";
        f << "b,0,source,0,1.5\n";  // short row
    }
    try {
        load_feature_csv(path.string());
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    {
        std::ofstream f(path);
        f << "id,label,domain,view,f0\n";
        f << "a,0,source,0,banana\n";
    }
    CHECK_THROWS_AS(load_feature_csv(path.string()), ParseError);
    std::filesystem::remove(path);
}

TEST_CASE("pgm round trip") {
    features::GrayImage img(20, 13);
    Rng rng(9);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    const auto path = temp_file("tdtl_test.pgm");
    save_pgm(path.string(), img);
    features::GrayImage back = load_pgm(path.string());
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.pixels == img.pixels);
    std::filesystem::remove(path);
}

TEST_CASE("image mode renders deterministic bars with landmarks available") {
    SyntheticConfig cfg;
    cfg.mode = SyntheticConfig::Mode::Image;
    cfg.samples_per_class_view = 2;
    auto [src, tgt] = generate_synthetic(cfg);
    REQUIRE(src.images.size() == src.manifest.samples.size());
    REQUIRE(tgt.images.size() == tgt.manifest.samples.size());
    CHECK(src.images[0].width == 32);
    CHECK(!src.manifest.samples[0].path.empty());

    auto [src2, tgt2] = generate_synthetic(cfg);
    CHECK(src.images[0].pixels == src2.images[0].pixels);
    CHECK(tgt.images[3].pixels == tgt2.images[3].pixels);

    features::LandmarkSet lm = synthetic_landmarks(32, 32);
    for (const features::Landmark& p : lm.points) {
        CHECK(std::isfinite(p.x));
        CHECK(std::isfinite(p.y));
    }
}

TEST_CASE("metrics csv writer emits the expected blocks") {
    MetricsReport rep;
    rep.accuracy_percent = 75.0;
    rep.f1_macro = 0.5;
    rep.confusion = linalg::Matrix::from_rows({{3, 1}, {1, 3}});
    const auto path = temp_file("tdtl_metrics_test.csv");
    save_metrics_csv(path.string(), rep);
    std::ifstream f(path);
    std::string line;
    std::getline(f, line);
    CHECK(line == "metric,value");
    std::getline(f, line);
    CHECK(line == "accuracy_percent,75.0000");
    std::getline(f, line);
    CHECK(line == "f1_macro,0.5000");
    std::getline(f, line);
    CHECK(line == "section,confusion_counts");
    std::filesystem::remove(path);
}

TEST_SUITE_END();

#pragma once
// Shared helpers and independent oracles for the unit and acceptance tests.
// The oracles deliberately avoid the library code paths they check.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vulnscape/matrix.hpp"
#include "vulnscape/rng.hpp"

namespace testing {

namespace fs = std::filesystem;

inline fs::path source_dir() { return fs::path(VULNSCAPE_SOURCE_DIR); }
inline fs::path fixture(const std::string& name) { return source_dir() / "tests" / "fixtures" / name; }
inline fs::path golden(const std::string& name) { return source_dir() / "tests" / "golden" / name; }

inline bool update_golden() {
    const char* v = std::getenv("VULNSCAPE_UPDATE_GOLDEN");
    return v != nullptr && std::string(v) == "1";
}

/// Fresh empty scratch directory under the system temp directory.
inline fs::path scratch(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("vulnscape-test-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

/// Byte comparison of every regular file in two directories (relative
/// names), skipping names in `ignore`.  Returns mismatching names.
std::vector<std::string> diff_dirs(const fs::path& a, const fs::path& b, const std::set<std::string>& ignore = {});

// Geometry oracles ------------------------------------------------------------

using XY = std::pair<double, double>;

/// Signed area and centroid of a closed ring by the shoelace formula.
inline void shoelace(const std::vector<XY>& ring, double& area, double& cx, double& cy) {
    double a = 0, x = 0, y = 0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        double cross = ring[i].first * ring[i + 1].second - ring[i + 1].first * ring[i].second;
        a += cross;
        x += (ring[i].first + ring[i + 1].first) * cross;
        y += (ring[i].second + ring[i + 1].second) * cross;
    }
    area = a / 2;
    cx = x / (3 * a);
    cy = y / (3 * a);
}

/// PNPOLY crossing count over every ring.
inline bool ray_crossing_inside(double px, double py, const std::vector<std::vector<XY>>& rings) {
    bool inside = false;
    for (const auto& ring : rings) {
        for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
            double xi = ring[i].first, yi = ring[i].second, xj = ring[j].first, yj = ring[j].second;
            if (((yi > py) != (yj > py)) && (px < (xj - xi) * (py - yi) / (yj - yi) + xi)) inside = !inside;
        }
    }
    return inside;
}

// Clustering oracles ----------------------------------------------------------

/// Minimum WCSS over every assignment of the rows to exactly k nonempty parts.
inline double exhaustive_min_wcss(const vulnscape::Matrix& pts, int k) {
    std::size_t n = pts.rows(), d = pts.cols();
    std::vector<int> a(n, 0);
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        std::vector<int> count(k, 0);
        for (int v : a) ++count[v];
        if (std::all_of(count.begin(), count.end(), [](int c) { return c > 0; })) {
            std::vector<double> mean(k * d, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t c = 0; c < d; ++c) mean[a[i] * d + c] += pts(i, c) / count[a[i]];
            double s = 0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t c = 0; c < d; ++c) s += std::pow(pts(i, c) - mean[a[i] * d + c], 2);
            best = std::min(best, s);
        }
        std::size_t pos = 0;
        while (pos < n && ++a[pos] == k) a[pos++] = 0;
        if (pos == n) break;
    }
    return best;
}

/// Agglomeration recomputing every cluster distance from member points.
/// Returns merge heights in merge order.
inline std::vector<double> naive_linkage_heights(const vulnscape::Matrix& pts, const std::string& linkage) {
    std::size_t d = pts.cols();
    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < pts.rows(); ++i) clusters.push_back({i});
    auto dist = [&](std::size_t i, std::size_t j) { return std::sqrt(vulnscape::squared_distance(pts.row(i), pts.row(j))); };
    auto cluster_distance = [&](const auto& A, const auto& B) {
        if (linkage == "ward") {
            std::vector<double> ca(d, 0), cb(d, 0);
            for (auto i : A)
                for (std::size_t c = 0; c < d; ++c) ca[c] += pts(i, c) / A.size();
            for (auto i : B)
                for (std::size_t c = 0; c < d; ++c) cb[c] += pts(i, c) / B.size();
            double s = 0;
            for (std::size_t c = 0; c < d; ++c) s += (ca[c] - cb[c]) * (ca[c] - cb[c]);
            double na = A.size(), nb = B.size();
            return std::sqrt(2 * na * nb / (na + nb) * s);
        }
        double lo = std::numeric_limits<double>::infinity(), hi = 0, sum = 0;
        for (auto i : A)
            for (auto j : B) {
                double v = dist(i, j);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                sum += v;
            }
        if (linkage == "single") return lo;
        if (linkage == "complete") return hi;
        return sum / (A.size() * B.size());
    };
    std::vector<double> heights;
    while (clusters.size() > 1) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 1;
        for (std::size_t i = 0; i < clusters.size(); ++i)
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                double v = cluster_distance(clusters[i], clusters[j]);
                if (v < best) {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        heights.push_back(best);
        clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
        clusters.erase(clusters.begin() + static_cast<long>(bj));
    }
    return heights;
}

/// Adjusted Rand index from the contingency table.
inline double adjusted_rand(const std::vector<int>& a, const std::vector<int>& b) {
    std::map<std::pair<int, int>, double> nij;
    std::map<int, double> ai, bj;
    for (std::size_t i = 0; i < a.size(); ++i) {
        nij[{a[i], b[i]}] += 1;
        ai[a[i]] += 1;
        bj[b[i]] += 1;
    }
    auto c2 = [](double x) { return x * (x - 1) / 2; };
    double sum_ij = 0, sum_a = 0, sum_b = 0;
    for (auto& [k, v] : nij) sum_ij += c2(v);
    for (auto& [k, v] : ai) sum_a += c2(v);
    for (auto& [k, v] : bj) sum_b += c2(v);
    double expected = sum_a * sum_b / c2(static_cast<double>(a.size()));
    double max_index = (sum_a + sum_b) / 2;
    if (max_index == expected) return 1.0;
    return (sum_ij - expected) / (max_index - expected);
}

/// Gaussian blobs: `per_blob` points around centres spaced `gap` apart on
/// the diagonal of R^d.
inline vulnscape::Matrix gaussian_blobs(std::uint64_t seed, int blobs, int per_blob, std::size_t d, double gap,
                                        double sd, std::vector<int>* truth = nullptr) {
    vulnscape::Rng rng(seed);
    vulnscape::Matrix m(static_cast<std::size_t>(blobs * per_blob), d);
    for (int b = 0; b < blobs; ++b)
        for (int i = 0; i < per_blob; ++i) {
            std::size_t r = static_cast<std::size_t>(b * per_blob + i);
            for (std::size_t c = 0; c < d; ++c) m(r, c) = gap * b + rng.normal(0.0, sd);
            if (truth) truth->push_back(b);
        }
    return m;
}

inline vulnscape::Matrix uniform_cloud(std::uint64_t seed, std::size_t n, std::size_t d) {
    vulnscape::Rng rng(seed);
    vulnscape::Matrix m(n, d);
    for (double& v : m.data()) v = rng.uniform();
    return m;
}

/// Fraction of points whose nearest other point shares their label.
inline double one_nn_agreement(const vulnscape::Matrix& pts, const std::vector<int>& labels) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pts.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = i;
        for (std::size_t j = 0; j < pts.rows(); ++j) {
            if (j == i) continue;
            double v = vulnscape::squared_distance(pts.row(i), pts.row(j));
            if (v < best) {
                best = v;
                arg = j;
            }
        }
        if (labels[arg] == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / pts.rows();
}

}  // namespace testing

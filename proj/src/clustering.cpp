#include "vulnscape/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vulnscape/error.hpp"
#include "vulnscape/parallel.hpp"
#include "vulnscape/rng.hpp"

namespace vulnscape {

namespace {

struct LloydResult {
    std::vector<int> labels;
    Matrix centroids;
    double wcss = 0.0;
    std::vector<double> trace;
};

Matrix plus_plus_seeds(const Matrix& points, int k, Rng& rng) {
    const std::size_t n = points.rows();
    Matrix centers(static_cast<std::size_t>(k), points.cols());
    std::size_t first = static_cast<std::size_t>(rng.index(n));
    std::copy(points.row(first).begin(), points.row(first).end(), centers.row(0).begin());

    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), centers.row(0));
    for (int c = 1; c < k; ++c) {
        double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = n - 1;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > target && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<std::size_t>(rng.index(n));
        }
        std::copy(points.row(pick).begin(), points.row(pick).end(), centers.row(c).begin());
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points.row(i), centers.row(c)));
    }
    return centers;
}

LloydResult lloyd(const Matrix& points, int k, Rng& rng, const KMeansOptions& opt) {
    const std::size_t n = points.rows(), d = points.cols();
    LloydResult res;
    res.centroids = plus_plus_seeds(points, k, rng);
    res.labels.assign(n, 0);

    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = squared_distance(points.row(i), res.centroids.row(0));
            for (int c = 1; c < k; ++c) {
                double dc = squared_distance(points.row(i), res.centroids.row(c));
                if (dc < best_d) {
                    best_d = dc;
                    best = c;
                }
            }
            res.labels[i] = best;
        }

        // Empty-cluster repair: move the point farthest from its centroid.
        std::vector<int> sizes(k, 0);
        for (int l : res.labels) ++sizes[l];
        for (int c = 0; c < k; ++c) {
            if (sizes[c] > 0) continue;
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (sizes[res.labels[i]] < 2) continue;
                double di = squared_distance(points.row(i), res.centroids.row(res.labels[i]));
                if (di > far_d) {
                    far_d = di;
                    far = i;
                }
            }
            --sizes[res.labels[far]];
            res.labels[far] = c;
            sizes[c] = 1;
            std::copy(points.row(far).begin(), points.row(far).end(), res.centroids.row(c).begin());
        }

        Matrix next(static_cast<std::size_t>(k), d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) next(res.labels[i], j) += points(i, j);
        }
        double shift = 0.0;
        for (int c = 0; c < k; ++c) {
            for (std::size_t j = 0; j < d; ++j) next(c, j) /= sizes[c];
            shift = std::max(shift, std::sqrt(squared_distance(next.row(c), res.centroids.row(c))));
        }
        res.centroids = std::move(next);
        res.wcss = within_cluster_ss(points, res.labels, res.centroids);
        res.trace.push_back(res.wcss);
        if (shift < opt.tolerance) break;
    }
    return res;
}

}  // namespace

double within_cluster_ss(const Matrix& points, std::span<const int> labels, const Matrix& centroids) {
    double s = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) s += squared_distance(points.row(i), centroids.row(labels[i]));
    return s;
}

ClusterSolution kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& options) {
    const std::size_t n = points.rows();
    if (k < 1 || static_cast<std::size_t>(k) > n) {
        throw Error(ErrorCode::KExceedsN, "k must satisfy 1 <= k <= n (k=" + std::to_string(k) +
                                              ", n=" + std::to_string(n) + ")");
    }
    if (options.restarts < 1) throw Error(ErrorCode::InvalidArgument, "restarts must be at least 1");

    std::vector<LloydResult> runs(static_cast<std::size_t>(options.restarts));
    parallel_for(runs.size(), [&](std::size_t r) {
        Rng rng(substream_seed(seed, r));
        runs[r] = lloyd(points, k, rng, options);
    });

    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r) {
        if (runs[r].wcss < runs[best].wcss) best = r;
    }
    ClusterSolution sol;
    sol.labels = std::move(runs[best].labels);
    sol.centroids = std::move(runs[best].centroids);
    sol.wcss = runs[best].wcss;
    sol.wcss_trace = std::move(runs[best].trace);
    sol.k = k;
    sol.restarts_used = options.restarts;
    sol.seed = seed;
    return sol;
}

int default_k(WaveMode mode, EmbeddingMethod method) noexcept {
    if (!mode.is_all()) return 3;
    return method == EmbeddingMethod::umap ? 4 : 6;
}

std::string_view statistic_name(RankStatistic s) noexcept { return s == RankStatistic::mean ? "mean" : "median"; }

std::optional<RankStatistic> parse_statistic(std::string_view name) noexcept {
    if (name == "mean") return RankStatistic::mean;
    if (name == "median") return RankStatistic::median;
    return std::nullopt;
}

std::vector<int> ranking_map(std::span<const double> stats) {
    std::vector<int> order(stats.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return stats[a] < stats[b]; });
    std::vector<int> map(stats.size());
    for (std::size_t rank = 0; rank < order.size(); ++rank) map[order[rank]] = static_cast<int>(rank);
    return map;
}

namespace {

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

ClusterSolution rank_labels(const ClusterSolution& solution, std::span<const std::optional<double>> values,
                            RankStatistic statistic) {
    if (values.size() != solution.labels.size()) {
        throw Error(ErrorCode::MissingScaleValue, "ranking values do not cover every point");
    }
    std::vector<std::vector<double>> members(static_cast<std::size_t>(solution.k));
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!values[i]) throw Error(ErrorCode::MissingScaleValue, "point " + std::to_string(i) + " has no ranking value");
        members[solution.labels[i]].push_back(*values[i]);
    }
    std::vector<double> stats(members.size(), std::numeric_limits<double>::infinity());
    for (std::size_t c = 0; c < members.size(); ++c) {
        if (members[c].empty()) continue;
        if (statistic == RankStatistic::mean) {
            stats[c] = std::accumulate(members[c].begin(), members[c].end(), 0.0) / members[c].size();
        } else {
            stats[c] = median_of(members[c]);
        }
    }
    auto map = ranking_map(stats);

    ClusterSolution out = solution;
    for (auto& l : out.labels) l = map[l];
    for (int c = 0; c < solution.k; ++c) {
        auto src = solution.centroids.row(c);
        std::copy(src.begin(), src.end(), out.centroids.row(map[c]).begin());
    }
    return out;
}

ClusterSolution rank_labels(const ClusterSolution& solution, const Dataset& dataset, Scale scale,
                            RankStatistic statistic) {
    std::vector<std::optional<double>> values;
    values.reserve(solution.keys.size());
    for (const auto& key : solution.keys) {
        const auto* r = dataset.find(key.neighborhood, key.wave);
        values.push_back(r ? std::optional<double>(r->value(scale)) : std::nullopt);
        if (!r) {
            throw Error(ErrorCode::MissingScaleValue, "no EDI value for (" + key.neighborhood + ", wave " +
                                                          std::to_string(key.wave) + ")");
        }
    }
    return rank_labels(solution, values, statistic);
}

int count_transitions(std::span<const int> trajectory) noexcept {
    int t = 0;
    for (std::size_t i = 1; i < trajectory.size(); ++i) t += trajectory[i] != trajectory[i - 1];
    return t;
}

std::map<std::string, int> majority_labels(const ClusterSolution& pooled) {
    // neighborhood -> label -> (votes, latest wave carrying that label)
    std::map<std::string, std::map<int, std::pair<int, int>>> tally;
    for (std::size_t i = 0; i < pooled.keys.size(); ++i) {
        auto& entry = tally[pooled.keys[i].neighborhood][pooled.labels[i]];
        entry.first += 1;
        entry.second = std::max(entry.second, pooled.keys[i].wave);
    }
    std::map<std::string, int> out;
    for (const auto& [nbhd, votes] : tally) {
        int best = -1;
        std::pair<int, int> best_score{-1, -1};
        for (const auto& [label, score] : votes) {
            if (score > best_score) {
                best_score = score;
                best = label;
            }
        }
        out[nbhd] = best;
    }
    return out;
}

StabilityReport stability(const std::map<int, ClusterSolution>& s_solutions, const ClusterSolution& a_solution) {
    if (s_solutions.empty()) throw Error(ErrorCode::EmptyInput, "no single-wave solutions");
    StabilityReport report;
    std::optional<std::vector<std::string>> reference;
    for (const auto& [wave, sol] : s_solutions) {
        report.waves.push_back(wave);
        if (sol.keys.size() != sol.labels.size()) throw Error(ErrorCode::KeyMismatch, "solution keys missing");
        std::vector<std::string> ids;
        for (const auto& k : sol.keys) ids.push_back(k.neighborhood);
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
            throw Error(ErrorCode::KeyMismatch, "wave " + std::to_string(wave) + " lists a neighborhood twice");
        }
        if (!reference) {
            reference = ids;
        } else if (*reference != ids) {
            throw Error(ErrorCode::KeyMismatch, "wave " + std::to_string(wave) + " covers a different neighborhood set");
        }
        for (std::size_t i = 0; i < sol.keys.size(); ++i) report.trajectories[sol.keys[i].neighborhood].push_back(sol.labels[i]);
    }

    report.a_labels = majority_labels(a_solution);
    for (const auto& id : *reference) {
        if (!report.a_labels.count(id)) {
            throw Error(ErrorCode::KeyMismatch, "neighborhood '" + id + "' missing from the all-wave solution");
        }
    }
    if (report.a_labels.size() != reference->size()) {
        throw Error(ErrorCode::KeyMismatch, "all-wave solution covers neighborhoods absent from the wave solutions");
    }

    std::map<int, std::pair<double, int>> acc;
    for (const auto& [id, traj] : report.trajectories) {
        int t = count_transitions(traj);
        report.transitions[id] = t;
        auto& a = acc[report.a_labels[id]];
        a.first += t;
        a.second += 1;
    }
    for (const auto& [label, a] : acc) report.a_cluster_instability[label] = a.first / a.second;
    return report;
}

std::string_view linkage_name(Linkage l) noexcept {
    switch (l) {
        case Linkage::single: return "single";
        case Linkage::complete: return "complete";
        case Linkage::average: return "average";
        case Linkage::ward: return "ward";
    }
    return "";
}

std::optional<Linkage> parse_linkage(std::string_view name) noexcept {
    if (name == "single") return Linkage::single;
    if (name == "complete") return Linkage::complete;
    if (name == "average") return Linkage::average;
    if (name == "ward") return Linkage::ward;
    return std::nullopt;
}

Dendrogram agglomerative(const Matrix& data, Linkage linkage) {
    const std::size_t n = data.rows();
    if (n < 2) throw Error(ErrorCode::TooFewPoints, "agglomerative clustering needs at least 2 points");
    Matrix dist(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) dist(i, j) = dist(j, i) = std::sqrt(squared_distance(data.row(i), data.row(j)));
    }
    std::vector<int> id(n);
    std::vector<int> size(n, 1);
    std::vector<bool> active(n, true);
    std::iota(id.begin(), id.end(), 0);

    Dendrogram out;
    out.linkage = linkage;
    out.n = static_cast<int>(n);
    for (std::size_t step = 0; step + 1 < n; ++step) {
        std::size_t bi = 0, bj = 0;
        double best = std::numeric_limits<double>::infinity();
        std::pair<int, int> best_ids{INT32_MAX, INT32_MAX};
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!active[j]) continue;
                std::pair<int, int> ids{std::min(id[i], id[j]), std::max(id[i], id[j])};
                if (dist(i, j) < best || (dist(i, j) == best && ids < best_ids)) {
                    best = dist(i, j);
                    best_ids = ids;
                    bi = i;
                    bj = j;
                }
            }
        }

        const double ni = size[bi], nj = size[bj];
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == bi || k == bj) continue;
            double dik = dist(bi, k), djk = dist(bj, k), nk = size[k];
            double merged = 0.0;
            switch (linkage) {
                case Linkage::single: merged = std::min(dik, djk); break;
                case Linkage::complete: merged = std::max(dik, djk); break;
                case Linkage::average: merged = (ni * dik + nj * djk) / (ni + nj); break;
                case Linkage::ward:
                    merged = std::sqrt(std::max(
                        0.0, ((ni + nk) * dik * dik + (nj + nk) * djk * djk - nk * best * best) / (ni + nj + nk)));
                    break;
            }
            dist(bi, k) = dist(k, bi) = merged;
        }
        out.merges.push_back({best_ids.first, best_ids.second, best, size[bi] + size[bj]});
        size[bi] += size[bj];
        id[bi] = static_cast<int>(n + step);
        active[bj] = false;
    }
    return out;
}

std::vector<int> cut_dendrogram(const Dendrogram& dendrogram, int k) {
    const int n = dendrogram.n;
    if (k < 1 || k > n) {
        throw Error(ErrorCode::KExceedsN, "k must satisfy 1 <= k <= n (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
    }
    std::vector<int> parent(static_cast<std::size_t>(2 * n - 1));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    const int applied = n - k;
    for (int m = 0; m < applied; ++m) {
        const auto& merge = dendrogram.merges[m];
        int created = n + m;
        parent[find(merge.a)] = created;
        parent[find(merge.b)] = created;
    }
    std::map<int, int> relabel;
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        int root = find(i);
        auto [it, fresh] = relabel.emplace(root, static_cast<int>(relabel.size()));
        labels[i] = it->second;
    }
    return labels;
}

}  // namespace vulnscape

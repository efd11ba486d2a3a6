#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vulnscape/domain.hpp"
#include "vulnscape/embedding.hpp"
#include "vulnscape/matrix.hpp"

namespace vulnscape {

struct ClusterSolution {
    std::vector<int> labels;
    Matrix centroids;  ///< k x d
    double wcss = 0.0;
    int k = 0;
    int restarts_used = 0;
    std::uint64_t seed = 0;
    WaveMode mode;
    std::string method;          ///< embedding method tag
    std::vector<SourceKey> keys;  ///< parallel to labels; may be empty
    /// WCSS after each Lloyd iteration of the winning restart.
    std::vector<double> wcss_trace;
};

struct KMeansOptions {
    int restarts = 50;
    int max_iterations = 300;
    double tolerance = 1e-9;  ///< largest centroid shift that counts as converged

    friend bool operator==(const KMeansOptions&, const KMeansOptions&) = default;
};

/// Best-of-restarts Lloyd with k-means++ seeding.  Throws KExceedsN unless
/// 1 <= k <= n.  Restarts run in parallel; the winner is the lowest WCSS,
/// ties to the lowest restart index.
ClusterSolution kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& options = {});

/// Sum of squared distances of each point to its own centroid.
double within_cluster_ss(const Matrix& points, std::span<const int> labels, const Matrix& centroids);

/// Default k: 3 for single-wave, 6 for t-SNE all-wave, 4 for UMAP all-wave.
int default_k(WaveMode mode, EmbeddingMethod method) noexcept;

enum class RankStatistic { mean, median };

std::string_view statistic_name(RankStatistic s) noexcept;
std::optional<RankStatistic> parse_statistic(std::string_view name) noexcept;

/// Old label -> new label so that cluster 0 has the lowest statistic; equal
/// statistics keep their original relative order.
std::vector<int> ranking_map(std::span<const double> cluster_statistics);

/// Relabels clusters in ascending order of `statistic` over the per-point
/// values.  Throws MissingScaleValue when any value is absent.
ClusterSolution rank_labels(const ClusterSolution& solution, std::span<const std::optional<double>> values,
                            RankStatistic statistic = RankStatistic::mean);

/// Same, pulling each point's value on `scale` from the dataset by key.
ClusterSolution rank_labels(const ClusterSolution& solution, const Dataset& dataset, Scale scale = Scale::two_or_more,
                            RankStatistic statistic = RankStatistic::mean);

struct StabilityReport {
    std::vector<int> waves;
    std::map<std::string, std::vector<int>> trajectories;  ///< ordered by wave
    std::map<std::string, int> transitions;
    std::map<std::string, int> a_labels;
    std::map<int, double> a_cluster_instability;
};

/// Number of adjacent unequal pairs.
int count_transitions(std::span<const int> trajectory) noexcept;

/// Reduces pooled (neighborhood, wave) labels to one label per
/// neighborhood by majority; ties go to the tied label seen at the latest wave.
std::map<std::string, int> majority_labels(const ClusterSolution& pooled);

/// Throws KeyMismatch when the wave solutions disagree on the neighborhood set.
StabilityReport stability(const std::map<int, ClusterSolution>& s_solutions, const ClusterSolution& a_solution);

enum class Linkage { single, complete, average, ward };

std::string_view linkage_name(Linkage l) noexcept;
std::optional<Linkage> parse_linkage(std::string_view name) noexcept;

struct Dendrogram {
    struct Merge {
        int a = 0;  ///< smaller cluster id
        int b = 0;
        double height = 0.0;
        int size = 0;
    };
    /// Leaves are ids 0..n-1; merge i creates id n+i.
    std::vector<Merge> merges;
    Linkage linkage = Linkage::average;
    int n = 0;
};

/// Lance-Williams agglomeration on Euclidean distances; ties go to the
/// smallest (a, b) pair of cluster ids.
Dendrogram agglomerative(const Matrix& data, Linkage linkage);

/// Labels 0..k-1 in first-appearance order after undoing the last k-1 merges.
std::vector<int> cut_dendrogram(const Dendrogram& dendrogram, int k);

}  // namespace vulnscape

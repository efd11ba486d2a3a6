#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vulnscape/domain.hpp"
#include "vulnscape/matrix.hpp"

namespace vulnscape {

/// Which rows enter a projection: one wave's neighborhoods, or every
/// (neighborhood, wave) pair pooled.
struct WaveMode {
    enum class Kind { single_wave, all_wave };
    Kind kind = Kind::all_wave;
    int wave = 0;

    static WaveMode single(int w) { return {Kind::single_wave, w}; }
    static WaveMode all() { return {Kind::all_wave, 0}; }

    bool is_all() const noexcept { return kind == Kind::all_wave; }
    /// "w6" or "all".
    std::string label() const;

    friend bool operator==(const WaveMode&, const WaveMode&) = default;
};

/// Identifies the data row behind an embedded point.
struct SourceKey {
    std::string neighborhood;
    int wave = 0;

    friend auto operator<=>(const SourceKey&, const SourceKey&) = default;
};

enum class EmbeddingMethod { tsne, umap, pca };

std::string_view method_name(EmbeddingMethod m) noexcept;
std::optional<EmbeddingMethod> parse_method(std::string_view name) noexcept;

struct EmbeddingConfig {
    EmbeddingMethod method = EmbeddingMethod::tsne;
    std::uint64_t seed = 0;

    // t-SNE
    std::optional<double> perplexity;     ///< default min(30, floor((n-1)/3))
    int iterations = 1000;
    std::optional<double> learning_rate;  ///< default max(50, n/12)
    int exaggeration_iterations = 250;
    double exaggeration = 12.0;

    // UMAP
    int n_neighbors = 15;  ///< clamped to n-1
    double min_dist = 0.1;
    int epochs = 500;
    int negative_samples = 5;

    bool standardize = true;

    friend bool operator==(const EmbeddingConfig&, const EmbeddingConfig&) = default;
};

double default_perplexity(std::size_t n) noexcept;
double default_learning_rate(std::size_t n) noexcept;

struct TracePoint {
    int iteration = 0;
    double objective = 0.0;

    friend bool operator==(const TracePoint&, const TracePoint&) = default;
};

struct Embedding {
    Matrix points;  ///< n x 2
    std::vector<SourceKey> keys;
    std::vector<TracePoint> trace;
    EmbeddingConfig config;
};

struct EmbeddingInput {
    Matrix data;  ///< n x 5 scale percentages, optionally z-scored
    std::vector<SourceKey> keys;
    std::vector<std::string> warnings;
    WaveMode mode;
};

/// Single-wave rows follow the dataset's neighborhood order; all-wave rows
/// are wave-major, then neighborhood order.  Throws MissingWave for a
/// neighborhood lacking the requested wave.  A zero-variance column under
/// standardization stays centered at 0 and adds a warning.
EmbeddingInput build_matrix(const Dataset& dataset, WaveMode mode, bool standardize = true);

/// Exact t-SNE.  `init` (n x 2) replaces the seeded random start.
Embedding tsne(const Matrix& data, const EmbeddingConfig& config, const Matrix* init = nullptr);

/// Simplified UMAP: exact kNN graph, random seeded start.
Embedding umap(const Matrix& data, const EmbeddingConfig& config, const Matrix* init = nullptr);

/// Top-2 principal components; the largest-magnitude loading of each
/// component is made positive.
Embedding pca(const Matrix& data);

/// Dispatch on config.method and attach the input keys.
Embedding embed(const EmbeddingInput& input, const EmbeddingConfig& config);

namespace tsne_detail {

struct Affinities {
    Matrix conditional;  ///< row i holds p(j|i)
    std::vector<double> beta;
    std::vector<double> entropy;  ///< natural-log Shannon entropy per row
};

/// Per-point Gaussian bandwidths by bisection on entropy (tolerance 1e-5).
Affinities conditional_affinities(const Matrix& data, double perplexity);
/// (P + P^T) / 2n, floored at 1e-12.
Matrix joint_probabilities(const Matrix& conditional);
double kl_divergence(const Matrix& joint, const Matrix& points);

}  // namespace tsne_detail

namespace umap_detail {

struct Edge {
    std::size_t head = 0;
    std::size_t tail = 0;
    double weight = 0.0;
};

/// Symmetrized (a + b - ab) fuzzy graph, both directions, sorted by (head, tail).
std::vector<Edge> fuzzy_graph(const Matrix& data, int n_neighbors);

struct CurveParams {
    double a = 0.0;
    double b = 0.0;
};

/// Least-squares fit of 1 / (1 + a d^2b) to the min_dist-offset exponential.
CurveParams fit_ab(double min_dist, double spread = 1.0);

}  // namespace umap_detail

/// Symmetric eigen-decomposition by cyclic Jacobi rotations.  Eigenvalues
/// descending; eigenvectors are the columns of `vectors`.
struct SymmetricEigen {
    std::vector<double> values;
    Matrix vectors;
};
SymmetricEigen jacobi_eigen(const Matrix& symmetric);

}  // namespace vulnscape

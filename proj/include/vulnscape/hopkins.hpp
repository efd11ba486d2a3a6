#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vulnscape/matrix.hpp"

namespace vulnscape {

/// Distances are raised to the data dimension (classical statistic) or to 1.
enum class HopkinsExponent { dimension, one };

std::string_view exponent_name(HopkinsExponent e) noexcept;
std::optional<HopkinsExponent> parse_exponent(std::string_view name) noexcept;

/// Null variance behind the p-value of H_av.  `single` uses Var(Beta(m, m))
/// of one draw; `repeats` divides it by the repeat count, which ignores that
/// every repeat reuses the same data set.
enum class NullVariance { single, repeats };
std::string_view null_variance_name(NullVariance v) noexcept;
std::optional<NullVariance> parse_null_variance(std::string_view name) noexcept;

struct HopkinsConfig {
    double sample_fraction = 0.3;
    int min_sample = 3;
    int repeats = 100;
    std::uint64_t seed = 0;
    HopkinsExponent exponent = HopkinsExponent::dimension;
    NullVariance null_variance = NullVariance::single;

    /// m = max(min_sample, round(sample_fraction * n)), capped at n.
    int sample_size(std::size_t n) const;
    /// Throws InvalidArgument for out-of-range fields.
    void validate() const;

    friend bool operator==(const HopkinsConfig&, const HopkinsConfig&) = default;
};

/// H = sum u^e / (sum u^e + sum w^e).  u: uniform-probe to data NN
/// distances; w: sampled-point to rest-of-data NN distances.
double hopkins_from_distances(std::span<const double> u, std::span<const double> w, double exponent);

/// One draw of the statistic.  Constant dimensions are dropped before
/// sampling the bounding box.  Throws TooFewPoints (n < 4) or
/// DegenerateCloud (all points identical).
double hopkins_once(const Matrix& points, const HopkinsConfig& config, std::uint64_t repeat_seed);

/// Variance of a single H under complete spatial randomness: Beta(m, m).
double hopkins_null_variance(int m) noexcept;

/// Two-sided normal-approximation p-value of a repeat mean against 0.5.
double hopkins_p_value(double h_av, int m, int repeats, NullVariance variance = NullVariance::single) noexcept;

struct HopkinsAverage {
    std::vector<double> values;  ///< one H per repeat
    double h_av = 0.0;
    double p_value = 1.0;
    int m = 0;
};

/// Repeats use seeds config.seed + r, so the result does not depend on the
/// worker count.
HopkinsAverage hopkins_average(const Matrix& points, const HopkinsConfig& config);

struct ClusterHopkins {
    int label = 0;
    std::size_t size = 0;
    bool skipped = false;  ///< fewer than 4 points, or all points identical
    std::string skip_reason;
    HopkinsAverage result;
};

struct HopkinsReport {
    std::vector<ClusterHopkins> per_cluster;  ///< ascending label
    HopkinsAverage overall;
    HopkinsConfig config;

    /// Mean H_av over clusters that were not skipped.
    std::optional<double> mean_cluster_h() const;
};

HopkinsReport hopkins_per_cluster(const Matrix& points, std::span<const int> labels, const HopkinsConfig& config);

}  // namespace vulnscape

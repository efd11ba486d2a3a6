#include "vulnscape/hopkins.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "vulnscape/error.hpp"
#include "vulnscape/parallel.hpp"
#include "vulnscape/rng.hpp"

namespace vulnscape {

std::string_view exponent_name(HopkinsExponent e) noexcept { return e == HopkinsExponent::dimension ? "d" : "one"; }

std::optional<HopkinsExponent> parse_exponent(std::string_view name) noexcept {
    if (name == "d" || name == "dimension") return HopkinsExponent::dimension;
    if (name == "one" || name == "1") return HopkinsExponent::one;
    return std::nullopt;
}

std::string_view null_variance_name(NullVariance v) noexcept {
    return v == NullVariance::single ? "single" : "repeats";
}

std::optional<NullVariance> parse_null_variance(std::string_view name) noexcept {
    if (name == "single") return NullVariance::single;
    if (name == "repeats") return NullVariance::repeats;
    return std::nullopt;
}

int HopkinsConfig::sample_size(std::size_t n) const {
    int m = std::max(min_sample, static_cast<int>(std::lround(sample_fraction * static_cast<double>(n))));
    return std::min<int>(m, static_cast<int>(n));
}

void HopkinsConfig::validate() const {
    if (!(sample_fraction > 0.0 && sample_fraction <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "sample_fraction must lie in (0, 1]");
    }
    if (min_sample < 1) throw Error(ErrorCode::InvalidArgument, "min_sample must be at least 1");
    if (repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeats must be at least 1");
}

double hopkins_from_distances(std::span<const double> u, std::span<const double> w, double exponent) {
    double su = 0.0, sw = 0.0;
    for (double x : u) su += std::pow(x, exponent);
    for (double x : w) sw += std::pow(x, exponent);
    if (!(su + sw > 0.0)) return 0.5;
    return su / (su + sw);
}

double hopkins_once(const Matrix& points, const HopkinsConfig& config, std::uint64_t repeat_seed) {
    const std::size_t n = points.rows();
    if (n < 4) throw Error(ErrorCode::TooFewPoints, "Hopkins statistic needs at least 4 points, got " + std::to_string(n));
    config.validate();

    std::vector<std::size_t> dims;
    std::vector<double> lo, hi;
    for (std::size_t c = 0; c < points.cols(); ++c) {
        double mn = std::numeric_limits<double>::infinity(), mx = -mn;
        for (std::size_t i = 0; i < n; ++i) {
            mn = std::min(mn, points(i, c));
            mx = std::max(mx, points(i, c));
        }
        if (mx > mn) {
            dims.push_back(c);
            lo.push_back(mn);
            hi.push_back(mx);
        }
    }
    if (dims.empty()) throw Error(ErrorCode::DegenerateCloud, "all points are identical");

    const std::size_t d = dims.size();
    Matrix data(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < d; ++c) data(i, c) = points(i, dims[c]);
    }

    const int m = config.sample_size(n);
    Rng rng(repeat_seed);

    // partial Fisher-Yates for m indices without replacement
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int s = 0; s < m; ++s) {
        std::size_t j = static_cast<std::size_t>(s) + static_cast<std::size_t>(rng.index(n - static_cast<std::size_t>(s)));
        std::swap(idx[static_cast<std::size_t>(s)], idx[j]);
    }

    std::vector<double> u(static_cast<std::size_t>(m)), w(static_cast<std::size_t>(m));
    std::vector<double> probe(d);
    for (int s = 0; s < m; ++s) {
        for (std::size_t c = 0; c < d; ++c) probe[c] = rng.uniform(lo[c], hi[c]);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) best = std::min(best, squared_distance(probe, data.row(i)));
        u[static_cast<std::size_t>(s)] = std::sqrt(best);
    }
    for (int s = 0; s < m; ++s) {
        std::size_t self = idx[static_cast<std::size_t>(s)];
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (i != self) best = std::min(best, squared_distance(data.row(self), data.row(i)));
        }
        w[static_cast<std::size_t>(s)] = std::sqrt(best);
    }
    double e = config.exponent == HopkinsExponent::dimension ? static_cast<double>(d) : 1.0;
    return hopkins_from_distances(u, w, e);
}

double hopkins_null_variance(int m) noexcept { return 1.0 / (4.0 * (2.0 * m + 1.0)); }

double hopkins_p_value(double h_av, int m, int repeats, NullVariance variance) noexcept {
    double v = hopkins_null_variance(m);
    if (variance == NullVariance::repeats) v /= repeats;
    double se = std::sqrt(v);
    double z = (h_av - 0.5) / se;
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

HopkinsAverage hopkins_average(const Matrix& points, const HopkinsConfig& config) {
    config.validate();
    HopkinsAverage out;
    out.values.resize(static_cast<std::size_t>(config.repeats));
    parallel_for(out.values.size(), [&](std::size_t r) { out.values[r] = hopkins_once(points, config, config.seed + r); });
    out.h_av = std::accumulate(out.values.begin(), out.values.end(), 0.0) / static_cast<double>(out.values.size());
    out.m = config.sample_size(points.rows());
    out.p_value = hopkins_p_value(out.h_av, out.m, config.repeats, config.null_variance);
    return out;
}

std::optional<double> HopkinsReport::mean_cluster_h() const {
    double s = 0.0;
    int count = 0;
    for (const auto& c : per_cluster) {
        if (c.skipped) continue;
        s += c.result.h_av;
        ++count;
    }
    if (count == 0) return std::nullopt;
    return s / count;
}

HopkinsReport hopkins_per_cluster(const Matrix& points, std::span<const int> labels, const HopkinsConfig& config) {
    if (labels.size() != points.rows()) throw Error(ErrorCode::InvalidArgument, "labels must match point count");
    HopkinsReport report;
    report.config = config;
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
    for (const auto& [label, rows] : members) {
        ClusterHopkins c;
        c.label = label;
        c.size = rows.size();
        if (rows.size() < 4) {
            c.skipped = true;
            c.skip_reason = std::string(code_name(ErrorCode::TooFewPoints));
        } else {
            try {
                c.result = hopkins_average(points.select_rows(rows), config);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::DegenerateCloud) throw;
                c.skipped = true;
                c.skip_reason = std::string(code_name(e.code()));
            }
        }
        report.per_cluster.push_back(std::move(c));
    }
    report.overall = hopkins_average(points, config);
    return report;
}

}  // namespace vulnscape

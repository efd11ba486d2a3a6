#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vulnscape/domain.hpp"

namespace vulnscape::geo {

struct Point {
    double x = 0.0;  ///< longitude
    double y = 0.0;  ///< latitude

    friend bool operator==(const Point&, const Point&) = default;
};

/// Closed ring: first point equals last, at least 4 points.
using Ring = std::vector<Point>;

struct Polygon {
    Ring exterior;
    std::vector<Ring> holes;

    /// Throws DegenerateGeometry when a ring is open or has fewer than 4 points.
    void validate() const;
};

/// A region is one polygon or a multi-polygon.
using Region = std::vector<Polygon>;

/// Region id -> geometry.  Ordered, so iteration is lexicographic by id.
using GeometrySet = std::map<std::string, Region>;

enum class Location { outside, boundary, inside };

/// Area-weighted (shoelace) centroid; holes subtract.  Planar coordinates.
/// Throws DegenerateGeometry for zero net area.
Point centroid(const Polygon& poly);
Point centroid(const Region& region);

/// Net area (exterior minus holes).
double area(const Polygon& poly);

/// Even-odd classification over all rings.  Points on an edge are `boundary`.
Location locate(const Point& p, const Polygon& poly);
Location locate(const Point& p, const Region& region);

/// Unassigned DAs map to nullopt.
using Assignment = std::map<std::string, std::optional<std::string>>;

/// Each DA goes to the neighborhood strictly containing its centroid.  A
/// centroid on a boundary (and strictly inside none) goes to the
/// lexicographically first neighborhood touching it.  Throws
/// OverlapAmbiguity when the centroid is strictly inside two neighborhoods.
Assignment assign_da(const GeometrySet& da_geo, const GeometrySet& nbhd_geo);

struct AggregateResult {
    /// One profile per neighborhood that received at least one DA, ordered by id.
    std::vector<CensusProfile> profiles;
    /// var_ids whose neighborhood values are approximations (medians).
    std::set<std::string> approximate;
    /// Count-kind totals over unassigned DAs.
    std::map<std::string, double> unassigned_counts;
};

/// Rolls DA values up to neighborhoods by kind: counts sum; percent, rate,
/// mean and median take a population-weighted mean (medians flagged
/// approximate); ratios are recomputed from linked numerator/denominator
/// counts, else weighted.  Missing cells drop out per variable.  Throws
/// ZeroPopulationWeight when a weighted variable has values but no weight.
AggregateResult aggregate(const Assignment& assignments, const DaTable& table, const Catalog& catalog,
                          std::string_view weight_var = "population");

/// FeatureCollection with Polygon/MultiPolygon geometries; `properties.id`
/// names the region.
GeometrySet parse_geojson(std::string_view text);
GeometrySet load_geojson(const std::string& path);

}  // namespace vulnscape::geo

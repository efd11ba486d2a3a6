#include "vulnscape/geo.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "vulnscape/csv.hpp"
#include "vulnscape/error.hpp"
#include "vulnscape/parallel.hpp"

namespace vulnscape::geo {

namespace {

void check_ring(const Ring& ring) {
    if (ring.size() < 4) throw Error(ErrorCode::DegenerateGeometry, "ring has fewer than 4 points");
    if (!(ring.front() == ring.back())) throw Error(ErrorCode::DegenerateGeometry, "ring is not closed");
}

struct RingMoments {
    double area = 0.0;  // signed
    double cx = 0.0;
    double cy = 0.0;
};

RingMoments ring_moments(const Ring& ring) {
    RingMoments m;
    // Shift to the first vertex to limit cancellation on real coordinates.
    const Point o = ring.front();
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        double x0 = ring[i].x - o.x, y0 = ring[i].y - o.y;
        double x1 = ring[i + 1].x - o.x, y1 = ring[i + 1].y - o.y;
        double cross = x0 * y1 - x1 * y0;
        m.area += cross;
        m.cx += (x0 + x1) * cross;
        m.cy += (y0 + y1) * cross;
    }
    m.area *= 0.5;
    if (m.area != 0.0) {
        m.cx = m.cx / (6.0 * m.area) + o.x;
        m.cy = m.cy / (6.0 * m.area) + o.y;
    }
    return m;
}

bool on_segment(const Point& p, const Point& a, const Point& b) {
    double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    double scale = (std::abs(b.x - a.x) + std::abs(b.y - a.y)) * (std::abs(p.x - a.x) + std::abs(p.y - a.y));
    if (std::abs(cross) > 1e-12 * scale) return false;
    return p.x >= std::min(a.x, b.x) && p.x <= std::max(a.x, b.x) && p.y >= std::min(a.y, b.y) &&
           p.y <= std::max(a.y, b.y);
}

// Returns -1 when p lies on the ring, else the parity of crossings of a
// rightward ray.
int ring_crossings(const Point& p, const Ring& ring) {
    int parity = 0;
    for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
        const Point& a = ring[i];
        const Point& b = ring[j];
        if (on_segment(p, a, b)) return -1;
        if ((a.y > p.y) != (b.y > p.y)) {
            double x_at = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if (p.x < x_at) parity ^= 1;
        }
    }
    return parity;
}

}  // namespace

void Polygon::validate() const {
    check_ring(exterior);
    for (const auto& h : holes) check_ring(h);
}

double area(const Polygon& poly) {
    double a = std::abs(ring_moments(poly.exterior).area);
    for (const auto& h : poly.holes) a -= std::abs(ring_moments(h).area);
    return a;
}

Point centroid(const Region& region) {
    double total = 0.0, sx = 0.0, sy = 0.0;
    for (const auto& poly : region) {
        poly.validate();
        auto ext = ring_moments(poly.exterior);
        double a = std::abs(ext.area);
        total += a;
        sx += a * ext.cx;
        sy += a * ext.cy;
        for (const auto& h : poly.holes) {
            auto hm = ring_moments(h);
            double ha = std::abs(hm.area);
            total -= ha;
            sx -= ha * hm.cx;
            sy -= ha * hm.cy;
        }
    }
    if (!(total > 0.0)) throw Error(ErrorCode::DegenerateGeometry, "geometry has zero area");
    return {sx / total, sy / total};
}

Point centroid(const Polygon& poly) { return centroid(Region{poly}); }

Location locate(const Point& p, const Polygon& poly) {
    int parity = 0;
    int c = ring_crossings(p, poly.exterior);
    if (c < 0) return Location::boundary;
    parity ^= c;
    for (const auto& h : poly.holes) {
        c = ring_crossings(p, h);
        if (c < 0) return Location::boundary;
        parity ^= c;
    }
    return parity ? Location::inside : Location::outside;
}

Location locate(const Point& p, const Region& region) {
    bool boundary = false;
    for (const auto& poly : region) {
        auto loc = locate(p, poly);
        if (loc == Location::inside) return Location::inside;
        boundary = boundary || loc == Location::boundary;
    }
    return boundary ? Location::boundary : Location::outside;
}

Assignment assign_da(const GeometrySet& da_geo, const GeometrySet& nbhd_geo) {
    std::vector<const std::pair<const std::string, Region>*> das;
    for (const auto& entry : da_geo) das.push_back(&entry);
    std::vector<std::optional<std::string>> result(das.size());

    parallel_for(das.size(), [&](std::size_t i) {
        const auto& [da_id, region] = *das[i];
        Point c = centroid(region);
        std::optional<std::string> inside;
        std::optional<std::string> touching;
        for (const auto& [nbhd_id, nbhd] : nbhd_geo) {
            auto loc = locate(c, nbhd);
            if (loc == Location::inside) {
                if (inside) {
                    throw Error(ErrorCode::OverlapAmbiguity, "centroid of DA '" + da_id + "' lies inside both '" +
                                                                 *inside + "' and '" + nbhd_id + "'");
                }
                inside = nbhd_id;
            } else if (loc == Location::boundary && !touching) {
                touching = nbhd_id;
            }
        }
        result[i] = inside ? inside : touching;
    });

    Assignment out;
    for (std::size_t i = 0; i < das.size(); ++i) out.emplace(das[i]->first, std::move(result[i]));
    return out;
}

AggregateResult aggregate(const Assignment& assignments, const DaTable& table, const Catalog& catalog,
                          std::string_view weight_var) {
    for (const auto& var : table.var_ids) {
        if (!catalog.find(var)) throw Error(ErrorCode::UnknownVariable, "census column '" + var + "' not in catalog");
    }
    auto weight_col = table.column(weight_var);

    // neighborhood -> DA row indices
    std::map<std::string, std::vector<std::size_t>> members;
    std::vector<std::size_t> unassigned;
    for (std::size_t r = 0; r < table.da_ids.size(); ++r) {
        auto it = assignments.find(table.da_ids[r]);
        if (it == assignments.end() || !it->second) {
            unassigned.push_back(r);
        } else {
            members[*it->second].push_back(r);
        }
    }

    auto weight_of = [&](std::size_t r) {
        if (!weight_col) return 0.0;
        const auto& w = table.values[r][*weight_col];
        return w ? *w : 0.0;
    };

    AggregateResult out;
    for (std::size_t c = 0; c < table.var_ids.size(); ++c) {
        const auto* var = catalog.find(table.var_ids[c]);
        if (var->kind == CensusKind::count) {
            double sum = 0.0;
            for (auto r : unassigned) {
                if (table.values[r][c]) sum += *table.values[r][c];
            }
            out.unassigned_counts[var->var_id] = sum;
        }
        if (var->kind == CensusKind::median) out.approximate.insert(var->var_id);
    }

    for (const auto& [nbhd, rows] : members) {
        CensusProfile profile;
        profile.neighborhood = nbhd;
        auto sum_of = [&](std::size_t col) -> std::optional<double> {
            std::optional<double> sum;
            for (auto r : rows) {
                if (table.values[r][col]) sum = sum.value_or(0.0) + *table.values[r][col];
            }
            return sum;
        };

        for (std::size_t c = 0; c < table.var_ids.size(); ++c) {
            const auto* var = catalog.find(table.var_ids[c]);
            std::optional<double> value;
            if (var->kind == CensusKind::count) {
                value = sum_of(c);
            } else if (var->kind == CensusKind::ratio && !var->numerator.empty()) {
                auto num_col = table.column(var->numerator);
                auto den_col = table.column(var->denominator);
                if (num_col && den_col) {
                    auto num = sum_of(*num_col);
                    auto den = sum_of(*den_col);
                    if (num && den && *den != 0.0) value = *num / *den;
                }
            } else {
                value = std::nullopt;
            }

            bool weighted = var->kind != CensusKind::count &&
                            !(var->kind == CensusKind::ratio && !var->numerator.empty() &&
                              table.column(var->numerator) && table.column(var->denominator));
            if (weighted) {
                double wsum = 0.0, acc = 0.0;
                bool any = false;
                for (auto r : rows) {
                    if (!table.values[r][c]) continue;
                    any = true;
                    double w = weight_of(r);
                    wsum += w;
                    acc += w * *table.values[r][c];
                }
                if (any) {
                    if (!(wsum > 0.0)) {
                        throw Error(ErrorCode::ZeroPopulationWeight, "neighborhood '" + nbhd + "' has zero '" +
                                                                         std::string(weight_var) + "' weight for '" +
                                                                         var->var_id + "'");
                    }
                    value = acc / wsum;
                }
            }
            profile.values[var->var_id] = value;
        }
        out.profiles.push_back(std::move(profile));
    }
    return out;
}

namespace {

Ring parse_ring(const nlohmann::json& coords) {
    Ring ring;
    for (const auto& pt : coords) {
        if (!pt.is_array() || pt.size() < 2) throw Error(ErrorCode::Parse, "GeoJSON position must have 2 coordinates");
        ring.push_back({pt[0].get<double>(), pt[1].get<double>()});
    }
    return ring;
}

Polygon parse_polygon(const nlohmann::json& coords) {
    if (!coords.is_array() || coords.empty()) throw Error(ErrorCode::Parse, "GeoJSON polygon has no rings");
    Polygon poly;
    poly.exterior = parse_ring(coords[0]);
    for (std::size_t i = 1; i < coords.size(); ++i) poly.holes.push_back(parse_ring(coords[i]));
    poly.validate();
    return poly;
}

}  // namespace

GeometrySet parse_geojson(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("invalid GeoJSON: ") + e.what());
    }
    if (doc.value("type", "") != "FeatureCollection" || !doc.contains("features")) {
        throw Error(ErrorCode::Parse, "GeoJSON root must be a FeatureCollection");
    }
    GeometrySet out;
    try {
        for (const auto& feature : doc["features"]) {
            const auto& props = feature.at("properties");
            const auto& idv = props.at("id");
            std::string id = idv.is_string() ? idv.get<std::string>() : idv.dump();
            const auto& geom = feature.at("geometry");
            auto type = geom.at("type").get<std::string>();
            Region region;
            if (type == "Polygon") {
                region.push_back(parse_polygon(geom.at("coordinates")));
            } else if (type == "MultiPolygon") {
                for (const auto& p : geom.at("coordinates")) region.push_back(parse_polygon(p));
            } else {
                throw Error(ErrorCode::Parse, "unsupported geometry type '" + type + "' for '" + id + "'");
            }
            if (!out.emplace(id, std::move(region)).second) {
                throw Error(ErrorCode::DuplicateKey, "duplicate region id '" + id + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("malformed GeoJSON feature: ") + e.what());
    }
    return out;
}

GeometrySet load_geojson(const std::string& path) { return parse_geojson(csv::read_text(path)); }

}  // namespace vulnscape::geo

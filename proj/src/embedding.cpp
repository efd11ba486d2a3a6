#include "vulnscape/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vulnscape/error.hpp"
#include "vulnscape/parallel.hpp"
#include "vulnscape/rng.hpp"

namespace vulnscape {

std::string WaveMode::label() const { return is_all() ? "all" : "w" + std::to_string(wave); }

std::string_view method_name(EmbeddingMethod m) noexcept {
    switch (m) {
        case EmbeddingMethod::tsne: return "tsne";
        case EmbeddingMethod::umap: return "umap";
        case EmbeddingMethod::pca: return "pca";
    }
    return "";
}

std::optional<EmbeddingMethod> parse_method(std::string_view name) noexcept {
    if (name == "tsne" || name == "t-sne") return EmbeddingMethod::tsne;
    if (name == "umap") return EmbeddingMethod::umap;
    if (name == "pca") return EmbeddingMethod::pca;
    return std::nullopt;
}

double default_perplexity(std::size_t n) noexcept {
    return std::min(30.0, std::floor((static_cast<double>(n) - 1.0) / 3.0));
}

double default_learning_rate(std::size_t n) noexcept { return std::max(50.0, static_cast<double>(n) / 12.0); }

EmbeddingInput build_matrix(const Dataset& dataset, WaveMode mode, bool standardize) {
    EmbeddingInput in;
    in.mode = mode;
    std::vector<const EdiRecord*> rows;
    if (mode.is_all()) {
        for (int w : dataset.waves()) {
            for (const auto& n : dataset.neighborhoods) {
                if (const auto* r = dataset.find(n.id, w)) rows.push_back(r);
            }
        }
    } else {
        for (const auto& n : dataset.neighborhoods) {
            const auto* r = dataset.find(n.id, mode.wave);
            if (!r) {
                throw Error(ErrorCode::MissingWave,
                            "neighborhood '" + n.id + "' has no record for wave " + std::to_string(mode.wave));
            }
            rows.push_back(r);
        }
    }
    if (rows.empty()) throw Error(ErrorCode::EmptyInput, "no EDI records for mode " + mode.label());

    in.data = Matrix(rows.size(), kDomainScaleCount);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        in.keys.push_back({rows[i]->neighborhood.id, rows[i]->wave.index()});
        for (std::size_t s = 0; s < kDomainScaleCount; ++s) in.data(i, s) = rows[i]->percent[s];
    }

    if (standardize) {
        const double n = static_cast<double>(rows.size());
        for (std::size_t s = 0; s < kDomainScaleCount; ++s) {
            double mean = 0.0;
            for (std::size_t i = 0; i < rows.size(); ++i) mean += in.data(i, s);
            mean /= n;
            double var = 0.0;
            for (std::size_t i = 0; i < rows.size(); ++i) var += (in.data(i, s) - mean) * (in.data(i, s) - mean);
            var /= n;
            double sd = std::sqrt(var);
            bool constant = !(sd > 0.0);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                in.data(i, s) = constant ? 0.0 : (in.data(i, s) - mean) / sd;
            }
            if (constant) {
                in.warnings.push_back("column '" + std::string(scale_name(static_cast<Scale>(s))) +
                                      "' has zero variance; left centered at 0");
            }
        }
    }
    return in;
}

// ---------------------------------------------------------------------------
// t-SNE

namespace tsne_detail {

namespace {

Matrix squared_distances(const Matrix& data) {
    const std::size_t n = data.rows();
    Matrix d(n, n);
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = 0; j < n; ++j) d(i, j) = i == j ? 0.0 : squared_distance(data.row(i), data.row(j));
    });
    return d;
}

}  // namespace

Affinities conditional_affinities(const Matrix& data, double perplexity) {
    const std::size_t n = data.rows();
    const double target = std::log(perplexity);
    constexpr double tol = 1e-5;
    Matrix dist = squared_distances(data);

    Affinities out{Matrix(n, n), std::vector<double>(n), std::vector<double>(n)};
    parallel_for(n, [&](std::size_t i) {
        double dmin = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) dmin = std::min(dmin, dist(i, j));
        }
        auto row = out.conditional.row(i);
        double beta = 1.0;
        double lo = 0.0;
        double hi = std::numeric_limits<double>::infinity();
        double entropy = 0.0;
        for (int step = 0; step < 1000; ++step) {
            double sum = 0.0, weighted = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) {
                    row[j] = 0.0;
                    continue;
                }
                double shifted = dist(i, j) - dmin;
                row[j] = std::exp(-beta * shifted);
                sum += row[j];
                weighted += shifted * row[j];
            }
            entropy = std::log(sum) + beta * weighted / sum;
            for (std::size_t j = 0; j < n; ++j) row[j] /= sum;
            double diff = entropy - target;
            if (std::abs(diff) <= tol) break;
            if (diff > 0.0) {
                lo = beta;
                beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
        }
        out.beta[i] = beta;
        out.entropy[i] = entropy;
    });
    return out;
}

Matrix joint_probabilities(const Matrix& conditional) {
    const std::size_t n = conditional.rows();
    Matrix p(n, n);
    const double denom = 2.0 * static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            p(i, j) = i == j ? 0.0 : std::max((conditional(i, j) + conditional(j, i)) / denom, 1e-12);
        }
    }
    return p;
}

double kl_divergence(const Matrix& joint, const Matrix& points) {
    const std::size_t n = points.rows();
    std::vector<double> row_sum(n, 0.0);
    Matrix num(n, n);
    parallel_for(n, [&](std::size_t i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            num(i, j) = 1.0 / (1.0 + squared_distance(points.row(i), points.row(j)));
            s += num(i, j);
        }
        row_sum[i] = s;
    });
    double z = 0.0;
    for (double s : row_sum) z += s;
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double q = std::max(num(i, j) / z, 1e-12);
            kl += joint(i, j) * std::log(joint(i, j) / q);
        }
    }
    return kl;
}

}  // namespace tsne_detail

namespace {

void center_columns(Matrix& y) {
    for (std::size_t c = 0; c < y.cols(); ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < y.rows(); ++i) mean += y(i, c);
        mean /= static_cast<double>(y.rows());
        for (std::size_t i = 0; i < y.rows(); ++i) y(i, c) -= mean;
    }
}

void check_init(const Matrix* init, std::size_t n) {
    if (init && (init->rows() != n || init->cols() != 2)) {
        throw Error(ErrorCode::InvalidArgument, "initial layout must be n x 2");
    }
}

}  // namespace

Embedding tsne(const Matrix& data, const EmbeddingConfig& config, const Matrix* init) {
    const std::size_t n = data.rows();
    if (n < 4) throw Error(ErrorCode::TooFewPoints, "t-SNE needs at least 4 points, got " + std::to_string(n));
    check_init(init, n);
    const double max_perplexity = (static_cast<double>(n) - 1.0) / 3.0;
    const double perplexity = config.perplexity.value_or(default_perplexity(n));
    if (!(perplexity > 0.0)) throw Error(ErrorCode::InvalidArgument, "perplexity must be positive");
    if (perplexity > max_perplexity) {
        throw Error(ErrorCode::PerplexityTooLarge, "perplexity " + std::to_string(perplexity) +
                                                       " exceeds (n-1)/3 = " + std::to_string(max_perplexity));
    }
    const double eta = config.learning_rate.value_or(default_learning_rate(n));
    if (!(eta > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");

    auto aff = tsne_detail::conditional_affinities(data, perplexity);
    Matrix p = tsne_detail::joint_probabilities(aff.conditional);

    Embedding out;
    out.config = config;
    out.config.perplexity = perplexity;
    out.config.learning_rate = eta;

    Matrix y(n, 2);
    if (init) {
        y = *init;
    } else {
        Rng rng(config.seed);
        for (auto& v : y.data()) v = rng.normal(0.0, 1e-4);
    }

    Matrix update(n, 2, 0.0);
    Matrix gains(n, 2, 1.0);
    Matrix grad(n, 2);
    Matrix num(n, n);
    std::vector<double> row_sum(n);

    for (int iter = 0; iter < config.iterations; ++iter) {
        const bool early = iter < config.exaggeration_iterations;
        const double exaggeration = early ? config.exaggeration : 1.0;
        const double momentum = early ? 0.5 : 0.8;

        parallel_for(n, [&](std::size_t i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) {
                    num(i, j) = 0.0;
                    continue;
                }
                num(i, j) = 1.0 / (1.0 + squared_distance(y.row(i), y.row(j)));
                s += num(i, j);
            }
            row_sum[i] = s;
        });
        double z = 0.0;
        for (double s : row_sum) z += s;

        parallel_for(n, [&](std::size_t i) {
            double g0 = 0.0, g1 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                double mult = (exaggeration * p(i, j) - num(i, j) / z) * num(i, j);
                g0 += mult * (y(i, 0) - y(j, 0));
                g1 += mult * (y(i, 1) - y(j, 1));
            }
            grad(i, 0) = 4.0 * g0;
            grad(i, 1) = 4.0 * g1;
        });

        for (std::size_t k = 0; k < grad.data().size(); ++k) {
            double g = grad.data()[k];
            if (!std::isfinite(g)) {
                throw Error(ErrorCode::NonFiniteGradient, "non-finite t-SNE gradient at iteration " +
                                                              std::to_string(iter) + ", point " +
                                                              std::to_string(k / 2));
            }
            double& gain = gains.data()[k];
            double& upd = update.data()[k];
            gain = (g > 0.0) != (upd > 0.0) ? gain + 0.2 : gain * 0.8;
            gain = std::max(gain, 0.01);
            upd = momentum * upd - eta * gain * g;
            y.data()[k] += upd;
        }
        center_columns(y);

        if ((iter + 1) % 50 == 0 || iter + 1 == config.iterations) {
            out.trace.push_back({iter + 1, tsne_detail::kl_divergence(p, y)});
        }
    }
    out.points = std::move(y);
    return out;
}

// ---------------------------------------------------------------------------
// UMAP

namespace umap_detail {

std::vector<Edge> fuzzy_graph(const Matrix& data, int n_neighbors) {
    const std::size_t n = data.rows();
    const std::size_t k = static_cast<std::size_t>(n_neighbors);
    const double target = std::log2(static_cast<double>(k));

    // directed memberships, row-major by head
    std::vector<std::vector<std::pair<std::size_t, double>>> directed(n);
    parallel_for(n, [&](std::size_t i) {
        std::vector<std::pair<double, std::size_t>> d;
        d.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) d.emplace_back(std::sqrt(squared_distance(data.row(i), data.row(j))), j);
        }
        std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
        d.resize(k);

        double rho = 0.0;
        for (const auto& [dist, j] : d) {
            if (dist > 0.0) {
                rho = dist;
                break;
            }
        }
        auto membership_sum = [&](double sigma) {
            double s = 0.0;
            for (const auto& [dist, j] : d) s += std::exp(-std::max(0.0, dist - rho) / sigma);
            return s;
        };
        double lo = 0.0, hi = std::numeric_limits<double>::infinity(), sigma = 1.0;
        for (int step = 0; step < 200; ++step) {
            double s = membership_sum(sigma);
            if (std::abs(s - target) < 1e-5) break;
            if (s > target) {
                hi = sigma;
                sigma = 0.5 * (lo + hi);
            } else {
                lo = sigma;
                sigma = std::isinf(hi) ? sigma * 2.0 : 0.5 * (lo + hi);
            }
        }
        for (const auto& [dist, j] : d) directed[i].emplace_back(j, std::exp(-std::max(0.0, dist - rho) / sigma));
    });

    Matrix w(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [j, v] : directed[i]) w(i, j) = v;
    }
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double a = w(i, j), b = w(j, i);
            double u = a + b - a * b;
            if (u > 0.0) edges.push_back({i, j, u});
        }
    }
    return edges;
}

CurveParams fit_ab(double min_dist, double spread) {
    constexpr int kSamples = 300;
    std::vector<double> xs(kSamples), ys(kSamples);
    for (int i = 0; i < kSamples; ++i) {
        xs[i] = 3.0 * spread * i / (kSamples - 1);
        ys[i] = xs[i] < min_dist ? 1.0 : std::exp(-(xs[i] - min_dist) / spread);
    }
    auto residual_ss = [&](double a, double b) {
        double ss = 0.0;
        for (int i = 0; i < kSamples; ++i) {
            double f = 1.0 / (1.0 + a * std::pow(xs[i], 2.0 * b));
            ss += (f - ys[i]) * (f - ys[i]);
        }
        return ss;
    };

    // Levenberg-Marquardt on (a, b).
    double a = 1.0, b = 1.0, lambda = 1e-3;
    double ss = residual_ss(a, b);
    for (int iter = 0; iter < 500; ++iter) {
        double jtj00 = 0, jtj01 = 0, jtj11 = 0, jtr0 = 0, jtr1 = 0;
        for (int i = 0; i < kSamples; ++i) {
            double x = xs[i];
            if (x <= 0.0) continue;
            double x2b = std::pow(x, 2.0 * b);
            double denom = 1.0 + a * x2b;
            double f = 1.0 / denom;
            double r = f - ys[i];
            double da = -x2b / (denom * denom);
            double db = -a * x2b * 2.0 * std::log(x) / (denom * denom);
            jtj00 += da * da;
            jtj01 += da * db;
            jtj11 += db * db;
            jtr0 += da * r;
            jtr1 += db * r;
        }
        bool improved = false;
        while (lambda < 1e12) {
            double m00 = jtj00 * (1.0 + lambda), m11 = jtj11 * (1.0 + lambda);
            double det = m00 * m11 - jtj01 * jtj01;
            double step_a = -(m11 * jtr0 - jtj01 * jtr1) / det;
            double step_b = -(m00 * jtr1 - jtj01 * jtr0) / det;
            double na = a + step_a, nb = b + step_b;
            if (na > 0.0 && nb > 0.0) {
                double nss = residual_ss(na, nb);
                if (nss < ss) {
                    bool converged = ss - nss < 1e-15 * (1.0 + ss);
                    a = na;
                    b = nb;
                    ss = nss;
                    lambda = std::max(lambda / 10.0, 1e-12);
                    improved = !converged;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if (!improved) break;
    }
    return {a, b};
}

}  // namespace umap_detail

namespace {

double clip(double v) { return std::clamp(v, -4.0, 4.0); }

double umap_cross_entropy(const Matrix& y, const Matrix& w, const umap_detail::CurveParams& ab) {
    const std::size_t n = y.rows();
    double ce = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double d2 = squared_distance(y.row(i), y.row(j));
            double v = 1.0 / (1.0 + ab.a * std::pow(d2, ab.b));
            v = std::clamp(v, 1e-12, 1.0 - 1e-12);
            double mu = w(i, j);
            if (mu > 0.0) ce += mu * std::log(mu / v);
            if (mu < 1.0) ce += (1.0 - mu) * std::log((1.0 - mu) / (1.0 - v));
        }
    }
    return ce;
}

}  // namespace

Embedding umap(const Matrix& data, const EmbeddingConfig& config, const Matrix* init) {
    const std::size_t n = data.rows();
    if (config.n_neighbors < 2) throw Error(ErrorCode::InvalidArgument, "n_neighbors must be at least 2");
    if (n < 3) throw Error(ErrorCode::TooFewPoints, "UMAP needs more points than neighbors, got " + std::to_string(n));
    check_init(init, n);
    if (!(config.min_dist > 0.0)) throw Error(ErrorCode::InvalidArgument, "min_dist must be positive");
    if (config.epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be positive");
    const int k = std::min<int>(config.n_neighbors, static_cast<int>(n) - 1);

    auto edges = umap_detail::fuzzy_graph(data, k);
    auto ab = umap_detail::fit_ab(config.min_dist);

    Matrix membership(n, n, 0.0);
    double max_w = 0.0;
    for (const auto& e : edges) {
        membership(e.head, e.tail) = e.weight;
        max_w = std::max(max_w, e.weight);
    }

    // Edges too weak to be sampled once over the run are dropped.
    const double epochs = static_cast<double>(config.epochs);
    std::vector<umap_detail::Edge> active;
    for (const auto& e : edges) {
        if (e.weight >= max_w / epochs) active.push_back(e);
    }
    std::vector<double> per_sample(active.size()), next_sample(active.size());
    std::vector<double> per_negative(active.size()), next_negative(active.size());
    const double neg_rate = static_cast<double>(std::max(config.negative_samples, 0));
    for (std::size_t e = 0; e < active.size(); ++e) {
        per_sample[e] = max_w / active[e].weight;
        next_sample[e] = per_sample[e];
        per_negative[e] = neg_rate > 0.0 ? per_sample[e] / neg_rate : std::numeric_limits<double>::infinity();
        next_negative[e] = per_negative[e];
    }

    Rng rng(config.seed);
    Matrix y(n, 2);
    if (init) {
        y = *init;
    } else {
        for (auto& v : y.data()) v = rng.uniform(-10.0, 10.0);
    }

    Embedding out;
    out.config = config;
    out.config.n_neighbors = k;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double alpha = 1.0 - static_cast<double>(epoch) / epochs;
        const double now = static_cast<double>(epoch);
        for (std::size_t e = 0; e < active.size(); ++e) {
            if (next_sample[e] > now) continue;
            const std::size_t j = active[e].head;
            const std::size_t t = active[e].tail;
            double d2 = squared_distance(y.row(j), y.row(t));
            if (d2 > 0.0) {
                double coeff = -2.0 * ab.a * ab.b * std::pow(d2, ab.b - 1.0) / (1.0 + ab.a * std::pow(d2, ab.b));
                for (std::size_t c = 0; c < 2; ++c) {
                    double g = clip(coeff * (y(j, c) - y(t, c)));
                    y(j, c) += g * alpha;
                    y(t, c) -= g * alpha;
                }
            }
            next_sample[e] += per_sample[e];

            const int n_neg = static_cast<int>((now - next_negative[e]) / per_negative[e]);
            for (int s = 0; s < n_neg; ++s) {
                std::size_t other = static_cast<std::size_t>(rng.index(n));
                if (other == j) continue;
                double nd2 = squared_distance(y.row(j), y.row(other));
                double coeff = nd2 > 0.0 ? 2.0 * ab.b / ((0.001 + nd2) * (1.0 + ab.a * std::pow(nd2, ab.b))) : 0.0;
                for (std::size_t c = 0; c < 2; ++c) {
                    double g = coeff > 0.0 ? clip(coeff * (y(j, c) - y(other, c))) : 4.0;
                    y(j, c) += g * alpha;
                }
            }
            if (n_neg > 0) next_negative[e] += n_neg * per_negative[e];
        }
        if ((epoch + 1) % 50 == 0 || epoch + 1 == config.epochs) {
            for (double v : y.data()) {
                if (!std::isfinite(v)) {
                    throw Error(ErrorCode::NonFiniteGradient, "non-finite UMAP layout at epoch " + std::to_string(epoch));
                }
            }
            out.trace.push_back({epoch + 1, umap_cross_entropy(y, membership, ab)});
        }
    }
    out.points = std::move(y);
    return out;
}

// ---------------------------------------------------------------------------
// PCA

SymmetricEigen jacobi_eigen(const Matrix& symmetric) {
    const std::size_t d = symmetric.rows();
    Matrix a = symmetric;
    Matrix v(d, d, 0.0);
    for (std::size_t i = 0; i < d; ++i) v(i, i) = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) off += a(p, q) * a(p, q);
        }
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                if (a(p, q) == 0.0) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t k = 0; k < d; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
    SymmetricEigen out{std::vector<double>(d), Matrix(d, d)};
    for (std::size_t c = 0; c < d; ++c) {
        out.values[c] = a(order[c], order[c]);
        for (std::size_t r = 0; r < d; ++r) out.vectors(r, c) = v(r, order[c]);
    }
    return out;
}

Embedding pca(const Matrix& data) {
    const std::size_t n = data.rows(), d = data.cols();
    if (n < 2) throw Error(ErrorCode::TooFewPoints, "PCA needs at least 2 points");
    Matrix centered = data;
    center_columns(centered);

    Matrix cov(d, d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = 0; q < d; ++q) cov(p, q) += centered(i, p) * centered(i, q);
        }
    }
    for (auto& v : cov.data()) v /= static_cast<double>(n - 1);

    auto eig = jacobi_eigen(cov);
    const double top = eig.values.empty() ? 0.0 : std::max(eig.values[0], 0.0);

    Embedding out;
    out.config.method = EmbeddingMethod::pca;
    out.config.standardize = false;
    out.points = Matrix(n, 2, 0.0);
    for (std::size_t c = 0; c < std::min<std::size_t>(2, d); ++c) {
        if (!(eig.values[c] > 1e-12 * top) || top <= 0.0) continue;
        std::size_t largest = 0;
        for (std::size_t r = 1; r < d; ++r) {
            if (std::abs(eig.vectors(r, c)) > std::abs(eig.vectors(largest, c))) largest = r;
        }
        double sign = eig.vectors(largest, c) < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t r = 0; r < d; ++r) s += centered(i, r) * eig.vectors(r, c);
            out.points(i, c) = sign * s;
        }
    }
    return out;
}

Embedding embed(const EmbeddingInput& input, const EmbeddingConfig& config) {
    Embedding out;
    switch (config.method) {
        case EmbeddingMethod::tsne: out = tsne(input.data, config); break;
        case EmbeddingMethod::umap: out = umap(input.data, config); break;
        case EmbeddingMethod::pca: {
            out = pca(input.data);
            auto cfg = config;
            out.config = cfg;
            break;
        }
    }
    out.keys = input.keys;
    return out;
}

}  // namespace vulnscape

#include "vulnscape/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>
#include <set>

#include "vulnscape/error.hpp"
#include "vulnscape/parallel.hpp"

namespace vulnscape::stats {

namespace bm = boost::math;

namespace {

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double f_sf(double f, double d1, double d2) {
    if (std::isinf(f)) return 0.0;
    if (f <= 0.0) return 1.0;
    return bm::cdf(bm::complement(bm::fisher_f(d1, d2), f));
}

double chi2_sf(double x, double df) {
    if (x <= 0.0) return 1.0;
    return bm::cdf(bm::complement(bm::chi_squared(df), x));
}

double t_two_sided(double t, double df) {
    if (std::isinf(t)) return 0.0;
    return 2.0 * bm::cdf(bm::complement(bm::students_t(df), std::abs(t)));
}

double poly(std::initializer_list<double> c, double x) {
    double result = 0.0, power = 1.0;
    for (double coef : c) {
        result += coef * power;
        power *= x;
    }
    return result;
}

TestResult shapiro_wilk(std::vector<double> x) {
    const std::size_t n = x.size();
    if (n > 5000) throw Error(ErrorCode::InvalidArgument, "Shapiro-Wilk is defined for n <= 5000");
    std::sort(x.begin(), x.end());
    if (!(x.back() - x.front() > 0.0)) throw Error(ErrorCode::DegenerateInput, "constant sample");

    const double an = static_cast<double>(n);
    const std::size_t half = n / 2;
    std::vector<double> a(half + 1, 0.0);  // 1-based, positive, weights the upper order statistics
    const bm::normal std_normal;
    if (n == 3) {
        a[1] = std::sqrt(0.5);
    } else {
        double summ2 = 0.0;
        std::vector<double> m(half + 1);
        for (std::size_t i = 1; i <= half; ++i) {
            m[i] = bm::quantile(std_normal, (static_cast<double>(i) - 0.375) / (an + 0.25));
            summ2 += m[i] * m[i];
        }
        summ2 *= 2.0;
        const double ssumm2 = std::sqrt(summ2);
        const double rsn = 1.0 / std::sqrt(an);
        const double a1 = poly({0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056}, rsn) - m[1] / ssumm2;
        std::size_t first = 0;
        double fac = 0.0;
        if (n > 5) {
            first = 3;
            const double a2 = -m[2] / ssumm2 + poly({0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633}, rsn);
            fac = std::sqrt((summ2 - 2.0 * m[1] * m[1] - 2.0 * m[2] * m[2]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
            a[2] = a2;
        } else {
            first = 2;
            fac = std::sqrt((summ2 - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1));
        }
        a[1] = a1;
        for (std::size_t i = first; i <= half; ++i) a[i] = -m[i] / fac;
    }

    // W is the squared correlation of the ordered sample with the coefficients.
    std::vector<double> coef(n, 0.0);
    for (std::size_t i = 1; i <= half; ++i) {
        coef[i - 1] = -a[i];
        coef[n - i] = a[i];
    }
    const double range = x.back() - x.front();
    const double xm = mean_of(x) / range;
    const double cm = mean_of(coef);
    double ssa = 0.0, ssx = 0.0, sax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double ai = coef[i] - cm;
        double xi = x[i] / range - xm;
        ssa += ai * ai;
        ssx += xi * xi;
        sax += ai * xi;
    }
    const double ssassx = std::sqrt(ssa * ssx);
    const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    double w = 1.0 - w1;

    if (n == 3) {
        w = std::max(w, 0.75);
        double p = 1.90985931710274 * (std::asin(std::sqrt(w)) - 1.04719755119660);
        return {w, std::clamp(p, 0.0, 1.0)};
    }

    double y = std::log(w1);
    const double lx = std::log(an);
    double mu = 0.0, sigma = 0.0;
    if (n <= 11) {
        const double gamma = poly({-2.273, 0.459}, an);
        if (y >= gamma) return {w, 1e-99};
        y = -std::log(gamma - y);
        mu = poly({0.544, -0.39978, 0.025054, -6.714e-4}, an);
        sigma = std::exp(poly({1.3822, -0.77857, 0.062767, -0.0020322}, an));
    } else {
        mu = poly({-1.5861, -0.31082, -0.083751, 0.0038915}, lx);
        sigma = std::exp(poly({-0.4803, -0.082676, 0.0030302}, lx));
    }
    double p = bm::cdf(bm::complement(bm::normal(mu, sigma), y));
    return {w, p};
}

TestResult anderson_darling(std::vector<double> x) {
    const std::size_t n = x.size();
    std::sort(x.begin(), x.end());
    const double mu = mean_of(x);
    double ss = 0.0;
    for (double v : x) ss += (v - mu) * (v - mu);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) throw Error(ErrorCode::DegenerateInput, "constant sample");

    const bm::normal std_normal;
    auto log_cdf = [&](double z) { return std::log(std::max(bm::cdf(std_normal, z), 1e-300)); };
    auto log_sf = [&](double z) { return std::log(std::max(bm::cdf(bm::complement(std_normal, z)), 1e-300)); };
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double zi = (x[i] - mu) / sd;
        double zr = (x[n - 1 - i] - mu) / sd;
        s += (2.0 * static_cast<double>(i) + 1.0) * (log_cdf(zi) + log_sf(zr));
    }
    const double an = static_cast<double>(n);
    const double a2 = -an - s / an;
    const double a = a2 * (1.0 + 0.75 / an + 2.25 / (an * an));
    double p = 0.0;
    if (a >= 0.6) {
        p = std::exp(1.2937 - 5.709 * a + 0.0186 * a * a);
    } else if (a >= 0.34) {
        p = std::exp(0.9177 - 4.279 * a - 1.38 * a * a);
    } else if (a >= 0.2) {
        p = 1.0 - std::exp(-8.318 + 42.796 * a - 59.938 * a * a);
    } else {
        p = 1.0 - std::exp(-13.436 + 101.14 * a - 223.73 * a * a);
    }
    return {a, std::clamp(p, 0.0, 1.0)};
}

}  // namespace

AnovaResult anova_oneway(const Groups& groups) {
    if (groups.size() < 2) throw Error(ErrorCode::SampleTooSmall, "ANOVA needs at least 2 groups");
    std::size_t total = 0;
    double grand = 0.0;
    for (const auto& g : groups) {
        if (g.size() < 2) throw Error(ErrorCode::SampleTooSmall, "ANOVA needs at least 2 values per group");
        total += g.size();
        for (double v : g) grand += v;
    }
    grand /= static_cast<double>(total);

    double ssb = 0.0, ssw = 0.0;
    for (const auto& g : groups) {
        double m = mean_of(g);
        ssb += static_cast<double>(g.size()) * (m - grand) * (m - grand);
        for (double v : g) ssw += (v - m) * (v - m);
    }
    AnovaResult out;
    out.df_between = static_cast<int>(groups.size()) - 1;
    out.df_within = static_cast<int>(total - groups.size());
    const double msb = ssb / out.df_between;
    const double msw = ssw / out.df_within;
    if (!(msw > 0.0) && !(msb > 0.0)) throw Error(ErrorCode::DegenerateInput, "zero within- and between-group variance");
    out.f = msw > 0.0 ? msb / msw : std::numeric_limits<double>::infinity();
    out.p = f_sf(out.f, out.df_between, out.df_within);
    return out;
}

TestResult kruskal_wallis(const Groups& groups) {
    if (groups.size() < 2) throw Error(ErrorCode::SampleTooSmall, "Kruskal-Wallis needs at least 2 groups");
    std::vector<std::pair<double, std::size_t>> pooled;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty()) throw Error(ErrorCode::SampleTooSmall, "Kruskal-Wallis group " + std::to_string(g) + " is empty");
        for (double v : groups[g]) pooled.emplace_back(v, g);
    }
    const std::size_t n = pooled.size();
    if (n < 3) throw Error(ErrorCode::SampleTooSmall, "Kruskal-Wallis needs at least 3 values");
    std::sort(pooled.begin(), pooled.end());

    std::vector<double> rank_sum(groups.size(), 0.0);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && pooled[j].first == pooled[i].first) ++j;
        double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        for (std::size_t k = i; k < j; ++k) rank_sum[pooled[k].second] += avg_rank;
        i = j;
    }
    const double an = static_cast<double>(n);
    const double correction = 1.0 - tie_term / (an * an * an - an);
    if (!(correction > 0.0)) throw Error(ErrorCode::AllValuesTied, "all values are tied");

    double h = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) h += rank_sum[g] * rank_sum[g] / static_cast<double>(groups[g].size());
    h = 12.0 / (an * (an + 1.0)) * h - 3.0 * (an + 1.0);
    h /= correction;
    h = std::max(h, 0.0);
    return {h, chi2_sf(h, static_cast<double>(groups.size() - 1))};
}

std::string_view normality_name(NormalityTest t) noexcept {
    return t == NormalityTest::shapiro_wilk ? "shapiro_wilk" : "anderson_darling";
}

std::optional<NormalityTest> parse_normality(std::string_view name) noexcept {
    if (name == "shapiro_wilk") return NormalityTest::shapiro_wilk;
    if (name == "anderson_darling") return NormalityTest::anderson_darling;
    return std::nullopt;
}

std::string_view homogeneity_name(HomogeneityTest t) noexcept {
    return t == HomogeneityTest::brown_forsythe ? "brown_forsythe" : "bartlett";
}

std::optional<HomogeneityTest> parse_homogeneity(std::string_view name) noexcept {
    if (name == "brown_forsythe") return HomogeneityTest::brown_forsythe;
    if (name == "bartlett") return HomogeneityTest::bartlett;
    return std::nullopt;
}

TestResult normality(std::span<const double> sample, NormalityTest method) {
    if (sample.size() < 3) throw Error(ErrorCode::SampleTooSmall, "normality tests need at least 3 values");
    std::vector<double> x(sample.begin(), sample.end());
    return method == NormalityTest::shapiro_wilk ? shapiro_wilk(std::move(x)) : anderson_darling(std::move(x));
}

TestResult homogeneity(const Groups& groups, HomogeneityTest method) {
    if (groups.size() < 2) throw Error(ErrorCode::SampleTooSmall, "homogeneity tests need at least 2 groups");
    for (const auto& g : groups) {
        if (g.size() < 2) throw Error(ErrorCode::SampleTooSmall, "homogeneity tests need at least 2 values per group");
    }
    if (method == HomogeneityTest::brown_forsythe) {
        Groups deviations;
        for (const auto& g : groups) {
            double med = median_of(g);
            std::vector<double> z;
            for (double v : g) z.push_back(std::abs(v - med));
            deviations.push_back(std::move(z));
        }
        auto r = anova_oneway(deviations);
        return {r.f, r.p};
    }

    const double k = static_cast<double>(groups.size());
    double total = 0.0, pooled = 0.0, log_sum = 0.0, inv_sum = 0.0;
    for (const auto& g : groups) {
        double m = mean_of(g);
        double ss = 0.0;
        for (double v : g) ss += (v - m) * (v - m);
        double df = static_cast<double>(g.size() - 1);
        double var = ss / df;
        if (!(var > 0.0)) throw Error(ErrorCode::DegenerateInput, "Bartlett's test needs non-constant groups");
        total += static_cast<double>(g.size());
        pooled += ss;
        log_sum += df * std::log(var);
        inv_sum += 1.0 / df;
    }
    const double df_within = total - k;
    pooled /= df_within;
    const double stat = (df_within * std::log(pooled) - log_sum) / (1.0 + (inv_sum - 1.0 / df_within) / (3.0 * (k - 1.0)));
    return {stat, chi2_sf(stat, k - 1.0)};
}

PearsonResult pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "pearson inputs differ in length");
    if (x.size() < 3) throw Error(ErrorCode::SampleTooSmall, "pearson needs at least 3 pairs");
    const double mx = mean_of(x), my = mean_of(y);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) throw Error(ErrorCode::ConstantInput, "pearson input is constant");
    PearsonResult out;
    out.n = x.size();
    out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double df = static_cast<double>(x.size()) - 2.0;
    if (std::abs(out.r) >= 1.0) {
        out.p = 0.0;
    } else {
        double t = out.r * std::sqrt(df / (1.0 - out.r * out.r));
        out.p = t_two_sided(t, df);
    }
    return out;
}

TestResult pooled_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw Error(ErrorCode::SampleTooSmall, "t test needs 2 values per group");
    const double ma = mean_of(a), mb = mean_of(b);
    double ss = 0.0;
    for (double v : a) ss += (v - ma) * (v - ma);
    for (double v : b) ss += (v - mb) * (v - mb);
    const double df = static_cast<double>(a.size() + b.size() - 2);
    const double sp2 = ss / df;
    const double se = std::sqrt(sp2 * (1.0 / static_cast<double>(a.size()) + 1.0 / static_cast<double>(b.size())));
    if (!(se > 0.0)) throw Error(ErrorCode::DegenerateInput, "zero pooled variance");
    const double t = (ma - mb) / se;
    return {t, t_two_sided(t, df)};
}

std::vector<double> benjamini_hochberg(std::span<const double> p) {
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
    std::vector<double> adjusted(m);
    double running = 1.0;
    for (std::size_t r = m; r-- > 0;) {
        double q = p[order[r]] * static_cast<double>(m) / static_cast<double>(r + 1);
        running = std::min(running, q);
        adjusted[order[r]] = std::min(running, 1.0);
    }
    return adjusted;
}

std::string_view correction_name(Correction c) noexcept {
    return c == Correction::none ? "none" : "benjamini_hochberg";
}

std::optional<Correction> parse_correction(std::string_view name) noexcept {
    if (name == "none") return Correction::none;
    if (name == "benjamini_hochberg" || name == "bh") return Correction::benjamini_hochberg;
    return std::nullopt;
}

void ScreeningConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie strictly between 0 and 1");
}

std::string_view test_name(TestUsed t) noexcept {
    switch (t) {
        case TestUsed::anova: return "anova";
        case TestUsed::kruskal_wallis: return "kruskal_wallis";
        case TestUsed::skipped: return "skipped";
    }
    return "";
}

std::string_view check_name(Check c) noexcept {
    switch (c) {
        case Check::pass: return "pass";
        case Check::fail: return "fail";
        case Check::untestable: return "untestable";
    }
    return "";
}

std::string VariableTestResult::flags() const {
    if (test_used == TestUsed::skipped) return "skipped=" + skip_reason;
    std::string out = "homog=" + std::string(check_name(homogeneity)) + ";norm=";
    for (std::size_t i = 0; i < normality.size(); ++i) {
        if (i) out += '|';
        out += check_name(normality[i]);
    }
    return out;
}

std::vector<VariableTestResult> screen(const std::vector<CensusProfile>& profiles, const std::map<std::string, int>& labels,
                                       const ScreeningConfig& config) {
    config.validate();
    std::map<std::string, const CensusProfile*> by_id;
    for (const auto& p : profiles) by_id[p.neighborhood] = &p;
    for (const auto& [nbhd, label] : labels) {
        if (!by_id.count(nbhd)) throw Error(ErrorCode::LabelWithoutProfile, "neighborhood '" + nbhd + "' has no census profile");
    }
    std::set<int> label_set;
    for (const auto& [nbhd, label] : labels) label_set.insert(label);
    std::vector<int> cluster_order(label_set.begin(), label_set.end());
    std::map<int, std::size_t> slot;
    for (std::size_t i = 0; i < cluster_order.size(); ++i) slot[cluster_order[i]] = i;

    std::set<std::string> var_set;
    for (const auto& p : profiles) {
        for (const auto& [var, v] : p.values) var_set.insert(var);
    }
    std::vector<std::string> vars(var_set.begin(), var_set.end());

    std::vector<VariableTestResult> results(vars.size());
    parallel_for(vars.size(), [&](std::size_t vi) {
        VariableTestResult& res = results[vi];
        res.var_id = vars[vi];
        Groups groups(cluster_order.size());
        for (const auto& [nbhd, label] : labels) {
            if (auto v = by_id[nbhd]->get(vars[vi])) groups[slot[label]].push_back(*v);
        }
        for (const auto& g : groups) res.group_sizes.push_back(g.size());
        res.statistic = std::numeric_limits<double>::quiet_NaN();

        auto skip = [&](ErrorCode code) {
            res.test_used = TestUsed::skipped;
            res.skip_reason = std::string(code_name(code));
        };
        std::size_t usable = 0;
        for (const auto& g : groups) usable += g.size();
        if (usable == 0) return skip(ErrorCode::EmptyInput);
        if (groups.size() < 2) return skip(ErrorCode::SampleTooSmall);
        for (const auto& g : groups) {
            if (g.size() < 2) return skip(ErrorCode::SampleTooSmall);
        }
        double first = groups[0][0];
        bool constant = true;
        for (const auto& g : groups) {
            for (double v : g) constant = constant && v == first;
        }
        if (constant) return skip(ErrorCode::DegenerateInput);

        try {
            res.homogeneity = homogeneity(groups, config.homogeneity_test).p >= config.alpha ? Check::pass : Check::fail;
        } catch (const Error&) {
            res.homogeneity = Check::fail;
        }
        bool normal_ok = true;
        for (const auto& g : groups) {
            Check c = Check::untestable;
            if (g.size() >= 3) {
                try {
                    c = normality(g, config.normality_test).p >= config.alpha ? Check::pass : Check::fail;
                } catch (const Error&) {
                    c = Check::fail;
                }
            }
            normal_ok = normal_ok && c == Check::pass;
            res.normality.push_back(c);
        }
        if (res.homogeneity == Check::pass && normal_ok) {
            auto a = anova_oneway(groups);
            res.test_used = TestUsed::anova;
            res.statistic = a.f;
            res.p_value = a.p;
        } else {
            auto k = kruskal_wallis(groups);
            res.test_used = TestUsed::kruskal_wallis;
            res.statistic = k.statistic;
            res.p_value = k.p;
        }
    });

    std::vector<std::size_t> tested;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i].test_used != TestUsed::skipped) tested.push_back(i);
    }
    std::vector<double> p;
    for (auto i : tested) p.push_back(results[i].p_value);
    auto adjusted = config.correction == Correction::benjamini_hochberg ? benjamini_hochberg(p) : p;
    for (std::size_t t = 0; t < tested.size(); ++t) {
        auto& r = results[tested[t]];
        r.p_adjusted = adjusted[t];
        r.significant = r.p_adjusted < config.alpha;
    }

    std::stable_sort(results.begin(), results.end(), [](const VariableTestResult& a, const VariableTestResult& b) {
        bool sa = a.test_used == TestUsed::skipped, sb = b.test_used == TestUsed::skipped;
        if (sa != sb) return sb;
        if (a.p_value != b.p_value) return a.p_value < b.p_value;
        return a.var_id < b.var_id;
    });
    return results;
}

}  // namespace vulnscape::stats

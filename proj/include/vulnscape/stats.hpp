#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vulnscape/domain.hpp"

namespace vulnscape::stats {

using Groups = std::vector<std::vector<double>>;

struct AnovaResult {
    double f = 0.0;
    double p = 1.0;
    int df_between = 0;
    int df_within = 0;
};

struct TestResult {
    double statistic = 0.0;
    double p = 1.0;
};

/// Classical one-way F = MSB / MSW.  Needs >= 2 groups of >= 2 values
/// (SampleTooSmall); throws DegenerateInput when both mean squares vanish.
AnovaResult anova_oneway(const Groups& groups);

/// Rank-based H with tie correction, chi-square(k-1) p-value.  Needs >= 2
/// non-empty groups and N >= 3; throws AllValuesTied when every value ties.
TestResult kruskal_wallis(const Groups& groups);

enum class NormalityTest { shapiro_wilk, anderson_darling };
enum class HomogeneityTest { brown_forsythe, bartlett };

std::string_view normality_name(NormalityTest t) noexcept;
std::optional<NormalityTest> parse_normality(std::string_view name) noexcept;
std::string_view homogeneity_name(HomogeneityTest t) noexcept;
std::optional<HomogeneityTest> parse_homogeneity(std::string_view name) noexcept;

/// Shapiro-Wilk W (Royston 1995 approximation, 3 <= n <= 5000) or
/// Anderson-Darling A*^2 with estimated mean and variance.  Throws
/// SampleTooSmall for n < 3 and DegenerateInput for a constant sample.
TestResult normality(std::span<const double> sample, NormalityTest method = NormalityTest::shapiro_wilk);

/// Brown-Forsythe (median-centred Levene) F test or Bartlett's chi-square.
TestResult homogeneity(const Groups& groups, HomogeneityTest method = HomogeneityTest::brown_forsythe);

struct PearsonResult {
    double r = 0.0;
    double p = 1.0;
    std::size_t n = 0;
};

/// Sample correlation with a Student t(n-2) p-value.  Throws ConstantInput
/// when either side is constant.
PearsonResult pearson(std::span<const double> x, std::span<const double> y);

/// Two-sided pooled-variance two-sample t statistic.
TestResult pooled_t_test(std::span<const double> a, std::span<const double> b);

/// Benjamini-Hochberg adjusted p-values, in input order.
std::vector<double> benjamini_hochberg(std::span<const double> p_values);

enum class Correction { none, benjamini_hochberg };

std::string_view correction_name(Correction c) noexcept;
std::optional<Correction> parse_correction(std::string_view name) noexcept;

struct ScreeningConfig {
    double alpha = 0.05;
    NormalityTest normality_test = NormalityTest::shapiro_wilk;
    HomogeneityTest homogeneity_test = HomogeneityTest::brown_forsythe;
    Correction correction = Correction::none;

    void validate() const;

    friend bool operator==(const ScreeningConfig&, const ScreeningConfig&) = default;
};

enum class TestUsed { anova, kruskal_wallis, skipped };
std::string_view test_name(TestUsed t) noexcept;

/// Outcome of an assumption check.  Groups with fewer than 3 values cannot
/// be tested for normality.
enum class Check { pass, fail, untestable };
std::string_view check_name(Check c) noexcept;

struct VariableTestResult {
    std::string var_id;
    TestUsed test_used = TestUsed::skipped;
    double statistic = 0.0;
    double p_value = 1.0;
    double p_adjusted = 1.0;  ///< equals p_value without correction
    std::vector<std::size_t> group_sizes;
    std::vector<Check> normality;
    Check homogeneity = Check::untestable;
    bool significant = false;
    std::string skip_reason;  ///< error code name when skipped

    /// Compact `homog=pass;norm=pass|fail|pass` (or `skipped=REASON`).
    std::string flags() const;
};

/// Per variable: groups by cluster label (missing values dropped), skip
/// when any group has < 2 values or the variable is constant, homogeneity
/// and per-group normality at alpha, ANOVA if both hold else
/// Kruskal-Wallis, then correction.  Sorted by p ascending, ties by
/// var_id; skipped variables last.  Throws LabelWithoutProfile.
std::vector<VariableTestResult> screen(const std::vector<CensusProfile>& profiles,
                                       const std::map<std::string, int>& labels, const ScreeningConfig& config = {});

}  // namespace vulnscape::stats

#include "vulnscape/tables.hpp"

#include <cmath>

namespace vulnscape::tables {

namespace {

std::string num(double v) { return std::isnan(v) ? std::string() : csv::format_number(v); }

}  // namespace

csv::Table embedding(const Embedding& e) {
    csv::Table t;
    t.header = {"key", "wave", "x", "y"};
    for (std::size_t i = 0; i < e.keys.size(); ++i) {
        t.rows.push_back({e.keys[i].neighborhood, std::to_string(e.keys[i].wave), num(e.points(i, 0)), num(e.points(i, 1))});
    }
    return t;
}

csv::Table trace(const Embedding& e) {
    csv::Table t;
    t.header = {"iteration", "objective"};
    for (const auto& p : e.trace) t.rows.push_back({std::to_string(p.iteration), num(p.objective)});
    return t;
}

csv::Table solution(const Embedding& e, const ClusterSolution& s) {
    csv::Table t = embedding(e);
    t.header.push_back("label");
    for (std::size_t i = 0; i < t.rows.size(); ++i) t.rows[i].push_back(std::to_string(s.labels[i]));
    return t;
}

csv::Table hopkins(const HopkinsReport& report) {
    csv::Table t;
    t.header = {"scope", "label", "m", "repeats", "H_av", "p_value", "skipped"};
    const std::string repeats = std::to_string(report.config.repeats);
    t.rows.push_back({"overall", "", std::to_string(report.overall.m), repeats, num(report.overall.h_av),
                      num(report.overall.p_value), ""});
    for (const auto& c : report.per_cluster) {
        if (c.skipped) {
            t.rows.push_back({"cluster", std::to_string(c.label), "", repeats, "", "", c.skip_reason});
        } else {
            t.rows.push_back({"cluster", std::to_string(c.label), std::to_string(c.result.m), repeats, num(c.result.h_av),
                              num(c.result.p_value), ""});
        }
    }
    return t;
}

csv::Table screening(const std::vector<stats::VariableTestResult>& results, const Catalog& catalog) {
    csv::Table t;
    t.header = {"var_id", "label", "category", "test_used", "statistic", "p_value", "significant", "flags"};
    for (const auto& r : results) {
        const auto* var = catalog.find(r.var_id);
        t.rows.push_back({r.var_id, var ? var->label : "", var ? std::string(category_name(var->category)) : "",
                          std::string(stats::test_name(r.test_used)), num(r.statistic), num(r.p_adjusted),
                          r.significant ? "true" : "false", r.flags()});
    }
    return t;
}

csv::Table stability(const StabilityReport& report) {
    csv::Table t;
    t.header = {"neighborhood"};
    for (int w = Wave::kFirst; w <= Wave::kLast; ++w) t.header.push_back("w" + std::to_string(w));
    t.header.push_back("transitions");
    t.header.push_back("a_label");
    for (const auto& [nbhd, traj] : report.trajectories) {
        csv::Row row{nbhd};
        for (int w = Wave::kFirst; w <= Wave::kLast; ++w) {
            std::string cell;
            for (std::size_t i = 0; i < report.waves.size(); ++i) {
                if (report.waves[i] == w && i < traj.size()) cell = std::to_string(traj[i]);
            }
            row.push_back(cell);
        }
        auto tr = report.transitions.find(nbhd);
        auto al = report.a_labels.find(nbhd);
        row.push_back(tr == report.transitions.end() ? "" : std::to_string(tr->second));
        row.push_back(al == report.a_labels.end() ? "" : std::to_string(al->second));
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace vulnscape::tables

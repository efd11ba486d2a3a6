#pragma once

#include <vector>

#include "vulnscape/clustering.hpp"
#include "vulnscape/csv.hpp"
#include "vulnscape/embedding.hpp"
#include "vulnscape/hopkins.hpp"
#include "vulnscape/stats.hpp"

/// CSV renderings of analysis results.
namespace vulnscape::tables {

/// `key,wave,x,y`
csv::Table embedding(const Embedding& e);
/// `iteration,objective`
csv::Table trace(const Embedding& e);
/// `key,wave,x,y,label`
csv::Table solution(const Embedding& e, const ClusterSolution& s);
/// `scope,label,m,repeats,H_av,p_value,skipped`; overall row first.
csv::Table hopkins(const HopkinsReport& report);
/// `var_id,label,category,test_used,statistic,p_value,significant,flags`
csv::Table screening(const std::vector<stats::VariableTestResult>& results, const Catalog& catalog);
/// `neighborhood,w2..w6,transitions,a_label`; empty cell where a wave is absent.
csv::Table stability(const StabilityReport& report);

}  // namespace vulnscape::tables

#include "vulnscape/domain.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "vulnscape/error.hpp"

namespace vulnscape {

Wave::Wave(int index) : index_(index) {
    if (index == 1) throw Error(ErrorCode::BaselineWave, "wave 1 is the baseline wave and carries no data");
    if (index < kFirst || index > kLast) {
        throw Error(ErrorCode::RangeViolation, "wave " + std::to_string(index) + " outside 2..6");
    }
}

namespace {

constexpr std::array<std::string_view, kScaleCount> kScaleNames = {
    "physical", "social", "emotional", "language_cognitive", "communication", "one_or_more", "two_or_more",
};

std::string normalize_token(std::string_view text) {
    std::string out;
    for (char c : text) {
        if (c == ' ' || c == '_' || c == '-' || c == '&') continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

}  // namespace

std::string_view scale_name(Scale s) noexcept { return kScaleNames[static_cast<std::size_t>(s)]; }

std::optional<Scale> parse_scale(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kScaleNames.size(); ++i) {
        if (kScaleNames[i] == name) return static_cast<Scale>(i);
    }
    return std::nullopt;
}

std::string_view category_name(CensusCategory c) noexcept {
    switch (c) {
        case CensusCategory::Geography: return "Geography";
        case CensusCategory::EthnicOrigins: return "EthnicOrigins";
        case CensusCategory::LanguageImmigration: return "LanguageImmigration";
        case CensusCategory::Income: return "Income";
        case CensusCategory::CostOfLiving: return "CostOfLiving";
        case CensusCategory::Employment: return "Employment";
        case CensusCategory::Occupation: return "Occupation";
        case CensusCategory::Population: return "Population";
    }
    return "";
}

std::optional<CensusCategory> parse_category(std::string_view name) noexcept {
    auto key = normalize_token(name);
    for (int i = 0; i <= static_cast<int>(CensusCategory::Population); ++i) {
        auto c = static_cast<CensusCategory>(i);
        if (normalize_token(category_name(c)) == key) return c;
    }
    if (key == "languageandimmigration") return CensusCategory::LanguageImmigration;
    return std::nullopt;
}

std::string_view kind_name(CensusKind k) noexcept {
    switch (k) {
        case CensusKind::count: return "count";
        case CensusKind::percent: return "percent";
        case CensusKind::median: return "median";
        case CensusKind::mean: return "mean";
        case CensusKind::ratio: return "ratio";
        case CensusKind::rate: return "rate";
    }
    return "";
}

std::optional<CensusKind> parse_kind(std::string_view name) noexcept {
    auto key = normalize_token(name);
    for (int i = 0; i <= static_cast<int>(CensusKind::rate); ++i) {
        auto k = static_cast<CensusKind>(i);
        if (kind_name(k) == key) return k;
    }
    return std::nullopt;
}

std::string_view gender_name(Gender g) noexcept {
    switch (g) {
        case Gender::male: return "male";
        case Gender::female: return "female";
        case Gender::unspecified: return "unspecified";
    }
    return "";
}

Gender parse_gender(std::string_view text) noexcept {
    auto key = normalize_token(text);
    if (key == "male" || key == "m") return Gender::male;
    if (key == "female" || key == "f") return Gender::female;
    return Gender::unspecified;
}

std::string_view season_name(Season s) noexcept {
    switch (s) {
        case Season::Winter: return "Winter";
        case Season::Spring: return "Spring";
        case Season::Summer: return "Summer";
        case Season::Fall: return "Fall";
    }
    return "";
}

std::optional<Season> parse_season(std::string_view text) noexcept {
    auto key = normalize_token(text);
    if (key == "winter") return Season::Winter;
    if (key == "spring") return Season::Spring;
    if (key == "summer") return Season::Summer;
    if (key == "fall" || key == "autumn") return Season::Fall;
    return std::nullopt;
}

std::optional<std::size_t> DaTable::column(std::string_view var_id) const {
    auto it = std::find(var_ids.begin(), var_ids.end(), var_id);
    if (it == var_ids.end()) return std::nullopt;
    return static_cast<std::size_t>(it - var_ids.begin());
}

Catalog::Catalog(std::vector<CensusVariable> variables) : variables_(std::move(variables)) {
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (!index_.emplace(variables_[i].var_id, i).second) {
            throw Error(ErrorCode::DuplicateKey, "duplicate catalog var_id '" + variables_[i].var_id + "'");
        }
    }
}

const CensusVariable* Catalog::find(std::string_view var_id) const {
    auto it = index_.find(var_id);
    return it == index_.end() ? nullptr : &variables_[it->second];
}

Dataset Dataset::from_edi(std::vector<EdiRecord> records, std::vector<CensusProfile> census, Catalog catalog) {
    Dataset ds;
    std::set<std::string> seen;
    for (const auto& r : records) {
        if (seen.insert(r.neighborhood.id).second) ds.neighborhoods.push_back(r.neighborhood);
    }
    ds.edi = std::move(records);
    ds.census = std::move(census);
    ds.catalog = std::move(catalog);
    ds.validate();
    return ds;
}

void Dataset::validate() const {
    std::map<std::string, std::string> known;
    for (const auto& n : neighborhoods) {
        if (n.id.empty()) throw Error(ErrorCode::InvalidArgument, "empty neighborhood id");
        if (n.name.empty()) throw Error(ErrorCode::InvalidArgument, "empty name for neighborhood '" + n.id + "'");
        if (!known.emplace(n.id, n.name).second) {
            throw Error(ErrorCode::DuplicateKey, "duplicate neighborhood id '" + n.id + "'");
        }
    }
    std::set<std::pair<std::string, int>> keys;
    for (const auto& r : edi) {
        if (!known.count(r.neighborhood.id)) {
            throw Error(ErrorCode::KeyMismatch, "EDI record references unknown neighborhood '" + r.neighborhood.id + "'");
        }
        if (!keys.emplace(r.neighborhood.id, r.wave.index()).second) {
            throw Error(ErrorCode::DuplicateKey, "duplicate EDI record for (" + r.neighborhood.id + ", wave " +
                                                     std::to_string(r.wave.index()) + ")");
        }
    }
    std::set<std::string> profiled;
    for (const auto& p : census) {
        if (!known.count(p.neighborhood)) {
            throw Error(ErrorCode::KeyMismatch, "census profile references unknown neighborhood '" + p.neighborhood + "'");
        }
        if (!profiled.insert(p.neighborhood).second) {
            throw Error(ErrorCode::DuplicateKey, "duplicate census profile for '" + p.neighborhood + "'");
        }
        for (const auto& [var, _] : p.values) {
            if (!catalog.find(var)) throw Error(ErrorCode::UnknownVariable, "census variable '" + var + "' not in catalog");
        }
    }
}

const EdiRecord* Dataset::find(std::string_view neighborhood, int wave) const {
    for (const auto& r : edi) {
        if (r.neighborhood.id == neighborhood && r.wave.index() == wave) return &r;
    }
    return nullptr;
}

const CensusProfile* Dataset::profile(std::string_view neighborhood) const {
    for (const auto& p : census) {
        if (p.neighborhood == neighborhood) return &p;
    }
    return nullptr;
}

std::vector<int> Dataset::waves() const {
    std::set<int> w;
    for (const auto& r : edi) w.insert(r.wave.index());
    return {w.begin(), w.end()};
}

std::map<std::string, long> Dataset::latest_populations() const {
    std::map<std::string, std::pair<int, long>> latest;
    for (const auto& r : edi) {
        auto [it, inserted] = latest.emplace(r.neighborhood.id, std::make_pair(r.wave.index(), r.n_children));
        if (!inserted && r.wave.index() > it->second.first) it->second = {r.wave.index(), r.n_children};
    }
    std::map<std::string, long> out;
    for (const auto& [id, p] : latest) out[id] = p.second;
    return out;
}

}  // namespace vulnscape

#include "vulnscape/io.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "vulnscape/csv.hpp"
#include "vulnscape/error.hpp"

namespace vulnscape {

namespace {

std::string where(std::size_t line, std::string_view field) {
    return "line " + std::to_string(line) + ", field '" + std::string(field) + "'";
}

const std::string& cell(const csv::Table& t, std::size_t r, std::size_t c, std::string_view field) {
    const auto& row = t.rows[r];
    if (c >= row.size()) {
        throw RowError(ErrorCode::Parse, t.line_of[r], std::string(field), where(t.line_of[r], field) + ": row too short");
    }
    return row[c];
}

double parse_real(const csv::Table& t, std::size_t r, std::size_t c, std::string_view field) {
    const auto& text = cell(t, r, c, field);
    auto v = csv::parse_number(text);
    if (!v || !std::isfinite(*v)) {
        throw RowError(ErrorCode::Parse, t.line_of[r], std::string(field),
                       where(t.line_of[r], field) + ": '" + text + "' is not a finite number");
    }
    return *v;
}

long parse_count(const csv::Table& t, std::size_t r, std::size_t c, std::string_view field) {
    double v = parse_real(t, r, c, field);
    if (v != std::floor(v)) {
        throw RowError(ErrorCode::Parse, t.line_of[r], std::string(field),
                       where(t.line_of[r], field) + ": expected a whole number");
    }
    if (v < 0) {
        throw RowError(ErrorCode::RangeViolation, t.line_of[r], std::string(field),
                       where(t.line_of[r], field) + ": negative count");
    }
    return static_cast<long>(v);
}

Date parse_date(const csv::Table& t, std::size_t r, std::size_t c, std::string_view field) {
    const auto& text = cell(t, r, c, field);
    auto d = Date::parse(text);
    if (!d) {
        throw RowError(ErrorCode::BadDate, t.line_of[r], std::string(field),
                       where(t.line_of[r], field) + ": '" + text + "' is not an ISO-8601 date");
    }
    return *d;
}

bool parse_flag(const csv::Table& t, std::size_t r, std::size_t c, std::string_view field) {
    std::string v;
    for (char ch : cell(t, r, c, field)) v.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (v == "true" || v == "1" || v == "yes" || v == "y" || v == "t") return true;
    if (v == "false" || v == "0" || v == "no" || v == "n" || v == "f") return false;
    throw RowError(ErrorCode::Parse, t.line_of[r], std::string(field),
                   where(t.line_of[r], field) + ": expected a boolean");
}

void require_header(const csv::Table& t, std::string_view header) {
    std::string h(header);
    std::stringstream ss(h);
    std::string name;
    while (std::getline(ss, name, ',')) t.require(name);
}

}  // namespace

// EDI ---------------------------------------------------------------------

std::vector<EdiRecord> parse_edi(std::string_view text) {
    auto t = csv::parse(text);
    require_header(t, kEdiHeader);
    const auto c_id = t.require("neighborhood_id");
    const auto c_name = t.require("neighborhood_name");
    const auto c_wave = t.require("wave");
    const auto c_n = t.require("n_children");
    std::array<std::size_t, kScaleCount> c_scale{};
    for (std::size_t s = 0; s < kScaleCount; ++s) c_scale[s] = t.require(scale_name(static_cast<Scale>(s)));

    std::vector<EdiRecord> out;
    out.reserve(t.rows.size());
    std::set<std::pair<std::string, int>> keys;
    std::map<std::string, std::string> names;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto line = t.line_of[r];
        EdiRecord rec;
        rec.neighborhood.id = cell(t, r, c_id, "neighborhood_id");
        rec.neighborhood.name = cell(t, r, c_name, "neighborhood_name");
        if (rec.neighborhood.id.empty()) {
            throw RowError(ErrorCode::Parse, line, "neighborhood_id", where(line, "neighborhood_id") + ": empty");
        }
        if (rec.neighborhood.name.empty()) {
            throw RowError(ErrorCode::Parse, line, "neighborhood_name", where(line, "neighborhood_name") + ": empty");
        }
        auto [it, fresh] = names.emplace(rec.neighborhood.id, rec.neighborhood.name);
        if (!fresh && it->second != rec.neighborhood.name) {
            throw RowError(ErrorCode::Parse, line, "neighborhood_name",
                           where(line, "neighborhood_name") + ": conflicting name for '" + rec.neighborhood.id + "'");
        }

        double wave = parse_real(t, r, c_wave, "wave");
        if (wave != std::floor(wave)) {
            throw RowError(ErrorCode::Parse, line, "wave", where(line, "wave") + ": expected an integer");
        }
        try {
            rec.wave = Wave(static_cast<int>(wave));
        } catch (const Error& e) {
            throw RowError(e.code(), line, "wave", where(line, "wave") + ": " + e.what());
        }
        rec.n_children = parse_count(t, r, c_n, "n_children");
        for (std::size_t s = 0; s < kScaleCount; ++s) {
            auto field = scale_name(static_cast<Scale>(s));
            double v = parse_real(t, r, c_scale[s], field);
            if (v < 0.0 || v > 100.0) {
                throw RowError(ErrorCode::RangeViolation, line, std::string(field),
                               where(line, field) + ": " + csv::format_number(v) + " outside [0, 100]");
            }
            rec.percent[s] = v;
        }
        if (rec.value(Scale::two_or_more) > rec.value(Scale::one_or_more)) {
            throw RowError(ErrorCode::RangeViolation, line, "two_or_more",
                           where(line, "two_or_more") + ": two_or_more exceeds one_or_more");
        }
        if (!keys.emplace(rec.neighborhood.id, rec.wave.index()).second) {
            throw RowError(ErrorCode::DuplicateKey, line, "neighborhood_id",
                           where(line, "neighborhood_id") + ": duplicate key (" + rec.neighborhood.id + ", wave " +
                               std::to_string(rec.wave.index()) + ")");
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<EdiRecord> load_edi(const std::filesystem::path& path) { return parse_edi(csv::read_text(path)); }

std::string serialize_edi(const std::vector<EdiRecord>& records) {
    std::ostringstream out;
    out << kEdiHeader << '\n';
    for (const auto& r : records) {
        csv::Row row{r.neighborhood.id, r.neighborhood.name, std::to_string(r.wave.index()), std::to_string(r.n_children)};
        for (double v : r.percent) row.push_back(csv::format_number(v));
        csv::write_row(out, row);
    }
    return out.str();
}

// Census ------------------------------------------------------------------

Catalog parse_catalog(std::string_view text) {
    auto t = csv::parse(text);
    require_header(t, kCatalogHeader);
    const auto c_id = t.require("var_id");
    const auto c_label = t.require("label");
    const auto c_cat = t.require("category");
    const auto c_kind = t.require("kind");
    const auto c_num = t.column("numerator");
    const auto c_den = t.column("denominator");

    std::vector<CensusVariable> vars;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto line = t.line_of[r];
        CensusVariable v;
        v.var_id = cell(t, r, c_id, "var_id");
        if (v.var_id.empty()) throw RowError(ErrorCode::Parse, line, "var_id", where(line, "var_id") + ": empty");
        v.label = cell(t, r, c_label, "label");
        auto cat = parse_category(cell(t, r, c_cat, "category"));
        if (!cat) {
            throw RowError(ErrorCode::Parse, line, "category",
                           where(line, "category") + ": unknown category '" + t.rows[r][c_cat] + "'");
        }
        v.category = *cat;
        auto kind = parse_kind(cell(t, r, c_kind, "kind"));
        if (!kind) {
            throw RowError(ErrorCode::Parse, line, "kind", where(line, "kind") + ": unknown kind '" + t.rows[r][c_kind] + "'");
        }
        v.kind = *kind;
        if (c_num && *c_num < t.rows[r].size()) v.numerator = t.rows[r][*c_num];
        if (c_den && *c_den < t.rows[r].size()) v.denominator = t.rows[r][*c_den];
        vars.push_back(std::move(v));
    }
    Catalog catalog(std::move(vars));
    for (const auto& v : catalog.variables()) {
        for (const auto* link : {&v.numerator, &v.denominator}) {
            if (link->empty()) continue;
            const auto* target = catalog.find(*link);
            if (!target) throw Error(ErrorCode::UnknownVariable, "ratio '" + v.var_id + "' links unknown variable '" + *link + "'");
            if (target->kind != CensusKind::count) {
                throw Error(ErrorCode::KindMismatch, "ratio '" + v.var_id + "' links non-count variable '" + *link + "'");
            }
        }
        if (v.numerator.empty() != v.denominator.empty()) {
            throw Error(ErrorCode::InvalidArgument, "ratio '" + v.var_id + "' must link both numerator and denominator");
        }
    }
    return catalog;
}

Catalog load_catalog(const std::filesystem::path& path) { return parse_catalog(csv::read_text(path)); }

std::string serialize_catalog(const Catalog& catalog) {
    bool linked = false;
    for (const auto& v : catalog.variables()) linked = linked || !v.numerator.empty();
    std::ostringstream out;
    out << kCatalogHeader << (linked ? ",numerator,denominator" : "") << '\n';
    for (const auto& v : catalog.variables()) {
        csv::Row row{v.var_id, v.label, std::string(category_name(v.category)), std::string(kind_name(v.kind))};
        if (linked) {
            row.push_back(v.numerator);
            row.push_back(v.denominator);
        }
        csv::write_row(out, row);
    }
    return out.str();
}

DaTable parse_da_table(std::string_view text, const Catalog& catalog) {
    auto t = csv::parse(text);
    const auto c_da = t.require("da_id");
    DaTable table;
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        if (c == c_da) continue;
        const auto& name = t.header[c];
        if (!catalog.find(name)) {
            throw Error(ErrorCode::UnknownVariable, "census column '" + name + "' is not in the catalog");
        }
        table.var_ids.push_back(name);
        cols.push_back(c);
    }
    std::set<std::string> seen;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto line = t.line_of[r];
        const auto& id = cell(t, r, c_da, "da_id");
        if (!seen.insert(id).second) {
            throw RowError(ErrorCode::DuplicateKey, line, "da_id", where(line, "da_id") + ": duplicate DA '" + id + "'");
        }
        table.da_ids.push_back(id);
        std::vector<std::optional<double>> values;
        values.reserve(cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const auto& text_cell = cell(t, r, cols[j], table.var_ids[j]);
            if (text_cell.empty()) {
                values.emplace_back(std::nullopt);
                continue;
            }
            auto v = csv::parse_number(text_cell);
            if (!v || !std::isfinite(*v)) {
                throw RowError(ErrorCode::KindMismatch, line, table.var_ids[j],
                               where(line, table.var_ids[j]) + ": '" + text_cell + "' is not numeric");
            }
            values.emplace_back(*v);
        }
        table.values.push_back(std::move(values));
    }
    return table;
}

std::string serialize_da_table(const DaTable& table) {
    std::ostringstream out;
    csv::Row header{"da_id"};
    header.insert(header.end(), table.var_ids.begin(), table.var_ids.end());
    csv::write_row(out, header);
    for (std::size_t r = 0; r < table.da_ids.size(); ++r) {
        csv::Row row{table.da_ids[r]};
        for (const auto& v : table.values[r]) row.push_back(v ? csv::format_number(*v) : "");
        csv::write_row(out, row);
    }
    return out.str();
}

CensusData load_census(const std::filesystem::path& path, const std::filesystem::path& catalog_path) {
    CensusData data;
    data.catalog = load_catalog(catalog_path);
    data.table = parse_da_table(csv::read_text(path), data.catalog);
    return data;
}

std::string serialize_profiles(const std::vector<CensusProfile>& profiles, const Catalog& catalog) {
    std::ostringstream out;
    csv::Row header{"neighborhood_id"};
    for (const auto& v : catalog.variables()) header.push_back(v.var_id);
    csv::write_row(out, header);
    for (const auto& p : profiles) {
        csv::Row row{p.neighborhood};
        for (const auto& v : catalog.variables()) {
            auto value = p.get(v.var_id);
            row.push_back(value ? csv::format_number(*value) : "");
        }
        csv::write_row(out, row);
    }
    return out.str();
}

std::vector<CensusProfile> parse_profiles(std::string_view text, const Catalog& catalog) {
    auto t = csv::parse(text);
    const auto c_id = t.require("neighborhood_id");
    std::vector<CensusProfile> out;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        if (c != c_id && !catalog.find(t.header[c])) {
            throw Error(ErrorCode::UnknownVariable, "profile column '" + t.header[c] + "' is not in the catalog");
        }
    }
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        CensusProfile p;
        p.neighborhood = cell(t, r, c_id, "neighborhood_id");
        for (std::size_t c = 0; c < t.header.size(); ++c) {
            if (c == c_id) continue;
            const auto& text_cell = cell(t, r, c, t.header[c]);
            if (text_cell.empty()) {
                p.values[t.header[c]] = std::nullopt;
                continue;
            }
            auto v = csv::parse_number(text_cell);
            if (!v || !std::isfinite(*v)) {
                throw RowError(ErrorCode::KindMismatch, t.line_of[r], t.header[c],
                               where(t.line_of[r], t.header[c]) + ": '" + text_cell + "' is not numeric");
            }
            p.values[t.header[c]] = *v;
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<CensusProfile> load_profiles(const std::filesystem::path& path, const Catalog& catalog) {
    return parse_profiles(csv::read_text(path), catalog);
}

// Registrations -----------------------------------------------------------

std::vector<RegistrationRecord> parse_registrations(std::string_view text) {
    auto t = csv::parse(text);
    require_header(t, kRegistrationHeader);
    const auto c_client = t.require("client_id");
    const auto c_birth = t.require("birth_date");
    const auto c_gender = t.require("gender");
    const auto c_nbhd = t.require("neighborhood_id");
    const auto c_account = t.require("account_created");
    const auto c_reg_id = t.require("registration_id");
    const auto c_course = t.require("course_id");
    const auto c_title = t.require("course_title");
    const auto c_sub = t.require("course_subtitle");
    const auto c_season = t.require("season");
    const auto c_date = t.require("registration_date");
    const auto c_done = t.require("completed");
    const auto c_max = t.require("max_registrants");
    const auto c_subsidy = t.require("subsidized");

    std::vector<RegistrationRecord> out;
    out.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto line = t.line_of[r];
        RegistrationRecord rec;
        rec.client_id = cell(t, r, c_client, "client_id");
        if (rec.client_id.empty()) throw RowError(ErrorCode::Parse, line, "client_id", where(line, "client_id") + ": empty");
        rec.birth_date = parse_date(t, r, c_birth, "birth_date");
        rec.gender = parse_gender(cell(t, r, c_gender, "gender"));
        const auto& nbhd = cell(t, r, c_nbhd, "neighborhood_id");
        if (!nbhd.empty()) rec.neighborhood = nbhd;
        rec.account_created = parse_date(t, r, c_account, "account_created");
        rec.registration_id = cell(t, r, c_reg_id, "registration_id");
        rec.course_id = cell(t, r, c_course, "course_id");
        rec.course_title = cell(t, r, c_title, "course_title");
        rec.course_subtitle = cell(t, r, c_sub, "course_subtitle");
        auto season = parse_season(cell(t, r, c_season, "season"));
        if (!season) {
            throw RowError(ErrorCode::Parse, line, "season",
                           where(line, "season") + ": unknown season '" + t.rows[r][c_season] + "'");
        }
        rec.season = *season;
        rec.registration_date = parse_date(t, r, c_date, "registration_date");
        if (rec.registration_date < rec.birth_date) {
            throw RowError(ErrorCode::NegativeAge, line, "registration_date",
                           where(line, "registration_date") + ": registration before birth");
        }
        rec.completed = parse_flag(t, r, c_done, "completed");
        rec.max_registrants = parse_count(t, r, c_max, "max_registrants");
        rec.subsidized = parse_flag(t, r, c_subsidy, "subsidized");
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<RegistrationRecord> load_registrations(const std::filesystem::path& path) {
    return parse_registrations(csv::read_text(path));
}

std::string serialize_registrations(const std::vector<RegistrationRecord>& records) {
    std::ostringstream out;
    out << kRegistrationHeader << '\n';
    for (const auto& r : records) {
        csv::write_row(out, {r.client_id, r.birth_date.iso(), std::string(gender_name(r.gender)), r.neighborhood.value_or(""),
                             r.account_created.iso(), r.registration_id, r.course_id, r.course_title, r.course_subtitle,
                             std::string(season_name(r.season)), r.registration_date.iso(), r.completed ? "true" : "false",
                             std::to_string(r.max_registrants), r.subsidized ? "true" : "false"});
    }
    return out.str();
}

}  // namespace vulnscape

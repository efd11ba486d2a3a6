#include "vulnscape/service.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "vulnscape/error.hpp"
#include "vulnscape/io.hpp"

namespace vulnscape::service {

namespace {

Response json_response(int status, const json& body) { return {status, body.dump(), "application/json"}; }

Response error_response(const Error& e) {
    json err = {{"code", code_name(e.code())}, {"message", e.what()}};
    if (const auto* row = dynamic_cast<const RowError*>(&e)) {
        err["row"] = row->row();
        err["field"] = row->field();
    }
    return json_response(status_for(e.code()), {{"error", err}});
}

std::optional<std::string> param(const Request& r, const std::string& name) {
    auto it = r.query.find(name);
    if (it == r.query.end() || it->second.empty()) return std::nullopt;
    return it->second;
}

std::optional<long long> int_param(const Request& r, const std::string& name) {
    auto text = param(r, name);
    if (!text) return std::nullopt;
    long long v = 0;
    auto [ptr, ec] = std::from_chars(text->data(), text->data() + text->size(), v);
    if (ec != std::errc() || ptr != text->data() + text->size()) {
        throw Error(ErrorCode::InvalidArgument, "query parameter '" + name + "' must be an integer");
    }
    return v;
}

json parse_body(const Request& r) {
    if (r.body.empty()) return json::object();
    try {
        json j = json::parse(r.body);
        if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
        return j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("request body is not valid JSON: ") + e.what());
    }
}

const pipeline::LoadedData& require_data(const Session& s) {
    if (!s.data || s.data->dataset.edi.empty()) throw Error(ErrorCode::NoRunAvailable, "no EDI dataset is loaded");
    return *s.data;
}

int checked_wave(long long w, const Dataset& ds) {
    Wave wave(static_cast<int>(w));
    auto waves = ds.waves();
    if (std::find(waves.begin(), waves.end(), wave.index()) == waves.end()) {
        throw Error(ErrorCode::MissingWave, "dataset has no wave " + std::to_string(w));
    }
    return wave.index();
}

struct Analysis {
    pipeline::TopDownConfig config;
    WaveMode mode;
};

/// Request body -> analysis config.  Nested objects use the manifest
/// layout; the flat fields below are shorthands used by the dashboard.
Analysis parse_analysis(const json& body, const Dataset& ds) {
    Analysis a;
    pipeline::decode(body, a.config);
    std::string mode = body.value("mode", "single");
    if (mode == "all") {
        a.mode = WaveMode::all();
    } else if (mode == "single") {
        long long w = ds.waves().back();
        if (body.contains("wave")) {
            if (!body.at("wave").is_number_integer()) throw Error(ErrorCode::InvalidArgument, "field 'wave' must be an integer");
            w = body.at("wave").get<long long>();
        }
        a.mode = WaveMode::single(checked_wave(w, ds));
    } else {
        throw Error(ErrorCode::InvalidArgument, "field 'mode' must be 'single' or 'all'");
    }
    json embedding = json::object();
    for (const char* key : {"method", "perplexity", "iterations", "learning_rate", "n_neighbors", "min_dist", "epochs"}) {
        if (body.contains(key)) embedding[key] = body.at(key);
    }
    pipeline::decode(embedding, a.config.embedding);
    json screening = json::object();
    for (const char* key : {"alpha", "correction", "normality_test", "homogeneity_test"}) {
        if (body.contains(key)) screening[key] = body.at(key);
    }
    pipeline::decode(screening, a.config.screening);
    json hopkins = json::object();
    for (const char* key : {"sample_fraction", "min_sample", "repeats", "exponent", "null_variance"}) {
        if (body.contains(key)) hopkins[key] = body.at(key);
    }
    pipeline::decode(hopkins, a.config.hopkins);
    if (body.contains("k")) {
        if (!body.at("k").is_number_integer()) throw Error(ErrorCode::InvalidArgument, "field 'k' must be an integer");
        int k = body.at("k").get<int>();
        (a.mode.is_all() ? a.config.k_all : a.config.k_single) = k;
    }
    if (a.config.k_for(a.mode) < 1) {
        throw Error(ErrorCode::KExceedsN, "k must be at least 1, got " + std::to_string(a.config.k_for(a.mode)));
    }
    a.config.hopkins.validate();
    a.config.screening.validate();
    return a;
}

json run_json(const pipeline::ModeRun& run) {
    json points = json::array();
    for (std::size_t i = 0; i < run.solution.keys.size(); ++i) {
        points.push_back({{"key", run.solution.keys[i].neighborhood},
                          {"wave", run.solution.keys[i].wave},
                          {"x", run.embedding.points(i, 0)},
                          {"y", run.embedding.points(i, 1)},
                          {"label", run.solution.labels[i]}});
    }
    return {{"mode", run.mode.label()},
            {"method", run.solution.method},
            {"k", run.solution.k},
            {"wcss", run.solution.wcss},
            {"points", points},
            {"neighborhood_labels", run.neighborhood_labels},
            {"warnings", run.input.warnings}};
}

json hopkins_json(const HopkinsAverage& h) {
    return {{"H_av", h.h_av}, {"p_value", h.p_value}, {"m", h.m}, {"values", h.values}};
}

json screening_json(const std::vector<stats::VariableTestResult>& results, const Catalog& catalog) {
    json rows = json::array();
    for (const auto& r : results) {
        const auto* var = catalog.find(r.var_id);
        json row = {{"var_id", r.var_id},
                    {"label", var ? var->label : ""},
                    {"category", var ? std::string(category_name(var->category)) : ""},
                    {"test_used", stats::test_name(r.test_used)},
                    {"statistic", std::isnan(r.statistic) ? json(nullptr) : json(r.statistic)},
                    {"p_value", r.p_value},
                    {"p_adjusted", r.p_adjusted},
                    {"significant", r.significant},
                    {"group_sizes", r.group_sizes},
                    {"flags", r.flags()}};
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

int status_for(ErrorCode code) noexcept {
    if (code == ErrorCode::NotFound) return 404;
    if (code == ErrorCode::NoRunAvailable) return 409;
    return is_validation(code) ? 422 : 500;
}

std::vector<std::string> suggest_variables(const std::vector<stats::VariableTestResult>& results, const Catalog& catalog,
                                           std::size_t top_n) {
    if (results.empty()) throw Error(ErrorCode::NoRunAvailable, "no screening results to suggest from");
    std::vector<const stats::VariableTestResult*> significant;
    for (const auto& r : results) {
        if (r.significant) significant.push_back(&r);
    }
    std::stable_sort(significant.begin(), significant.end(), [](const auto* a, const auto* b) {
        if (a->p_adjusted != b->p_adjusted) return a->p_adjusted < b->p_adjusted;
        return a->var_id < b->var_id;
    });
    auto category_of = [&](const std::string& var) {
        const auto* v = catalog.find(var);
        return v ? std::string(category_name(v->category)) : std::string();
    };
    std::vector<std::string> out;
    std::set<std::string> seen_category, taken;
    for (const auto* r : significant) {
        if (seen_category.insert(category_of(r->var_id)).second) {
            out.push_back(r->var_id);
            taken.insert(r->var_id);
        }
    }
    for (const auto* r : significant) {
        if (!taken.count(r->var_id)) out.push_back(r->var_id);
    }
    if (out.size() > top_n) out.resize(top_n);
    return out;
}

Service::Service(std::optional<std::filesystem::path> data_dir) {
    auto s = std::make_shared<Session>();
    if (data_dir && std::filesystem::exists(*data_dir / "edi.csv")) {
        auto data = pipeline::load(pipeline::DataPaths::from_dir(*data_dir));
        s->registrations = data.registrations;
        s->data = std::make_shared<const pipeline::LoadedData>(std::move(data));
    } else {
        s->data = std::make_shared<const pipeline::LoadedData>();
    }
    sessions_["default"] = std::move(s);
}

Service::Service(pipeline::LoadedData data) {
    auto s = std::make_shared<Session>();
    s->registrations = data.registrations;
    s->data = std::make_shared<const pipeline::LoadedData>(std::move(data));
    sessions_["default"] = std::move(s);
}

Service::~Service() {
    wait_idle();
    for (auto& t : workers_) {
        if (t.joinable()) t.join();
    }
}

void Service::wait_idle() {
    std::unique_lock lock(jobs_mutex_);
    jobs_cv_.wait(lock, [&] {
        return std::all_of(jobs_.begin(), jobs_.end(), [](const auto& kv) { return kv.second.done; });
    });
}

std::shared_ptr<Session> Service::session(const Request& request, bool create) {
    std::string id = param(request, "session").value_or("default");
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(id);
    if (it != sessions_.end()) return it->second;
    if (!create) throw Error(ErrorCode::NotFound, "unknown session '" + id + "'");
    auto s = std::make_shared<Session>();
    s->data = sessions_.at("default")->data;
    sessions_[id] = s;
    return s;
}

std::shared_ptr<const pipeline::ModeRun> Service::run_for(Session& s, const pipeline::TopDownConfig& config, WaveMode mode) {
    const std::string canonical = json{{"mode", mode.label()}, {"config", pipeline::encode(config)}}.dump();
    const std::string digest = pipeline::sha256_hex(canonical);
    {
        std::lock_guard lock(s.mutex);
        auto it = s.runs.find(digest);
        if (it != s.runs.end() && it->second.first == canonical) return it->second.second;
    }
    auto run = std::make_shared<const pipeline::ModeRun>(pipeline::run_mode(require_data(s).dataset, mode, config));
    std::lock_guard lock(s.mutex);
    s.runs[digest] = {canonical, run};
    return run;
}

Response Service::handle(const Request& request) {
    try {
        if (request.method == "POST" && param(request, "async").value_or("0") == "1") return enqueue(request);
        return dispatch(request);
    } catch (const Error& e) {
        return error_response(e);
    } catch (const std::exception& e) {
        return json_response(500, {{"error", {{"code", "INTERNAL"}, {"message", e.what()}}}});
    }
}

Response Service::enqueue(const Request& request) {
    Request sync = request;
    sync.query.erase("async");
    std::string id;
    {
        std::lock_guard lock(jobs_mutex_);
        id = "j" + std::to_string(next_job_++);
        jobs_[id] = Job{};
        workers_.emplace_back([this, id, sync] {
            Response r = handle(sync);
            std::lock_guard inner(jobs_mutex_);
            jobs_[id] = Job{true, std::move(r)};
            jobs_cv_.notify_all();
        });
    }
    return json_response(202, {{"job_id", id}, {"status", "pending"}});
}

Response Service::job(const std::string& id) {
    std::lock_guard lock(jobs_mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw Error(ErrorCode::NotFound, "unknown job '" + id + "'");
    if (!it->second.done) return json_response(200, {{"job_id", id}, {"status", "pending"}});
    const Response& r = it->second.response;
    json body = {{"job_id", id}, {"http_status", r.status}};
    body["status"] = r.status < 400 ? "done" : "failed";
    body[r.status < 400 ? "result" : "error"] = r.status < 400 ? json::parse(r.body) : json::parse(r.body).at("error");
    return json_response(200, body);
}

Response Service::dispatch(const Request& r) {
    const bool get = r.method == "GET";
    const bool post = r.method == "POST";
    if (get && r.path == "/api/health") return health();
    if (get && r.path == "/api/edi") return edi(r);
    if (post && r.path == "/api/embed") return embed(r);
    if (post && r.path == "/api/cluster") return cluster(r);
    if (get && r.path == "/api/stability") return stability(r);
    if (post && r.path == "/api/validate") return validate(r);
    if (post && r.path == "/api/census/screen") return screen(r);
    if (get && r.path == "/api/census/suggest") return suggest(r);
    if (post && r.path == "/api/class/upload") return upload(r);
    if (get && r.path == "/api/class/summary") return summary(r);
    if (get && r.path == "/api/geo/neighborhoods") return neighborhoods(r);
    const std::string jobs_prefix = "/api/jobs/";
    if (get && r.path.rfind(jobs_prefix, 0) == 0) return job(r.path.substr(jobs_prefix.size()));
    throw Error(ErrorCode::NotFound, "no endpoint " + r.method + " " + r.path);
}

Response Service::health() { return json_response(200, {{"status", "ok"}}); }

Response Service::edi(const Request& r) {
    auto s = session(r, false);
    const Dataset& ds = require_data(*s).dataset;
    int wave = checked_wave(int_param(r, "wave").value_or(ds.waves().back()), ds);
    std::string scale_text = param(r, "scale").value_or("one_or_more");
    auto scale = parse_scale(scale_text);
    if (!scale) throw Error(ErrorCode::InvalidArgument, "unknown scale '" + scale_text + "'");
    json rows = json::array();
    for (const auto& n : ds.neighborhoods) {
        if (const auto* rec = ds.find(n.id, wave)) {
            rows.push_back({{"neighborhood_id", n.id}, {"name", n.name}, {"value", rec->value(*scale)}, {"n_children", rec->n_children}});
        }
    }
    return json_response(200, {{"wave", wave}, {"scale", scale_name(*scale)}, {"rows", rows}});
}

Response Service::embed(const Request& r) {
    auto s = session(r, false);
    auto a = parse_analysis(parse_body(r), require_data(*s).dataset);
    auto input = pipeline::prepare(s->data->dataset, a.mode, a.config);
    auto e = pipeline::embed_stage(input, a.config);
    json points = json::array();
    for (std::size_t i = 0; i < e.keys.size(); ++i) {
        points.push_back({{"key", e.keys[i].neighborhood}, {"wave", e.keys[i].wave}, {"x", e.points(i, 0)}, {"y", e.points(i, 1)}});
    }
    json trace = json::array();
    for (const auto& t : e.trace) trace.push_back({{"iteration", t.iteration}, {"objective", t.objective}});
    return json_response(200, {{"mode", a.mode.label()},
                               {"method", method_name(a.config.embedding.method)},
                               {"points", points},
                               {"trace", trace},
                               {"warnings", input.warnings}});
}

Response Service::cluster(const Request& r) {
    auto s = session(r, false);
    auto a = parse_analysis(parse_body(r), require_data(*s).dataset);
    auto run = run_for(*s, a.config, a.mode);
    return json_response(200, run_json(*run));
}

Response Service::stability(const Request& r) {
    auto s = session(r, false);
    const Dataset& ds = require_data(*s).dataset;
    json body = json::object();
    if (auto m = param(r, "method")) body["method"] = *m;
    if (auto seed = int_param(r, "seed")) body["seed"] = *seed;
    if (auto k = int_param(r, "k_all")) body["k_all"] = *k;
    if (auto k = int_param(r, "k_single")) body["k_single"] = *k;
    auto a = parse_analysis(body, ds);
    std::map<int, ClusterSolution> solutions;
    for (int w : ds.waves()) solutions.emplace(w, run_for(*s, a.config, WaveMode::single(w))->solution);
    auto all = run_for(*s, a.config, WaveMode::all());
    auto report = vulnscape::stability(solutions, all->solution);
    json rows = json::array();
    for (const auto& [nbhd, traj] : report.trajectories) {
        rows.push_back({{"neighborhood_id", nbhd},
                        {"trajectory", traj},
                        {"transitions", report.transitions.at(nbhd)},
                        {"a_label", report.a_labels.at(nbhd)}});
    }
    json instability = json::object();
    for (const auto& [label, v] : report.a_cluster_instability) instability[std::to_string(label)] = v;
    return json_response(200, {{"waves", report.waves}, {"rows", rows}, {"a_cluster_instability", instability}});
}

Response Service::validate(const Request& r) {
    auto s = session(r, false);
    auto a = parse_analysis(parse_body(r), require_data(*s).dataset);
    auto run = run_for(*s, a.config, a.mode);
    json clusters = json::array();
    for (const auto& c : run->hopkins.per_cluster) {
        json row = {{"label", c.label}, {"size", c.size}, {"skipped", c.skipped}};
        if (c.skipped) {
            row["skip_reason"] = c.skip_reason;
        } else {
            row.update(hopkins_json(c.result));
        }
        clusters.push_back(row);
    }
    return json_response(200, {{"mode", a.mode.label()},
                               {"config", pipeline::encode(run->hopkins.config)},
                               {"space", pipeline::space_name(a.config.hopkins_space)},
                               {"overall", hopkins_json(run->hopkins.overall)},
                               {"per_cluster", clusters}});
}

Response Service::screen(const Request& r) {
    auto s = session(r, false);
    auto a = parse_analysis(parse_body(r), require_data(*s).dataset);
    if (s->data->dataset.census.empty()) throw Error(ErrorCode::NoRunAvailable, "no census data is loaded");
    auto run = run_for(*s, a.config, a.mode);
    {
        std::lock_guard lock(s->mutex);
        s->last_screening = run->screening;
    }
    std::size_t significant = 0;
    for (const auto& v : run->screening) significant += v.significant ? 1 : 0;
    return json_response(200, {{"mode", a.mode.label()},
                               {"config", pipeline::encode(a.config.screening)},
                               {"significant_count", significant},
                               {"results", screening_json(run->screening, s->data->dataset.catalog)}});
}

Response Service::suggest(const Request& r) {
    auto s = session(r, false);
    std::optional<std::vector<stats::VariableTestResult>> screening;
    {
        std::lock_guard lock(s->mutex);
        screening = s->last_screening;
    }
    if (!screening) throw Error(ErrorCode::NoRunAvailable, "run POST /api/census/screen first");
    long long top_n = int_param(r, "top_n").value_or(10);
    if (top_n < 1) throw Error(ErrorCode::InvalidArgument, "top_n must be positive");
    auto vars = suggest_variables(*screening, s->data->dataset.catalog, static_cast<std::size_t>(top_n));
    return json_response(200, {{"variables", vars}});
}

Response Service::upload(const Request& r) {
    auto records = parse_registrations(r.body);
    std::string id;
    if (auto given = param(r, "session")) {
        id = *given;
    } else {
        id = "s" + std::to_string(next_session_++);
    }
    Request scoped = r;
    scoped.query["session"] = id;
    auto s = session(scoped, true);
    auto filtered = retention::apply_filters(records, {});
    json reasons = json::object();
    for (const auto& rej : filtered.rejected) {
        std::string name(retention::reason_name(rej.reason));
        reasons[name] = reasons.value(name, 0) + 1;
    }
    {
        std::lock_guard lock(s->mutex);
        s->registrations = std::move(records);
    }
    return json_response(200, {{"session", id},
                               {"records", filtered.kept.size() + filtered.rejected.size()},
                               {"kept", filtered.kept.size()},
                               {"rejected", filtered.rejected.size()},
                               {"rejection_reasons", reasons}});
}

Response Service::summary(const Request& r) {
    auto s = session(r, false);
    pipeline::LoadedData data;
    {
        std::lock_guard lock(s->mutex);
        if (!s->registrations) throw Error(ErrorCode::NoRunAvailable, "upload registration data first");
        data.registrations = s->registrations;
    }
    data.dataset = s->data->dataset;
    data.rules = s->data->rules;
    std::optional<retention::Facet> only;
    if (auto f = param(r, "facet")) {
        only = retention::parse_facet(*f);
        if (!only) throw Error(ErrorCode::InvalidArgument, "unknown facet '" + *f + "'");
    }
    auto result = pipeline::run_bottomup(data, {});
    json facets = json::object();
    for (const auto& d : result.distributions) {
        if (only && d.facet != *only) continue;
        json rows = json::array();
        for (const auto& row : d.rows) rows.push_back({{"key", row.key}, {"count", row.count}, {"proportion", row.proportion}});
        facets[std::string(retention::facet_name(d.facet))] = {{"key_columns", d.key_columns}, {"rows", rows}};
    }
    json reasons = json::object();
    for (const auto& rej : result.filtered.rejected) {
        std::string name(retention::reason_name(rej.reason));
        reasons[name] = reasons.value(name, 0) + 1;
    }
    return json_response(200, {{"journeys", result.journeys.size()},
                               {"kept", result.filtered.kept.size()},
                               {"rejected", result.filtered.rejected.size()},
                               {"rejection_reasons", reasons},
                               {"facets", facets}});
}

Response Service::neighborhoods(const Request& r) {
    auto s = session(r, false);
    if (!s->data || !s->data->neighborhood_geojson) throw Error(ErrorCode::NotFound, "no neighborhood geometry is loaded");
    return {200, *s->data->neighborhood_geojson, "application/geo+json"};
}

}  // namespace vulnscape::service

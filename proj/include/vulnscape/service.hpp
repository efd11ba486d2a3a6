#pragma once

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "vulnscape/error.hpp"
#include "vulnscape/pipeline.hpp"

namespace vulnscape::service {

using nlohmann::json;

struct Request {
    std::string method;  ///< "GET" or "POST"
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
};

struct Response {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";

    json as_json() const { return json::parse(body); }
};

/// Significant variables by ascending p: first the best of each category,
/// then the rest, truncated to `top_n`.  Throws NoRunAvailable when the
/// screening is empty.
std::vector<std::string> suggest_variables(const std::vector<stats::VariableTestResult>& results, const Catalog& catalog,
                                           std::size_t top_n = 10);

/// HTTP status for an error code: 404 NotFound, 409 NoRunAvailable, 422 other
/// validation errors, 500 otherwise.
int status_for(ErrorCode code) noexcept;

struct Session {
    std::shared_ptr<const pipeline::LoadedData> data;
    std::mutex mutex;
    /// config digest -> (canonical config, result)
    std::map<std::string, std::pair<std::string, std::shared_ptr<const pipeline::ModeRun>>> runs;
    std::optional<std::vector<stats::VariableTestResult>> last_screening;
    std::optional<std::vector<RegistrationRecord>> registrations;
};

/// Transport-independent request handler.  Thread-safe.
class Service {
public:
    /// Loads the default session from `data_dir` when it holds edi.csv.
    explicit Service(std::optional<std::filesystem::path> data_dir);
    explicit Service(pipeline::LoadedData data);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// POST requests with `async=1` are queued and answered with 202 and a
    /// job id; poll `GET /api/jobs/{id}`.
    Response handle(const Request& request);

    /// Blocks until every queued job has finished.
    void wait_idle();

private:
    Response dispatch(const Request& request);
    std::shared_ptr<Session> session(const Request& request, bool create);
    std::shared_ptr<const pipeline::ModeRun> run_for(Session& s, const pipeline::TopDownConfig& config, WaveMode mode);

    Response health();
    Response edi(const Request& r);
    Response embed(const Request& r);
    Response cluster(const Request& r);
    Response stability(const Request& r);
    Response validate(const Request& r);
    Response screen(const Request& r);
    Response suggest(const Request& r);
    Response upload(const Request& r);
    Response summary(const Request& r);
    Response neighborhoods(const Request& r);
    Response job(const std::string& id);
    Response enqueue(const Request& r);

    std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::atomic<unsigned long> next_session_{1};

    struct Job {
        bool done = false;
        Response response;
    };
    std::mutex jobs_mutex_;
    std::condition_variable jobs_cv_;
    std::map<std::string, Job> jobs_;
    std::vector<std::thread> workers_;
    unsigned long next_job_ = 1;
};

/// Serves the API over HTTP until the process is stopped.  Returns a
/// nonzero code when the port cannot be bound.
int serve(Service& service, const std::string& host, int port);

}  // namespace vulnscape::service

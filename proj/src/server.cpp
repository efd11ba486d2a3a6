#include <httplib.h>

#include <iostream>

#include "vulnscape/service.hpp"

namespace vulnscape::service {

int serve(Service& service, const std::string& host, int port) {
    httplib::Server server;
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    auto adapt = [&service](const httplib::Request& req, httplib::Response& res) {
        Request request;
        request.method = req.method;
        request.path = req.path;
        for (const auto& [k, v] : req.params) request.query.emplace(k, v);
        request.body = req.body;
        Response out = service.handle(request);
        res.status = out.status;
        res.set_content(out.body, out.content_type);
    };
    server.Get(".*", adapt);
    server.Post(".*", adapt);
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    if (!server.bind_to_port(host, port)) {
        std::cerr << "error: cannot bind " << host << ":" << port << "\n";
        return 2;
    }
    std::cerr << "listening on http://" << host << ":" << port << "\n";
    return server.listen_after_bind() ? 0 : 2;
}

}  // namespace vulnscape::service

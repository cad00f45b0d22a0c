#include "marketbench/service_http.hpp"

#include <chrono>
#include <mutex>

#include "httplib.h"

namespace marketbench::sim {

namespace {

std::int64_t steady_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::optional<std::int64_t> to_i64(const std::string& s) {
    if (s.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        std::int64_t v = std::stoll(s, &used);
        if (used != s.size()) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Server

struct HttpService::Impl {
    httplib::Server server;
    mutable std::mutex mu;
    std::vector<std::int64_t> page_hits_ms;
};

HttpService::HttpService(Service& service, int drop_stall_ms)
    : impl_(std::make_unique<Impl>()), service_(service), drop_stall_ms_(drop_stall_ms) {}

HttpService::~HttpService() { stop(); }

void HttpService::start() {
    if (runner_.joinable()) return;
    auto serve = [this](const std::string& sim_path, httplib::Response& res) {
        {
            std::lock_guard<std::mutex> lock(impl_->mu);
            impl_->page_hits_ms.push_back(steady_ms());
        }
        Service::Response r = service_.get(sim_path);
        switch (r.verdict) {
            case Service::Response::Verdict::Ok:
            case Service::Response::Verdict::Garble:
                res.status = 200;
                res.set_header("X-Sim-Time", std::to_string(r.served_at));
                res.set_content(r.body, "text/html");
                break;
            case Service::Response::Verdict::Error:
                res.status = 500;
                res.set_content(r.body, "text/plain");
                break;
            case Service::Response::Verdict::Drop:
                // stall past any polite client timeout, then answer nothing
                std::this_thread::sleep_for(std::chrono::milliseconds(drop_stall_ms_));
                res.status = 204;
                break;
        }
    };

    impl_->server.Get(R"(/auction/(.+))", [serve](const httplib::Request& req,
                                                  httplib::Response& res) {
        serve("/auction/" + req.matches[1].str(), res);
    });
    impl_->server.Get("/search", [serve](const httplib::Request& req, httplib::Response& res) {
        serve("/search?album=" + req.get_param_value("album"), res);
    });
    impl_->server.Get("/quotes", [serve](const httplib::Request& req, httplib::Response& res) {
        serve("/quotes?product=" + req.get_param_value("product"), res);
    });
    impl_->server.Get(R"(/retailer/(.+))", [serve](const httplib::Request& req,
                                                   httplib::Response& res) {
        serve("/retailer/" + req.matches[1].str(), res);
    });

    impl_->server.Get("/ctl/now", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(std::to_string(service_.now()), "text/plain");
    });
    impl_->server.Get("/ctl/advance", [this](const httplib::Request& req,
                                             httplib::Response& res) {
        auto to = to_i64(req.get_param_value("to"));
        if (!to) {
            res.status = 400;
            res.set_content("advance needs to=<seconds>", "text/plain");
            return;
        }
        service_.advance_to(*to);
        res.set_content(std::to_string(service_.now()), "text/plain");
    });
    impl_->server.Get("/ctl/next_event", [this](const httplib::Request& req,
                                                httplib::Response& res) {
        auto after = to_i64(req.get_param_value("after"));
        std::string target = req.get_param_value("target");
        if (!after || target.empty()) {
            res.status = 400;
            res.set_content("next_event needs target= and after=", "text/plain");
            return;
        }
        auto e = service_.next_event_after(target, *after);
        if (!e) {
            res.status = 404;
            res.set_content("none", "text/plain");
            return;
        }
        res.set_content(std::to_string(*e), "text/plain");
    });
    impl_->server.Get("/ctl/inject", [this](const httplib::Request& req,
                                            httplib::Response& res) {
        auto count = to_i64(req.get_param_value("count"));
        std::string mode = req.get_param_value("mode");
        if (!count) {
            res.status = 400;
            res.set_content("inject needs count=<n>", "text/plain");
            return;
        }
        try {
            service_.inject(mode, static_cast<int>(*count));
        } catch (const ConfigError& e) {
            res.status = 400;
            res.set_content(e.what(), "text/plain");
            return;
        }
        res.set_content("armed", "text/plain");
    });
    impl_->server.Get("/ctl/targets", [this](const httplib::Request&, httplib::Response& res) {
        std::string body;
        for (const auto& t : service_.targets()) {
            body += t;
            body += "\n";
        }
        res.set_content(body, "text/plain");
    });

    port_ = impl_->server.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw DataError("could not bind a local port for the market service");
    runner_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void HttpService::stop() {
    if (!runner_.joinable()) return;
    impl_->server.stop();
    runner_.join();
}

std::vector<std::int64_t> HttpService::page_hits_ms() const {
    std::lock_guard<std::mutex> lock(impl_->mu);
    return impl_->page_hits_ms;
}

// ---------------------------------------------------------------------------
// Client side

struct HttpFetcher::Impl {
    httplib::Client client;
    Impl(const std::string& host, int port) : client(host, port) {}
};

HttpFetcher::HttpFetcher(const std::string& host, int port, int timeout_ms)
    : impl_(std::make_unique<Impl>(host, port)) {
    time_t sec = timeout_ms / 1000;
    time_t usec = (timeout_ms % 1000) * 1000;
    impl_->client.set_connection_timeout(sec, usec);
    impl_->client.set_read_timeout(sec, usec);
    impl_->client.set_keep_alive(true);
}

HttpFetcher::~HttpFetcher() = default;

harvest::FetchResult HttpFetcher::get(const std::string& path) {
    harvest::FetchResult out;
    httplib::Result res = impl_->client.Get(path);
    if (!res) {
        out.status = harvest::FetchStatus::Timeout;
        return out;
    }
    if (res->status >= 200 && res->status < 300) {
        out.status = harvest::FetchStatus::OK;
        out.bytes = res->body;
        if (res->has_header("X-Sim-Time"))
            out.market_time = to_i64(res->get_header_value("X-Sim-Time"));
        return out;
    }
    out.status = harvest::FetchStatus::ServerError;
    return out;
}

struct HttpClockControl::Impl {
    httplib::Client client;
    Impl(const std::string& host, int port) : client(host, port) {}
};

HttpClockControl::HttpClockControl(const std::string& host, int port)
    : impl_(std::make_unique<Impl>(host, port)) {
    impl_->client.set_keep_alive(true);
}

HttpClockControl::~HttpClockControl() = default;

Timestamp HttpClockControl::now() {
    httplib::Result res = impl_->client.Get("/ctl/now");
    if (!res || res->status != 200)
        throw DataError("market clock unreachable over /ctl/now");
    auto v = to_i64(res->body);
    if (!v) throw DataError("market clock spoke nonsense: '" + res->body + "'");
    return *v;
}

void HttpClockControl::advance_to(Timestamp t) {
    httplib::Result res = impl_->client.Get("/ctl/advance?to=" + std::to_string(t));
    if (!res || res->status != 200)
        throw DataError("market clock refused /ctl/advance");
}

struct HttpEventFeed::Impl {
    httplib::Client client;
    Impl(const std::string& host, int port) : client(host, port) {}
};

HttpEventFeed::HttpEventFeed(const std::string& host, int port)
    : impl_(std::make_unique<Impl>(host, port)) {
    impl_->client.set_keep_alive(true);
}

HttpEventFeed::~HttpEventFeed() = default;

std::optional<Timestamp> HttpEventFeed::next_event_after(const std::string& target,
                                                         Timestamp t) {
    httplib::Params params = {{"target", target}, {"after", std::to_string(t)}};
    httplib::Result res =
        impl_->client.Get("/ctl/next_event?" + httplib::detail::params_to_query_str(params));
    if (!res) throw DataError("event feed unreachable over /ctl/next_event");
    if (res->status == 404) return std::nullopt;
    if (res->status != 200) throw DataError("event feed refused: " + res->body);
    return to_i64(res->body);
}

}  // namespace marketbench::sim

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "marketbench/harvester.hpp"
#include "marketbench/simulator.hpp"

namespace marketbench::sim {

// HTTP face of the market service, for exercising the harvester over a real
// socket. Market pages live at the same paths Service::get understands, and
// every page response carries the market clock in an X-Sim-Time header.
// Control endpoints drive the simulation:
//   /ctl/now                          current market time
//   /ctl/advance?to=T                 move the market clock forward
//   /ctl/next_event?target=X&after=T  next page-changing instant (404: none)
//   /ctl/inject?mode=M&count=N        arm drop/error/garble failures
//   /ctl/targets                      newline-separated archive identifiers
// An injected "drop" stalls the response past any sane client timeout
// instead of answering, so clients experience a dead connection.
class HttpService {
public:
    explicit HttpService(Service& service, int drop_stall_ms = 2000);
    ~HttpService();

    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    void start();  // binds 127.0.0.1 on a free port; throws DataError on failure
    void stop();
    int port() const { return port_; }

    // steady-clock arrival instants (ms) of market-page requests, for
    // checking that a polite client never exceeded its rate budget
    std::vector<std::int64_t> page_hits_ms() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    Service& service_;
    int drop_stall_ms_;
    int port_ = -1;
    std::thread runner_;
};

// Fetcher over a real socket. Connection failures and timeouts report
// Timeout; 5xx and unknown paths report ServerError; 200 bodies come back
// verbatim (mangled payloads are classified downstream).
class HttpFetcher : public harvest::Fetcher {
public:
    HttpFetcher(const std::string& host, int port, int timeout_ms = 1000);
    ~HttpFetcher() override;

    harvest::FetchResult get(const std::string& path) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Clock control and event feed speaking to the /ctl endpoints, so capture
// loops can run against the HTTP service exactly as they do in-process.
class HttpClockControl : public harvest::ClockControl {
public:
    HttpClockControl(const std::string& host, int port);
    ~HttpClockControl() override;

    Timestamp now() override;          // throws DataError when unreachable
    void advance_to(Timestamp t) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

class HttpEventFeed : public harvest::EventFeed {
public:
    HttpEventFeed(const std::string& host, int port);
    ~HttpEventFeed() override;

    std::optional<Timestamp> next_event_after(const std::string& target, Timestamp t) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace marketbench::sim

// Command-line surface over the harvesting/cleansing/analysis workbench.
// Exit codes: 0 success, 1 usage or configuration error, 2 data error
// (review items, where applicable, are already on the queue).

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "marketbench/pipeline.hpp"
#include "marketbench/service_http.hpp"
#include "marketbench/simulator.hpp"
#include "marketbench/workbench.hpp"

namespace mb = marketbench;
using nlohmann::json;

namespace {

void print_outcome(const mb::wb::StageOutcome& o) {
    std::cout << o.stage << ": in=" << o.records_in << " out=" << o.records_out
              << " flags=" << o.flags_raised << '\n';
}

mb::Timestamp wall_now() {
    return static_cast<mb::Timestamp>(std::chrono::duration_cast<std::chrono::seconds>(
                                          std::chrono::system_clock::now().time_since_epoch())
                                          .count());
}

int run_simulate(const mb::wb::WorkbenchConfig& cfg, const std::string& dir) {
    mb::sim::SimMarket market = mb::sim::build_market(cfg.market, cfg.seed);
    json truth = json::array();
    for (const auto& log : market.auctions) {
        json winners = json::array();
        for (const auto& award : log.final_allocation.winners)
            winners.push_back({{"bidder_id", award.bidder_id},
                               {"price_paid", award.price_paid},
                               {"units", award.units_awarded}});
        truth.push_back({{"auction_id", log.auction.auction_id},
                         {"end_time", mb::format_timestamp(log.end_time)},
                         {"accepted_bids", log.accepted_bids().size()},
                         {"winners", std::move(winners)}});
    }
    mb::sim::Service service(std::move(market), 0);
    const std::filesystem::path out(dir);
    const int pages = mb::sim::dump_fixtures(service, out);
    std::ofstream truth_out(out / "truth.json", std::ios::binary | std::ios::trunc);
    truth_out << truth.dump(2) << '\n';
    std::cout << "wrote " << pages << " pages and truth.json under " << out.string() << '\n';
    return 0;
}

int run_serve(const mb::wb::WorkbenchConfig& cfg, int duration_ms) {
    mb::sim::SimMarket market = mb::sim::build_market(cfg.market, cfg.seed);
    mb::sim::Service service(std::move(market), 0);
    mb::sim::HttpService http(service);
    http.start();
    std::cout << "serving market on 127.0.0.1:" << http.port() << std::endl;
    if (duration_ms > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(duration_ms));
    } else {
        for (;;) std::this_thread::sleep_for(std::chrono::seconds(1));
    }
    http.stop();
    return 0;
}

std::filesystem::path resolve_record_file(const mb::wb::StoreLayout& layout,
                                          const std::string& name) {
    const std::filesystem::path direct(name);
    if (std::filesystem::exists(direct) && !std::filesystem::is_directory(direct)) return direct;
    for (const std::filesystem::path candidate :
         {layout.clean_file(name), layout.analysis_file(name), layout.collated_file(name),
          layout.extracted_file(name)})
        if (std::filesystem::exists(candidate)) return candidate;
    throw mb::DataError("no record file named " + name + " in " + layout.records_dir().string());
}

int run_query(const mb::wb::WorkbenchConfig& cfg, const std::string& name,
              const std::string& predicate) {
    const mb::wb::StoreLayout layout{cfg.out};
    const std::filesystem::path file = resolve_record_file(layout, name);
    for (const std::string& line : mb::wb::query_records(file, predicate)) std::cout << line << '\n';
    return 0;
}

int run_review(const mb::wb::WorkbenchConfig& cfg, const std::string& action,
               const std::string& id, const std::vector<std::string>& note_words) {
    const mb::wb::StoreLayout layout{cfg.out};
    mb::pipe::ReviewQueue queue(layout.review_file());
    if (action == "list") {
        for (const auto& item : queue.unresolved())
            std::cout << item.id << ' ' << mb::pipe::to_string(item.reason) << ' '
                      << item.record_ref << ' ' << item.detail << '\n';
        return 0;
    }
    if (action == "resolve") {
        if (id.empty()) throw mb::ConfigError("review resolve needs an item id");
        std::string note;
        for (const auto& w : note_words) {
            if (!note.empty()) note += ' ';
            note += w;
        }
        queue.resolve(id, note, wall_now());
        std::cout << "resolved " << id << '\n';
        return 0;
    }
    throw mb::ConfigError("review action must be list or resolve");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"market data harvesting, cleansing, and analysis workbench"};
    app.require_subcommand(1);

    std::string config_file;
    std::uint64_t seed_value = 0;
    std::string out_value;
    app.add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);
    CLI::Option* seed_opt = app.add_option("--seed", seed_value, "override the config seed");
    CLI::Option* out_opt = app.add_option("--out", out_value, "override the store directory");

    CLI::App* c_simulate = app.add_subcommand("simulate", "render market pages and ground truth");
    std::string sim_dir = "fixtures";
    c_simulate->add_option("--dir", sim_dir, "output directory for rendered pages");

    CLI::App* c_serve = app.add_subcommand("serve", "run the market simulator over HTTP");
    int serve_ms = 0;
    c_serve->add_option("--duration-ms", serve_ms, "stop after this long (0 = run until killed)");

    CLI::App* c_harvest = app.add_subcommand("harvest", "capture market pages into the raw archive");
    CLI::App* c_extract = app.add_subcommand("extract", "turn raw pages into typed records");
    CLI::App* c_cleanse = app.add_subcommand("cleanse", "validate, reconstruct, filter, and flag");
    CLI::App* c_analyze = app.add_subcommand("analyze", "collate aggregates and run the analyses");
    CLI::App* c_report = app.add_subcommand("report", "render CSV tables and plots");
    CLI::App* c_run = app.add_subcommand("run", "full pipeline end to end");

    CLI::App* c_query = app.add_subcommand("query", "filter a record file with a predicate");
    std::string query_file;
    std::string query_predicate;
    c_query->add_option("records", query_file, "record file name or path")->required();
    c_query->add_option("predicate", query_predicate,
                        "clauses like \"bid_count > 3 && valid == true\"");

    CLI::App* c_review = app.add_subcommand("review", "list or resolve flagged records");
    std::string review_action;
    std::string review_id;
    std::vector<std::string> review_note;
    c_review->add_option("action", review_action, "list | resolve")->required();
    c_review->add_option("id", review_id, "item id (for resolve)");
    c_review->add_option("note", review_note, "resolution note (for resolve)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        mb::wb::WorkbenchConfig cfg;
        if (!config_file.empty()) cfg = mb::wb::load_config(config_file);
        if (seed_opt->count() > 0) cfg.seed = seed_value;
        if (out_opt->count() > 0) cfg.out = out_value;
        mb::wb::validate_config(cfg);
        const mb::wb::StoreLayout layout{cfg.out};

        if (c_simulate->parsed()) return run_simulate(cfg, sim_dir);
        if (c_serve->parsed()) return run_serve(cfg, serve_ms);
        if (c_harvest->parsed()) {
            print_outcome(mb::wb::stage_harvest(cfg, layout));
            return 0;
        }
        if (c_extract->parsed()) {
            print_outcome(mb::wb::stage_extract(cfg, layout));
            return 0;
        }
        if (c_cleanse->parsed()) {
            print_outcome(mb::wb::stage_cleanse(cfg, layout));
            return 0;
        }
        if (c_analyze->parsed()) {
            print_outcome(mb::wb::stage_collate(cfg, layout));
            print_outcome(mb::wb::stage_analyze(cfg, layout));
            return 0;
        }
        if (c_report->parsed()) {
            print_outcome(mb::wb::stage_report(cfg, layout));
            return 0;
        }
        if (c_run->parsed()) {
            const mb::wb::RunManifest manifest = mb::wb::run_pipeline(cfg);
            std::cout << mb::wb::manifest_json(manifest) << '\n';
            return 0;
        }
        if (c_query->parsed()) return run_query(cfg, query_file, query_predicate);
        if (c_review->parsed()) return run_review(cfg, review_action, review_id, review_note);
        std::cerr << "no subcommand selected\n";
        return 1;
    } catch (const mb::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const mb::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

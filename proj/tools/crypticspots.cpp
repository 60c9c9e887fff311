// Batch entry point and session server.

#include <CLI11.hpp>

#include <pthread.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include "cryptic/config.hpp"
#include "cryptic/http_service.hpp"
#include "cryptic/pipeline.hpp"
#include "cryptic/session.hpp"

namespace {

using namespace cryptic;

const char* kFooter = R"(Outputs (under --out):
  signatures.json       signature cache, 12 sequences per photo
  similarities.csv      id,best_landmark,score,sim_<landmark>...
  memory_cells.json     CSAIM memory cells
  classification.csv    id,category,cell (empty = unrecognized)
  tree.json             GHSOM export
  tree.txt              GHSOM text rendering
  discovery.csv         id,unit,group,image_sim,csaim_category,tfidf,evaluation
  discovery_units.csv   unit,count,dominant,famous,cryptic,low_interest,mixed

Exit codes: 0 ok, 1 internal error, 2 bad input.)";

struct BatchOptions {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::string> sets;
};

void add_batch_options(CLI::App* cmd, BatchOptions& o) {
  cmd->add_option("--config", o.config, "INI config file")->required();
  cmd->add_option("--seed", o.seed, "64-bit seed")->required();
  cmd->add_option("--out", o.out, "output directory (overrides paths.out)");
  cmd->add_option("--set", o.sets, "override, section.key=value (repeatable)");
}

PipelineConfig load(const BatchOptions& o) {
  PipelineConfig cfg = load_config(o.config, o.sets);
  cfg.seed = o.seed;
  if (!o.out.empty()) cfg.out_dir = std::filesystem::absolute(o.out);
  if (cfg.out_dir.empty()) throw ConfigError("no output directory: pass --out or set paths.out");
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cryptic sightseeing spot discovery: signatures, CSAIM, GHSOM, discovery."};
  app.footer(kFooter);
  app.require_subcommand(1);

  BatchOptions opts;
  using Command = int (*)(const PipelineConfig&, std::ostream&);
  struct Entry {
    const char* name;
    const char* help;
    Command fn;
  };
  const Entry entries[] = {
      {"signatures", "photo signatures and landmark similarities", &cmd_signatures},
      {"csaim", "train memory cells on exemplars, classify photos", &cmd_csaim},
      {"ghsom", "grow the GHSOM over record features", &cmd_ghsom},
      {"discover", "label records and units", &cmd_discover},
      {"pipeline", "all four stages in order", &cmd_pipeline},
  };
  Command chosen = nullptr;
  for (const auto& e : entries) {
    auto* sub = app.add_subcommand(e.name, e.help);
    add_batch_options(sub, opts);
    sub->callback([&chosen, fn = e.fn] { chosen = fn; });
  }

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string snapshot_dir;
  std::string port_file;
  auto* serve = app.add_subcommand("serve", "HTTP session service for the explorer");
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port, 0 picks a free one");
  serve->add_option("--snapshot-dir", snapshot_dir, "write session snapshots here on shutdown");
  serve->add_option("--port-file", port_file, "write the bound port to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadInput;
  }

  if (chosen) {
    try {
      return chosen(load(opts), std::cerr);
    } catch (const std::exception& e) {
      std::cerr << "config: " << e.what() << "\n";
      return exit_code_for(e);
    }
  }

  // SIGINT/SIGTERM are taken by a waiter thread, which stops the server so
  // snapshots can be written from the main thread.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  SessionStore store;
  HttpService service(store);
  const int bound = service.bind(host, port);
  if (bound < 0) {
    std::cerr << "serve: cannot bind " << host << ":" << port << "\n";
    return kExitBadInput;
  }
  if (!port_file.empty()) std::ofstream(port_file) << bound << "\n";
  std::cerr << "serve: listening on " << host << ":" << bound << "\n";
  std::thread([&service, stop_signals] {
    int sig = 0;
    sigwait(&stop_signals, &sig);
    service.stop();
  }).detach();
  service.run();
  if (!snapshot_dir.empty()) {
    try {
      store.snapshot_to(snapshot_dir);
      std::cerr << "serve: snapshots written to " << snapshot_dir << "\n";
    } catch (const std::exception& e) {
      std::cerr << "serve: snapshot failed: " << e.what() << "\n";
      return kExitInternal;
    }
  }
  return kExitOk;
}

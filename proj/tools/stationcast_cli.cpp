#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stationcast/stationcast.hpp"

namespace fs = std::filesystem;
using namespace stationcast;

namespace {

// One command at a time per workdir. The lock file carries the owner pid so a
// lock left by a dead process is reclaimed.
class WorkdirLock {
 public:
  explicit WorkdirLock(const fs::path& path) : path_(path) { acquire(); }
  ~WorkdirLock() {
    if (held_) ::unlink(path_.c_str());
  }
  WorkdirLock(const WorkdirLock&) = delete;
  WorkdirLock& operator=(const WorkdirLock&) = delete;

 private:
  void acquire() {
    for (int attempt = 0; attempt < 2; ++attempt) {
      int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
      if (fd >= 0) {
        const std::string pid = std::to_string(::getpid()) + "\n";
        ssize_t ignored = ::write(fd, pid.c_str(), pid.size());
        (void)ignored;
        ::close(fd);
        held_ = true;
        return;
      }
      std::ifstream in(path_);
      long pid = 0;
      if (in >> pid; pid > 0 && ::kill(static_cast<pid_t>(pid), 0) == 0) {
        throw InputError("workdir is locked by running process " + std::to_string(pid) +
                         " (" + path_.string() + ")");
      }
      ::unlink(path_.c_str());
    }
    throw InputError("cannot acquire workdir lock " + path_.string());
  }

  fs::path path_;
  bool held_ = false;
};

int dispatch(const std::string& command, const pipeline::RunConfig& rc, bool force) {
  if (command == "ingest") pipeline::run_ingest(rc, force, std::cout);
  else if (command == "access") pipeline::run_access(rc, force, std::cout);
  else if (command == "graph") pipeline::run_graph(rc, force, std::cout);
  else if (command == "train") pipeline::run_train(rc, force, std::cout);
  else if (command == "eval") pipeline::run_eval(rc, force, std::cout);
  else if (command == "predict") pipeline::run_predict(rc, force, std::cout);
  else if (command == "synth") pipeline::run_synth(rc, force, std::cout);
  else if (command == "grad-check") return pipeline::run_grad_check(rc, std::cout) ? 0 : 3;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"station-level bike-share demand forecasting pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, workdir;
  std::int64_t seed = 0;
  bool force = false;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "TOML config file");
  auto* seed_opt = app.add_option("--seed", seed, "override the global seed");
  auto* workdir_opt = app.add_option("--workdir", workdir, "override the working directory");
  app.add_flag("--force", force, "re-run stages even when cached results are current");
  app.add_option("--set", overrides, "override a config key (key=value, repeatable)");

  for (const char* name : {"ingest", "access", "graph", "train", "eval", "predict",
                           "synth", "grad-check"}) {
    app.add_subcommand(name);
  }
  app.get_subcommand("ingest")->description("aggregate trips and weather into tensors");
  app.get_subcommand("access")->description("cumulative-opportunity access per station");
  app.get_subcommand("graph")->description("build correlation adjacency matrices");
  app.get_subcommand("train")->description("train the configured model");
  app.get_subcommand("eval")->description("evaluate requested models on the test split");
  app.get_subcommand("predict")->description("forecast the next slot from a checkpoint");
  app.get_subcommand("synth")->description("generate the planted-structure dataset");
  app.get_subcommand("grad-check")->description("finite-difference gradient audit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    config::Config cfg = config_path.empty() ? config::Config()
                                             : config::Config::parse_file(config_path);
    for (const std::string& kv : overrides) {
      const std::size_t eq = kv.find('=');
      if (eq == std::string::npos || eq == 0)
        throw ConfigError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed_opt->count() > 0) cfg.set("seed", std::to_string(seed));
    if (workdir_opt->count() > 0) cfg.set("paths.workdir", workdir);

    pipeline::RunConfig rc = pipeline::RunConfig::from(std::move(cfg));
    fs::create_directories(rc.wd());
    WorkdirLock lock(rc.wd() / ".lock");

    return dispatch(app.get_subcommands().front()->get_name(), rc, force);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

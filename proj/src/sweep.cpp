#include "wormsim/sweep.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <map>
#include <vector>

#include <spdlog/spdlog.h>

#include "wormsim/io.hpp"

extern char** environ;

namespace wormsim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_manifest(const fs::path& path, const std::string& hash, const json& runs) {
  write_json_atomic(path, {{"version", 1}, {"config_hash", hash}, {"runs", runs}});
}

void check_writable(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path probe = dir / ".write_probe";
  const int fd = ::open(probe.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (ec || fd < 0)
    throw std::runtime_error("output directory '" + dir.string() + "' is not writable");
  ::close(fd);
  fs::remove(probe);
}

pid_t spawn_run(const fs::path& exe, const std::vector<std::string>& args, const fs::path& log) {
  std::vector<char*> argv;
  argv.push_back(const_cast<char*>(exe.c_str()));
  for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log.c_str(),
                                   O_WRONLY | O_CREAT | O_APPEND, 0644);
  posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
  pid_t pid{};
  const int rc = posix_spawn(&pid, exe.c_str(), &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) throw std::runtime_error("cannot start '" + exe.string() + "': " + std::strerror(rc));
  return pid;
}

}  // namespace

SweepSummary run_sweep(const ExperimentConfig& config, const SweepOptions& options) {
  config.validate();
  if (options.workers < 1) throw ConfigError("--workers must be >= 1");
  const fs::path manifest_path = options.out / "manifest.json";
  const std::string hash = config_hash(config);

  json previous;
  if (fs::exists(manifest_path)) {
    if (!options.resume)
      throw ConfigError("'" + options.out.string() +
                        "' already holds a sweep; pass --resume to continue it");
    previous = read_json(manifest_path);
    const auto stored = previous.at("config_hash").get<std::string>();
    if (stored != hash)
      throw ConfigError("config hash " + hash + " differs from the sweep manifest (" + stored +
                        "); refusing to resume");
  }
  check_writable(options.out);
  save_config(config, options.out / "config.json");

  const fs::path exe =
      options.executable.empty() ? fs::read_symlink("/proc/self/exe") : options.executable;
  const auto specs = expand_runs(config);

  std::map<std::string, std::string> prior_status;
  if (previous.contains("runs"))
    for (const auto& r : previous.at("runs"))
      prior_status[r.at("run_id").get<std::string>()] = r.at("status").get<std::string>();

  json runs = json::array();
  SweepSummary summary;
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto id = specs[i].run_id();
    const bool done = prior_status.count(id) && prior_status[id] == "completed";
    runs.push_back({{"run_id", id},
                    {"seed", specs[i].seed},
                    {"target", specs[i].target},
                    {"adaptation", specs[i].adaptation},
                    {"dir", "runs/" + id},
                    {"status", done ? "completed" : "pending"}});
    if (done)
      ++summary.skipped;
    else
      pending.push_back(i);
  }
  write_manifest(manifest_path, hash, runs);

  std::map<pid_t, std::size_t> active;
  std::size_t next = 0;
  while (next < pending.size() || !active.empty()) {
    while (next < pending.size() && static_cast<int>(active.size()) < options.workers) {
      const std::size_t i = pending[next++];
      const auto& s = specs[i];
      const fs::path dir = options.out / "runs" / s.run_id();
      fs::create_directories(dir);
      std::vector<std::string> args{"train",
                                    "--config", (options.out / "config.json").string(),
                                    "--seed", std::to_string(s.seed),
                                    "--target", std::to_string(s.target),
                                    "--adaptation", s.adaptation ? "on" : "off",
                                    "--out", dir.string()};
      // a directory left by an interrupted attempt is continued, never clobbered
      if (options.resume || fs::exists(dir / "run.json")) args.push_back("--resume");
      try {
        const pid_t pid = spawn_run(exe, args, dir / "log.txt");
        active[pid] = i;
        runs[i]["status"] = "running";
        spdlog::info("started {} (pid {})", s.run_id(), pid);
      } catch (const std::exception& e) {
        runs[i]["status"] = "failed";
        runs[i]["error"] = e.what();
        ++summary.failed;
        spdlog::error("{}: {}", s.run_id(), e.what());
      }
      write_manifest(manifest_path, hash, runs);
    }
    if (active.empty()) continue;

    int status = 0;
    const pid_t pid = ::waitpid(-1, &status, 0);
    if (pid < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("waitpid failed: ") + std::strerror(errno));
    }
    const auto it = active.find(pid);
    if (it == active.end()) continue;
    const std::size_t i = it->second;
    active.erase(it);
    const bool ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;
    runs[i]["status"] = ok ? "completed" : "failed";
    if (WIFEXITED(status))
      runs[i]["exit_code"] = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
      runs[i]["signal"] = WTERMSIG(status);
    if (ok) {
      ++summary.completed;
      spdlog::info("{} completed", runs[i]["run_id"].get<std::string>());
    } else {
      ++summary.failed;
      spdlog::error("{} failed; see {}/log.txt", runs[i]["run_id"].get<std::string>(),
                    runs[i]["dir"].get<std::string>());
    }
    write_manifest(manifest_path, hash, runs);
  }
  return summary;
}

}  // namespace wormsim

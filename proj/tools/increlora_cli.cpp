// increlora: train, evaluate and verify incremental low-rank adapters.
//
// Exit codes: 0 ok, 1 verification failed, 2 invalid config, 3 runtime error.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "increlora/compare.hpp"
#include "increlora/errors.hpp"
#include "increlora/gradcheck.hpp"
#include "increlora/records.hpp"
#include "increlora/replay.hpp"
#include "increlora/reports.hpp"
#include "increlora/stats.hpp"
#include "increlora/trainer.hpp"

namespace fs = std::filesystem;
using namespace increlora;

namespace {

constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

void setup_logging() {
  spdlog::set_level(spdlog::level::warn);
  const char* env = std::getenv("INCRELORA_LOG");
  if (env == nullptr) return;
  const std::string level = env;
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::warn("ignoring INCRELORA_LOG={} (expected error, info or debug)", level);
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

TrainConfig config_with_seed(const std::string& path, std::optional<std::uint64_t> seed) {
  TrainConfig cfg = load_config(path);
  if (seed) cfg.seed = *seed;
  return resolve(cfg);
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& out_dir) {
  const TrainConfig cfg = config_with_seed(config_path, seed);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  const auto started = std::chrono::system_clock::now();

  write_text(dir / "resolved-config.json", to_json(cfg).dump(2) + "\n");
  spdlog::info("training {} for {} steps (seed {})", to_string(cfg.mode), cfg.total_steps, cfg.seed);
  const TrainResult res = train(cfg);

  std::vector<nlohmann::json> lines;
  for (const auto& m : res.metrics) lines.push_back(metrics_json(m));
  write_jsonl((dir / "metrics.jsonl").string(), lines);
  lines.clear();
  for (const auto& e : res.events) lines.push_back(event_json(e));
  write_jsonl((dir / "events.jsonl").string(), lines);
  lines.clear();
  for (const auto& s : res.schedules) lines.push_back(schedule_json(s));
  write_jsonl((dir / "schedules.jsonl").string(), lines);

  save_checkpoint(res.final_checkpoint, (dir / "checkpoint.bin").string());
  save_checkpoint(res.best_checkpoint, (dir / "best.bin").string());

  const auto ranks = deployed_ranks(res);
  write_text(dir / "rank_report.csv", rank_report(ranks, cfg.task.module_types).to_csv());
  write_text(dir / "rank_trajectory.csv", rank_trajectory_csv(cfg.modules(), res.events));
  write_text(dir / "lambda_hist.csv", lambda_histogram(res.final_checkpoint).to_csv());

  const auto finished = std::chrono::system_clock::now();
  const nlohmann::json info = {
      {"started_unix", std::chrono::duration_cast<std::chrono::seconds>(started.time_since_epoch()).count()},
      {"finished_unix", std::chrono::duration_cast<std::chrono::seconds>(finished.time_since_epoch()).count()},
      {"wall_seconds", std::chrono::duration<double>(finished - started).count()},
  };
  write_text(dir / "run-info.json", info.dump(2) + "\n");

  std::size_t deployed = 0;
  for (std::size_t r : ranks) deployed += r;
  std::cout << "final eval " << std::setprecision(10) << res.final_eval << " (best " << res.best_eval
            << ")\n"
            << "deployed rank total " << deployed << ", with masked reserves "
            << (res.phase == Phase::Closed ? deployed + cfg.modules() : deployed) << '\n'
            << "wrote " << dir.string() << '\n';
  return kOk;
}

int cmd_evaluate(const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::string& checkpoint_path) {
  const TrainConfig cfg = config_with_seed(config_path, seed);
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  std::cout << std::setprecision(12) << evaluate(ck, cfg) << '\n';
  return kOk;
}

int cmd_check_grad(std::uint64_t seed, std::size_t seeds) {
  const auto rep = gradcheck::run(seed, seeds);
  std::cout << std::left << std::setw(16) << "parameter" << std::setw(10) << "arrays"
            << "max rel error\n";
  for (const auto& r : rep.rows) {
    std::cout << std::setw(16) << r.name << std::setw(10) << r.arrays << std::scientific
              << std::setprecision(3) << r.max_rel_error << std::defaultfloat
              << (r.max_rel_error < rep.tolerance ? "" : "  FAIL") << '\n';
  }
  if (rep.passed()) {
    std::cout << "all below " << rep.tolerance << '\n';
    return kOk;
  }
  std::cout << "worst offenders:\n";
  for (const auto& r : rep.rows) {
    if (r.max_rel_error >= rep.tolerance) std::cout << "  " << r.name << ": " << r.worst << '\n';
  }
  return kVerifyFailed;
}

int cmd_replay(const std::string& events_path, const std::string& config_path) {
  const TrainConfig cfg = load_config(config_path);
  const auto logged = read_events(events_path);
  const ReplayReport rep = replay(cfg, logged);
  if (rep.identical) {
    std::cout << "replay identical: " << logged.size() << " events\n";
    return kOk;
  }
  std::cout << "replay diverged at event " << rep.first_divergence.value_or(0) << ": " << rep.message
            << '\n';
  return kVerifyFailed;
}

int cmd_compare(const std::string& a_path, const std::string& b_path, std::size_t seeds,
                std::uint64_t base_seed, const std::string& out_path) {
  const TrainConfig a = load_config(a_path);
  const TrainConfig b = load_config(b_path);
  const CompareReport rep = compare(a, b, seeds, base_seed);
  const auto j = rep.to_json();
  if (!out_path.empty()) write_text(out_path, j.dump(2) + "\n");
  std::cout << j.dump(2) << '\n';
  return kOk;
}

int cmd_ablate_regu(const std::string& config_path, std::size_t seeds, std::uint64_t base_seed) {
  const TrainConfig base = load_config(config_path);
  nlohmann::json out = nlohmann::json::array();
  for (double gamma : {0.0, 0.01, 0.1, 1.0}) {
    std::vector<double> evals(seeds);
    std::vector<double> regu(seeds);
    const auto count = static_cast<long long>(seeds);
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < count; ++i) {
      TrainConfig cfg = base;
      cfg.regu_weight = gamma;
      cfg.seed = base_seed + static_cast<std::uint64_t>(i);
      const TrainResult r = train(cfg);
      evals[static_cast<std::size_t>(i)] = r.final_eval;
      regu[static_cast<std::size_t>(i)] = r.metrics.back().regu_loss;
    }
    const Summary s = summarize(evals);
    out.push_back({{"regu_weight", gamma},
                   {"eval_median", s.median},
                   {"eval_q1", s.q1},
                   {"eval_q3", s.q3},
                   {"final_regu_loss_median", quantile(regu, 0.5)}});
  }
  std::cout << out.dump(2) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Incremental rank allocation for low-rank adapters"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir = "run";
  std::optional<std::uint64_t> seed;
  auto* train_cmd = app.add_subcommand("train", "train a model and write run artifacts");
  train_cmd->add_option("config", config, "config JSON")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--seed", seed, "override the config seed");
  train_cmd->add_option("--out", out_dir, "output directory");

  std::string checkpoint;
  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint on the config's task");
  eval_cmd->add_option("config", config, "config JSON the checkpoint was trained with")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("checkpoint", checkpoint, "checkpoint.bin")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--seed", seed, "seed override used at training time");

  std::uint64_t grad_seed = 0;
  std::size_t grad_seeds = 10;
  auto* grad_cmd = app.add_subcommand("check-grad", "finite-difference gradient verification");
  grad_cmd->add_option("--seed", grad_seed, "first seed");
  grad_cmd->add_option("--seeds", grad_seeds, "number of seeds")->check(CLI::PositiveNumber);

  std::string events;
  auto* replay_cmd = app.add_subcommand("replay", "re-simulate the allocator from an event log");
  replay_cmd->add_option("events", events, "events.jsonl")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("config", config, "resolved-config.json of the run")->required()->check(CLI::ExistingFile);

  std::string config_b;
  std::size_t seeds = 5;
  std::uint64_t base_seed = 0;
  std::string report;
  auto* cmp_cmd = app.add_subcommand("compare", "train two configs over several seeds");
  cmp_cmd->add_option("config_a", config, "first config")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("config_b", config_b, "second config")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--seeds", seeds, "number of seeds")->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--base-seed", base_seed, "first seed");
  cmp_cmd->add_option("--report", report, "also write the JSON report here");

  auto* abl_cmd = app.add_subcommand("ablate-regu", "sweep the orthogonality weight over {0, 0.01, 0.1, 1}");
  abl_cmd->add_option("config", config, "config JSON")->required()->check(CLI::ExistingFile);
  abl_cmd->add_option("--seeds", seeds, "number of seeds")->check(CLI::PositiveNumber);
  abl_cmd->add_option("--base-seed", base_seed, "first seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*train_cmd) return cmd_train(config, seed, out_dir);
    if (*eval_cmd) return cmd_evaluate(config, seed, checkpoint);
    if (*grad_cmd) return cmd_check_grad(grad_seed, grad_seeds);
    if (*replay_cmd) return cmd_replay(events, config);
    if (*cmp_cmd) return cmd_compare(config, config_b, seeds, base_seed, report);
    if (*abl_cmd) return cmd_ablate_regu(config, seeds, base_seed);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kConfigError;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}

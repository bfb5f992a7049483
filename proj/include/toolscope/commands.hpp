#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "toolscope/agent.hpp"
#include "toolscope/config.hpp"
#include "toolscope/rewards.hpp"

namespace toolscope {

namespace commanddetail {

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string format_double_csv(double v) {
  std::ostringstream out;
  out.precision(12);
  out << v;
  return out.str();
}

}  // namespace commanddetail

/// One end-to-end episode for a task under a policy: fresh registry (honoring
/// the task's server allowlist), fresh LLM endpoint, catalog loaded from disk.
inline Trajectory run_one_episode(const RunConfig& config, const TaskRecord& task,
                                  ExposurePolicy policy, int rollout) {
  auto registry = build_registry(config, task.servers);
  SignatureIndex signatures(*registry);
  OutputCatalog catalog;
  catalog.load(config.catalog_dir);

  EpisodeRuntime rt;
  rt.registry = registry.get();
  rt.signatures = &signatures;
  rt.catalog = &catalog;
  rt.limits = config.limits;
  rt.truncation.strategy = config.truncation_strategy;
  rt.truncation.unit = config.truncation_unit;
  rt.truncation.limit = config.limits.max_response_tokens;

  EpisodeConfig episode;
  episode.task_id = task.id;
  episode.trajectory_id = task.id + "_r" + std::to_string(rollout);
  episode.task = task.task;
  episode.concrete_task = task.concrete_task;
  episode.policy = policy;
  episode.limits = config.limits;

  auto llm = make_llm(config.agent_llm, policy);
  return run_episode(rt, episode, *llm);
}

// ---------------------------------------------------------------------------
// run

inline int cmd_run(const RunConfig& config, const std::string& tasks_path,
                   std::ostream& out = std::cout) {
  std::vector<TaskRecord> tasks;
  try {
    tasks = load_tasks(tasks_path);
  } catch (const Error& e) {
    out << "error: " << e.what() << "\n";
    return 2;
  }
  std::filesystem::create_directories(config.trajectories_dir);

  struct Job {
    TaskRecord task;
    int rollout;
  };
  std::vector<Job> jobs;
  for (const TaskRecord& task : tasks)
    for (int r = 0; r < config.rollouts; ++r) jobs.push_back({task, r});

  struct Row {
    std::string line;
    bool failed = false;
  };
  std::vector<Row> rows(jobs.size());

  std::mutex queue_mutex;
  std::size_t next_job = 0;
  auto worker = [&]() {
    while (true) {
      std::size_t index;
      {
        std::lock_guard lock(queue_mutex);
        if (next_job >= jobs.size()) return;
        index = next_job++;
      }
      const Job& job = jobs[index];
      Row& row = rows[index];
      try {
        Trajectory traj = run_one_episode(config, job.task, config.policy, job.rollout);
        const std::filesystem::path file =
            std::filesystem::path(config.trajectories_dir) / (traj.trajectory_id + ".jsonl");
        write_trajectory_jsonl(traj, file);
        write_mask_jsonl(traj, file.string() + ".mask.jsonl");
        std::ostringstream line;
        line << traj.task_id << " " << traj.trajectory_id << " policy=" << policy_name(traj.policy)
             << " termination=" << termination_name(traj.termination)
             << " tool_calls=" << traj.tool_call_count << " model_turns=" << traj.model_turn_count
             << " ledger=" << (traj.ledger_series.empty() ? 0 : traj.ledger_series.back()) << " -> "
             << file.string();
        row.line = line.str();
        row.failed = traj.termination == Termination::ErrorStall;
      } catch (const std::exception& e) {
        row.line = job.task.id + " rollout " + std::to_string(job.rollout) + " failed: " + e.what();
        row.failed = true;
      }
    }
  };

  const int threads = std::min<int>(config.parallelism, static_cast<int>(jobs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  bool any_failed = false;
  for (const Row& row : rows) {
    out << row.line << "\n";
    any_failed = any_failed || row.failed;
  }
  return any_failed ? 1 : 0;
}

// ---------------------------------------------------------------------------
// compare

inline int cmd_compare(const RunConfig& config, const std::string& tasks_path,
                       const std::vector<ExposurePolicy>& policies, const std::string& out_dir,
                       std::ostream& out = std::cout) {
  if (policies.size() < 2) {
    out << "error: compare needs at least 2 policies\n";
    return 2;
  }
  std::vector<TaskRecord> tasks;
  try {
    tasks = load_tasks(tasks_path);
  } catch (const Error& e) {
    out << "error: " << e.what() << "\n";
    return 2;
  }

  std::string compare_csv = "task_id,policy,final_ledger_tokens,tool_calls,model_turns,termination\n";
  std::string series_csv = "task_id,policy,turn,ledger_tokens\n";
  std::string summary;
  bool any_failed = false;

  for (const TaskRecord& task : tasks) {
    for (ExposurePolicy policy : policies) {
      try {
        Trajectory traj = run_one_episode(config, task, policy, 0);
        const std::size_t ledger = traj.ledger_series.empty() ? 0 : traj.ledger_series.back();
        compare_csv += commanddetail::csv_escape(task.id) + "," + policy_name(policy) + "," +
                       std::to_string(ledger) + "," + std::to_string(traj.tool_call_count) + "," +
                       std::to_string(traj.model_turn_count) + "," +
                       termination_name(traj.termination) + "\n";
        for (std::size_t turn = 0; turn < traj.ledger_series.size(); ++turn) {
          series_csv += commanddetail::csv_escape(task.id) + "," + policy_name(policy) + "," +
                        std::to_string(turn) + "," + std::to_string(traj.ledger_series[turn]) + "\n";
        }
        summary += task.id + " " + policy_name(policy) + ": ledger=" + std::to_string(ledger) +
                   " tool_calls=" + std::to_string(traj.tool_call_count) + " termination=" +
                   termination_name(traj.termination) + "\n";
        any_failed = any_failed || traj.termination == Termination::ErrorStall;
      } catch (const std::exception& e) {
        summary += task.id + " " + policy_name(policy) + ": failed: " + e.what() + "\n";
        any_failed = true;
      }
    }
  }

  const std::filesystem::path dir(out_dir);
  commanddetail::write_text_file(dir / "compare.csv", compare_csv);
  commanddetail::write_text_file(dir / "ledger_series.csv", series_csv);
  commanddetail::write_text_file(dir / "summary.txt", summary);
  out << summary;
  out << "wrote " << (dir / "compare.csv").string() << "\n";
  return any_failed ? 1 : 0;
}

// ---------------------------------------------------------------------------
// rubric-gen

inline int cmd_rubric_gen(const RunConfig& config, const std::string& tasks_path,
                          std::ostream& out = std::cout) {
  std::vector<TaskRecord> tasks;
  try {
    tasks = load_tasks(tasks_path);
  } catch (const Error& e) {
    out << "error: " << e.what() << "\n";
    return 2;
  }
  RubricStore store{std::filesystem::path(config.rubrics_dir)};
  int written = 0, skipped = 0, failed = 0;
  for (const TaskRecord& task : tasks) {
    if (store.exists(task.id)) {
      ++skipped;
      continue;
    }
    try {
      // Available tool context: the compact names-only blocks for the task's servers.
      auto registry = build_registry(config, task.servers);
      std::string tool_context;
      for (const std::string& server : registry->server_names()) {
        if (!tool_context.empty()) tool_context += "\n\n";
        tool_context += render_tool_names(*registry, server);
      }
      auto generator = make_llm(config.generator_llm, config.policy);
      Rubric rubric = generate_rubric(task.id, task.task, tool_context, task.solution, *generator);
      store.put(rubric);
      ++written;
    } catch (const std::exception& e) {
      out << "rubric generation failed for task " << task.id << ": " << e.what() << "\n";
      ++failed;
    }
  }
  out << "rubrics written=" << written << " skipped=" << skipped << " failed=" << failed << "\n";
  return failed > 0 ? 1 : 0;
}

// ---------------------------------------------------------------------------
// eval

inline int cmd_eval(const RunConfig& config, const std::string& trajectories_dir,
                    const std::string& mode, const std::string& out_dir,
                    std::ostream& out = std::cout) {
  if (mode != "rubric" && mode != "generic") {
    out << "error: --mode must be rubric or generic\n";
    return 2;
  }
  std::vector<std::filesystem::path> files;
  if (std::filesystem::exists(trajectories_dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(trajectories_dir)) {
      const std::string name = entry.path().filename().string();
      if (entry.path().extension() == ".jsonl" && name.find(".mask.") == std::string::npos)
        files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) out << "warning: no trajectories found in " << trajectories_dir << "\n";

  std::vector<Trajectory> trajectories;
  for (const auto& file : files) trajectories.push_back(read_trajectory_jsonl(file));

  bool any_failed = false;
  std::string csv;

  if (mode == "generic") {
    csv = "task_id,trajectory_id,task_fulfillment,grounding,tool_appropriateness,"
          "parameter_accuracy,dependency_awareness,parallelism_and_efficiency\n";
    for (const Trajectory& traj : trajectories) {
      try {
        auto judge = make_llm(config.judge_llm, traj.policy);
        GenericJudgeResult result =
            generic_judge_metrics(traj, traj.task, traj.concrete_task, *judge);
        csv += commanddetail::csv_escape(traj.task_id) + "," +
               commanddetail::csv_escape(traj.trajectory_id);
        for (const std::string& key : generic_metric_keys())
          csv += "," + commanddetail::format_double_csv(result.scores.at(key));
        csv += "\n";
      } catch (const std::exception& e) {
        out << "judge failed for " << traj.trajectory_id << ": " << e.what() << "\n";
        any_failed = true;
      }
    }
  } else {
    csv = "task_id,trajectory_id";
    for (int i = 1; i <= 12; ++i) csv += ",d" + std::to_string(i);
    csv += ",S_TF,S_TA,S_TG,S_PA,R,advantage\n";

    RubricStore store{std::filesystem::path(config.rubrics_dir)};
    // Group rollouts by task in file order; every trajectory of a task is
    // scored against the identical stored rubric.
    std::vector<std::string> task_order;
    std::map<std::string, std::vector<const Trajectory*>> groups;
    for (const Trajectory& traj : trajectories) {
      if (!groups.count(traj.task_id)) task_order.push_back(traj.task_id);
      groups[traj.task_id].push_back(&traj);
    }
    for (const std::string& task_id : task_order) {
      Rubric rubric;
      try {
        rubric = store.load(task_id);
      } catch (const Error& e) {
        out << "missing rubric for task " << task_id << ": " << e.what() << "\n";
        any_failed = true;
        continue;
      }
      std::vector<CriterionScores> all_scores;
      std::vector<RewardBreakdown> all_rewards;
      std::vector<const Trajectory*> scored;
      for (const Trajectory* traj : groups[task_id]) {
        try {
          auto judge = make_llm(config.judge_llm, traj->policy);
          CriterionScores scores = score_trajectory(rubric, *traj, *judge);
          all_rewards.push_back(composite_reward(rubric, scores, config.alpha));
          all_scores.push_back(std::move(scores));
          scored.push_back(traj);
        } catch (const std::exception& e) {
          out << "judge failed for " << traj->trajectory_id << ": " << e.what() << "\n";
          any_failed = true;
        }
      }
      std::vector<double> advantages(scored.size(), 0.0);
      if (scored.size() >= 2) {
        std::vector<double> rewards;
        for (const RewardBreakdown& r : all_rewards) rewards.push_back(r.reward);
        advantages = group_advantages(std::move(rewards), task_id).advantages;
      }
      for (std::size_t i = 0; i < scored.size(); ++i) {
        csv += commanddetail::csv_escape(task_id) + "," +
               commanddetail::csv_escape(scored[i]->trajectory_id);
        for (double d : all_scores[i].d) csv += "," + commanddetail::format_double_csv(d);
        csv += "," + commanddetail::format_double_csv(all_rewards[i].s_tf);
        csv += "," + commanddetail::format_double_csv(all_rewards[i].s_ta);
        csv += "," + commanddetail::format_double_csv(all_rewards[i].s_tg);
        csv += "," + commanddetail::format_double_csv(all_rewards[i].s_pa);
        csv += "," + commanddetail::format_double_csv(all_rewards[i].reward);
        csv += "," + (scored.size() >= 2 ? commanddetail::format_double_csv(advantages[i])
                                         : std::string(""));
        csv += "\n";
      }
    }
  }

  commanddetail::write_text_file(std::filesystem::path(out_dir) / "rewards.csv", csv);
  out << "wrote " << (std::filesystem::path(out_dir) / "rewards.csv").string() << "\n";
  return any_failed ? 1 : 0;
}

// ---------------------------------------------------------------------------
// mock

/// Host a mock server for external clients over stdio or HTTP. Blocks.
inline int cmd_mock(const std::string& kind, const std::map<std::string, std::string>& options,
                    bool http, int port, std::ostream& err = std::cerr) {
  std::shared_ptr<MockServer> server;
  try {
    server = make_mock_server(kind, options);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  if (http) {
    if (!server->serve_http("0.0.0.0", port)) {
      err << "error: failed to listen on port " << port << "\n";
      return 1;
    }
    return 0;
  }
  server->serve_stdio();
  return 0;
}

}  // namespace toolscope

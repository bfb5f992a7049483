#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "toolscope/agent.hpp"
#include "toolscope/llm.hpp"
#include "toolscope/prompts.hpp"
#include "toolscope/protocol.hpp"

namespace toolscope {

// ---------------------------------------------------------------------------
// Rubrics

enum class RubricCategory { TF, TA, TG, PA };

inline const char* category_tag(RubricCategory c) {
  switch (c) {
    case RubricCategory::TF: return "TF";
    case RubricCategory::TA: return "TA";
    case RubricCategory::TG: return "TG";
    case RubricCategory::PA: return "PA";
  }
  return "?";
}

inline const char* category_display_name(RubricCategory c) {
  switch (c) {
    case RubricCategory::TF: return "Task Fulfillment and Quality";
    case RubricCategory::TA: return "Tool Appropriateness";
    case RubricCategory::TG: return "Tool Grounding";
    case RubricCategory::PA: return "Parameter Accuracy";
  }
  return "?";
}

inline std::optional<RubricCategory> category_from_name(const std::string& name) {
  if (name.find("Fulfillment") != std::string::npos) return RubricCategory::TF;
  if (name.find("Appropriateness") != std::string::npos) return RubricCategory::TA;
  if (name.find("Grounding") != std::string::npos) return RubricCategory::TG;
  if (name.find("Parameter") != std::string::npos) return RubricCategory::PA;
  if (name == "TF") return RubricCategory::TF;
  if (name == "TA") return RubricCategory::TA;
  if (name == "TG") return RubricCategory::TG;
  if (name == "PA") return RubricCategory::PA;
  return std::nullopt;
}

struct Criterion {
  RubricCategory category = RubricCategory::TF;
  std::string name;         // criteria name as generated
  std::string description;  // what the judge should check
  int weight = 1;           // 1..10
};

struct Rubric {
  std::string task_id;
  std::vector<Criterion> criteria;  // fixed layout: 5 TF, 3 TA, 2 TG, 2 PA
};

/// The fixed layout every rubric must satisfy. Returns one message per
/// violated constraint; empty means valid.
inline std::vector<std::string> validate_rubric(const std::vector<Criterion>& criteria) {
  std::vector<std::string> violations;
  if (criteria.size() != 12)
    violations.push_back("expected 12 criteria, got " + std::to_string(criteria.size()));
  static const std::vector<std::pair<RubricCategory, int>> layout = {
      {RubricCategory::TF, 5}, {RubricCategory::TA, 3}, {RubricCategory::TG, 2},
      {RubricCategory::PA, 2}};
  std::size_t index = 0;
  for (const auto& [category, count] : layout) {
    for (int i = 0; i < count && index < criteria.size(); ++i, ++index) {
      if (criteria[index].category != category) {
        violations.push_back("criterion " + std::to_string(index + 1) + " must be " +
                             category_display_name(category) + ", got " +
                             category_display_name(criteria[index].category));
      }
    }
  }
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (criteria[i].weight < 1 || criteria[i].weight > 10)
      violations.push_back("criterion " + std::to_string(i + 1) + " weight " +
                           std::to_string(criteria[i].weight) + " is outside [1, 10]");
  }
  return violations;
}

// ---------------------------------------------------------------------------
// Lenient JSON from judge/generator replies

namespace rewardsdetail {

/// Drop trailing commas before '}' ']' outside string literals; LLM replies
/// frequently carry them.
inline std::string strip_trailing_commas(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      out += c;
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') {
      in_string = true;
      out += c;
      continue;
    }
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      if (j < text.size() && (text[j] == '}' || text[j] == ']')) continue;  // drop
    }
    out += c;
  }
  return out;
}

inline json lenient_parse(const std::string& text) {
  json direct = json::parse(text, nullptr, false);
  if (!direct.is_discarded()) return direct;
  return json::parse(strip_trailing_commas(text), nullptr, false);
}

inline std::optional<std::string> between_tags(const std::string& text, const std::string& tag) {
  const std::string open = "<" + tag + ">";
  const std::string close = "</" + tag + ">";
  const std::size_t b = text.find(open);
  if (b == std::string::npos) return std::nullopt;
  const std::size_t e = text.find(close, b + open.size());
  if (e == std::string::npos) return std::nullopt;
  return text.substr(b + open.size(), e - b - open.size());
}

}  // namespace rewardsdetail

/// Parse the criteria list out of a generator reply (the <RUBRICS> block).
inline std::vector<Criterion> parse_rubric_response(const std::string& text) {
  auto body = rewardsdetail::between_tags(text, "RUBRICS");
  if (!body) throw Error("malformed-output", "no <RUBRICS>...</RUBRICS> block in generator reply");
  json parsed = rewardsdetail::lenient_parse(*body);
  if (parsed.is_discarded() || !parsed.is_array())
    throw Error("malformed-output", "RUBRICS block is not a JSON list");
  std::vector<Criterion> criteria;
  for (const json& item : parsed) {
    if (!item.is_object()) throw Error("malformed-output", "rubric entry is not an object");
    Criterion c;
    const std::string name = item.value("criteria_name", "");
    auto category = category_from_name(name);
    if (!category) throw Error("malformed-output", "unknown criteria_name '" + name + "'");
    c.category = *category;
    c.name = name;
    c.description = item.value("criteria_description", "");
    if (item.contains("weight")) {
      const json& w = item["weight"];
      if (w.is_number_integer()) c.weight = w.get<int>();
      else if (w.is_number()) c.weight = static_cast<int>(w.get<double>());
      else if (w.is_string()) {
        try {
          c.weight = std::stoi(w.get<std::string>());
        } catch (...) {
          throw Error("malformed-output", "non-numeric weight '" + w.get<std::string>() + "'");
        }
      } else {
        throw Error("malformed-output", "weight has a non-numeric type");
      }
    } else {
      throw Error("malformed-output", "rubric entry lacks a weight");
    }
    criteria.push_back(std::move(c));
  }
  return criteria;
}

/// Generate a rubric with the verbatim prompt template, validate the 5/3/2/2
/// layout and weight bounds, and retry once with a corrective suffix.
inline Rubric generate_rubric(const std::string& task_id, const std::string& task,
                              const std::string& tool_context, const std::string& solution,
                              LlmClient& generator) {
  std::string user_query = task;
  if (!tool_context.empty()) user_query += "\n\nAvailable tools:\n" + tool_context;
  const std::string prompt =
      prompts::fill(std::string(prompts::kRubricGenerationPrompt),
                    {{"user_query", user_query}, {"solution", solution.empty() ? "N/A" : solution}});

  std::string reply = generator.complete({{"user", prompt}});
  std::vector<std::string> violations;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      std::vector<Criterion> criteria = parse_rubric_response(reply);
      violations = validate_rubric(criteria);
      if (violations.empty()) return Rubric{task_id, std::move(criteria)};
    } catch (const Error& e) {
      violations = {e.what()};
    }
    if (attempt == 0) {
      std::string correction = "Your previous rubric list was invalid:";
      for (const std::string& v : violations) correction += "\n- " + v;
      correction +=
          "\nReturn exactly 12 rubrics in the order 5x Task Fulfillment and Quality, 3x Tool "
          "Appropriateness, 2x Tool Grounding, 2x Parameter Accuracy, each with an integer weight "
          "from 1 to 10, between <RUBRICS> and </RUBRICS> tags.";
      reply = generator.complete({{"user", prompt}, {"user", correction}});
    }
  }
  std::string all;
  for (const std::string& v : violations) all += (all.empty() ? "" : "; ") + v;
  throw Error("malformed-output", "rubric generation failed after retry: " + all);
}

/// Render the criteria list the way the eval prompt expects its RUBRICS slot.
inline std::string render_rubric_for_prompt(const Rubric& rubric) {
  json list = json::array();
  for (const Criterion& c : rubric.criteria) {
    list.push_back({{"criteria_name", c.name.empty() ? category_display_name(c.category) : c.name},
                    {"criteria_description", c.description},
                    {"weight", c.weight}});
  }
  return list.dump();
}

// ---------------------------------------------------------------------------
// Judge scoring

struct CriterionScores {
  std::string task_id;
  std::string trajectory_id;
  std::vector<double> d;  // 12 values in [0, 1]
  int clamped = 0;        // how many raw scores fell outside [0, 1]
};

/// Parse the <EVAL_SCORES> list; clamps out-of-range values and rejects any
/// arity other than the rubric's 12.
inline std::vector<double> parse_eval_scores(const std::string& text, int* clamped = nullptr) {
  auto body = rewardsdetail::between_tags(text, "EVAL_SCORES");
  if (!body) throw Error("malformed-output", "no <EVAL_SCORES>...</EVAL_SCORES> block in judge reply");
  json parsed = rewardsdetail::lenient_parse(*body);
  if (parsed.is_discarded() || !parsed.is_array())
    throw Error("malformed-output", "EVAL_SCORES block is not a JSON list");
  std::vector<double> scores;
  for (const json& v : parsed) {
    if (!v.is_number()) throw Error("malformed-output", "EVAL_SCORES entry is not a number");
    double x = v.get<double>();
    if (x < 0.0 || x > 1.0) {
      if (clamped) ++*clamped;
      x = std::clamp(x, 0.0, 1.0);
    }
    scores.push_back(x);
  }
  if (scores.size() != 12)
    throw Error("length-mismatch",
                "expected 12 scores, got " + std::to_string(scores.size()));
  return scores;
}

/// Score one trajectory against its fixed rubric; one retry on a malformed
/// judge reply, then the error surfaces.
inline CriterionScores score_trajectory(const Rubric& rubric, const Trajectory& trajectory,
                                        LlmClient& judge) {
  const std::string prompt = prompts::fill(std::string(prompts::kRubricEvalPrompt),
                                           {{"user_query", trajectory.task},
                                            {"rubrics", render_rubric_for_prompt(rubric)},
                                            {"trajectory", render_trajectory_for_judge(trajectory)}});
  CriterionScores out;
  out.task_id = rubric.task_id;
  out.trajectory_id = trajectory.trajectory_id;
  std::string reply = judge.complete({{"user", prompt}});
  for (int attempt = 0;; ++attempt) {
    try {
      out.d = parse_eval_scores(reply, &out.clamped);
      return out;
    } catch (const Error& e) {
      if (attempt >= 1) throw;
      reply = judge.complete(
          {{"user", prompt},
           {"user", std::string("Your previous reply was invalid: ") + e.what() +
                        ". Return exactly 12 decimal numbers between <EVAL_SCORES> and "
                        "</EVAL_SCORES> tags."}});
    }
  }
}

// ---------------------------------------------------------------------------
// Reward aggregation

/// S_R: weighted mean of the category's criterion scores.
inline double category_score(const Rubric& rubric, const CriterionScores& scores,
                             RubricCategory category) {
  double weighted = 0.0;
  double total_weight = 0.0;
  for (std::size_t i = 0; i < rubric.criteria.size() && i < scores.d.size(); ++i) {
    if (rubric.criteria[i].category != category) continue;
    weighted += rubric.criteria[i].weight * scores.d[i];
    total_weight += rubric.criteria[i].weight;
  }
  if (total_weight == 0.0) throw Error("empty-category", "category has no criteria");
  return weighted / total_weight;
}

struct CategoryWeights {
  double tf = 0.4;
  double ta = 0.2;
  double tg = 0.2;
  double pa = 0.2;

  void validate() const {
    if (tf < 0 || ta < 0 || tg < 0 || pa < 0)
      throw Error("invalid-weights", "category weights must be non-negative");
    if (std::fabs(tf + ta + tg + pa - 1.0) > 1e-9)
      throw Error("invalid-weights", "category weights must sum to 1");
    if (!(tf > ta && tf > tg && tf > pa))
      throw Error("invalid-weights", "task-fulfillment weight must be strictly largest");
  }
};

struct RewardBreakdown {
  double s_tf = 0, s_ta = 0, s_tg = 0, s_pa = 0;
  double reward = 0;  // R = sum alpha_R * S_R
};

inline RewardBreakdown composite_reward(const Rubric& rubric, const CriterionScores& scores,
                                        const CategoryWeights& alpha = {}) {
  alpha.validate();
  RewardBreakdown out;
  out.s_tf = category_score(rubric, scores, RubricCategory::TF);
  out.s_ta = category_score(rubric, scores, RubricCategory::TA);
  out.s_tg = category_score(rubric, scores, RubricCategory::TG);
  out.s_pa = category_score(rubric, scores, RubricCategory::PA);
  out.reward = alpha.tf * out.s_tf + alpha.ta * out.s_ta + alpha.tg * out.s_tg + alpha.pa * out.s_pa;
  return out;
}

// ---------------------------------------------------------------------------
// Group-relative advantages

struct AdvantageGroup {
  std::string task_id;
  std::vector<double> rewards;
  std::vector<double> advantages;
};

/// Standardize a rollout group's rewards against its own mean and population
/// std. The epsilon floor only guards degenerate near-zero spreads; a
/// zero-variance group yields all-zero advantages.
inline AdvantageGroup group_advantages(std::vector<double> rewards, std::string task_id = "") {
  if (rewards.size() < 2)
    throw Error("degenerate-group", "advantage groups need at least 2 rollouts");
  constexpr double kEpsilon = 1e-8;
  double mean = 0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(rewards.size());
  double variance = 0;
  for (double r : rewards) variance += (r - mean) * (r - mean);
  variance /= static_cast<double>(rewards.size());
  const double std_dev = std::sqrt(variance);

  AdvantageGroup out;
  out.task_id = std::move(task_id);
  out.rewards = std::move(rewards);
  out.advantages.reserve(out.rewards.size());
  for (double r : out.rewards) {
    out.advantages.push_back(std_dev == 0.0 ? 0.0 : (r - mean) / std::max(std_dev, kEpsilon));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generic (non-rubric) judging

struct GenericJudgeResult {
  std::map<std::string, double> scores;      // six numeric metrics
  std::map<std::string, std::string> reasoning;
};

inline const std::vector<std::string>& generic_metric_keys() {
  static const std::vector<std::string> keys = {
      "task_fulfillment",     "grounding",           "tool_appropriateness",
      "parameter_accuracy",   "dependency_awareness", "parallelism_and_efficiency"};
  return keys;
}

namespace rewardsdetail {

/// Compact tool-call listing for the judge's EXECUTION SUMMARY slot.
inline std::string execution_summary(const Trajectory& traj) {
  std::string out;
  int call_index = 0;
  for (std::size_t i = 0; i < traj.turns.size(); ++i) {
    const Turn& turn = traj.turns[i];
    if (turn.role != TurnRole::Assistant) continue;
    ParsedAssistant parsed = parse_assistant(turn.text);
    if (parsed.action != ParsedAssistant::Action::ToolCall) continue;
    ++call_index;
    out += std::to_string(call_index) + ". " + parsed.tool_name + "(" + parsed.arguments.dump() + ")";
    if (i + 1 < traj.turns.size() && traj.turns[i + 1].role == TurnRole::ToolResponse) {
      std::string response = traj.turns[i + 1].text;
      if (response.size() > 200) response = response.substr(0, 200) + "...";
      out += " -> " + response;
    }
    out += "\n";
  }
  if (out.empty()) out = "(no tool calls)";
  return out;
}

}  // namespace rewardsdetail

/// Fill the base judge template and parse its six-metric JSON object.
inline GenericJudgeResult generic_judge_metrics(const Trajectory& trajectory,
                                                const std::string& task,
                                                const std::string& concrete_task, LlmClient& judge) {
  std::string final_solution;
  if (trajectory.final_answer) {
    final_solution = *trajectory.final_answer;
  } else {
    for (auto it = trajectory.turns.rbegin(); it != trajectory.turns.rend(); ++it) {
      if (it->role == TurnRole::Assistant) {
        final_solution = it->text;
        break;
      }
    }
  }
  const std::string prompt = prompts::fill(
      std::string(prompts::kBaseJudgePrompt),
      {{"task", task},
       {"concrete_task_description", concrete_task.empty() ? "N/A" : concrete_task},
       {"execution_summary", rewardsdetail::execution_summary(trajectory)},
       {"final_solution", final_solution},
       {"total_rounds", std::to_string(trajectory.model_turn_count)}});

  const std::string reply = judge.complete({{"user", prompt}});
  const std::size_t begin = reply.find('{');
  const std::size_t end = reply.rfind('}');
  if (begin == std::string::npos || end == std::string::npos || end <= begin)
    throw Error("malformed-output", "judge reply contains no JSON object");
  json parsed = rewardsdetail::lenient_parse(reply.substr(begin, end - begin + 1));
  if (parsed.is_discarded() || !parsed.is_object())
    throw Error("malformed-output", "judge reply is not a JSON object");

  GenericJudgeResult out;
  for (const std::string& key : generic_metric_keys()) {
    if (!parsed.contains(key)) throw Error("missing-key", "judge object lacks '" + key + "'");
    const json& v = parsed[key];
    if (v.is_number()) {
      out.scores[key] = v.get<double>();
    } else if (v.is_string()) {
      try {
        out.scores[key] = std::stod(v.get<std::string>());
      } catch (...) {
        throw Error("missing-key", "judge score '" + key + "' is not numeric");
      }
    } else {
      throw Error("missing-key", "judge score '" + key + "' is not numeric");
    }
  }
  for (const auto& [key, value] : parsed.items()) {
    if (key.size() > 10 && key.rfind("_reasoning") == key.size() - 10 && value.is_string())
      out.reasoning[key] = value.get<std::string>();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rubric store (write-once)

/// One JSON document per task id; an existing rubric is never overwritten
/// (scores must stay comparable across every rollout of a task).
class RubricStore {
 public:
  explicit RubricStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

  bool exists(const std::string& task_id) const {
    return std::filesystem::exists(path_for(task_id));
  }

  /// Returns false (and writes nothing) when the task already has a rubric.
  bool put(const Rubric& rubric) {
    if (exists(rubric.task_id)) return false;
    std::filesystem::create_directories(dir_);
    json criteria = json::array();
    for (const Criterion& c : rubric.criteria) {
      criteria.push_back({{"category", category_tag(c.category)},
                          {"name", c.name},
                          {"description", c.description},
                          {"weight", c.weight}});
    }
    json doc = {{"task_id", rubric.task_id}, {"criteria", std::move(criteria)}};
    const std::filesystem::path path = path_for(rubric.task_id);
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp);
      out << doc.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, path);
    return true;
  }

  Rubric load(const std::string& task_id) const {
    std::ifstream in(path_for(task_id));
    if (!in) throw Error("missing-rubric", "no rubric stored for task '" + task_id + "'");
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw Error("missing-rubric", "rubric for '" + task_id + "' is corrupt");
    Rubric rubric;
    rubric.task_id = doc.value("task_id", task_id);
    for (const json& c : doc["criteria"]) {
      Criterion criterion;
      const std::string tag = c.value("category", "TF");
      criterion.category = tag == "TA"   ? RubricCategory::TA
                           : tag == "TG" ? RubricCategory::TG
                           : tag == "PA" ? RubricCategory::PA
                                         : RubricCategory::TF;
      criterion.name = c.value("name", "");
      criterion.description = c.value("description", "");
      criterion.weight = c.value("weight", 1);
      rubric.criteria.push_back(std::move(criterion));
    }
    return rubric;
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path path_for(const std::string& task_id) const {
    std::string name;
    for (char c : task_id)
      name += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return dir_ / (name + ".json");
  }

  std::filesystem::path dir_;
};

}  // namespace toolscope

#pragma once

#include <map>
#include <string>
#include <string_view>

namespace toolscope::prompts {

/// Replace each "{key}" slot with its value. Only known keys are touched, so
/// literal braces elsewhere in a template survive.
inline std::string fill(std::string text, const std::map<std::string, std::string>& slots) {
  for (const auto& [key, value] : slots) {
    const std::string needle = "{" + key + "}";
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
      text.replace(pos, needle.size(), value);
      pos += value.size();
    }
  }
  return text;
}

// ---------------------------------------------------------------------------
// Agent system prompts

inline constexpr std::string_view kIslSystemPromptBody =
    R"PROMPT(You are a strategic decision-making expert that makes tool calls to solve a task.
You will use the provided MCP servers and their tools to plan and execute the given task effectively.

You will be given a task and a list of MCP servers, each with specific capabilities.
Follow these steps carefully:

Perform Decision and Planning:
1. Assess if the task is fully completed. If it is, return a final answer enclosed in <answer> ... </answer> tags.
2. If not, decide if executing tools is valuable.
3. If executing tools is not valuable, return the best possible final answer enclosed in <answer> ... </answer> tags.
4. If further tool calls are needed, follow the Execution Planning steps below and return tool call enclosed in <tool_call> ... </tool_call> tags.

Execution Planning:
1. Create a step-wise plan to accomplish the task using the available MCP servers and their tools.
2. Infer the possible description or capability of each MCP server from its name.
3. Identify which MCP server(s) are most relevant based on these inferred roles.
4. Select the best server(s) to accomplish the task.
5. If tools of the server are unknown, use the tool `fetch_tools` to get the list of tools available within that server.
6. Choose the most appropriate tool(s) from the selected server(s) to address the task.
7. Update your plan based on the results obtained from tool executions.

When planning next steps:
- Build on previous results.
- Reason the tool to use.

Response format should be one of the following:
- If the task is completed or no further tool calls are valuable:
<think>...your reasoning (check task completion)...</think>
<answer>...final answer...</answer>
- If further tool calls are needed:
<think>...your reasoning...</think>
<tool_call>...tool call...</tool_call>

Note:
- For MCP server, tool name is "server:tool_name".
- Always start with <think>...</think> and each response should contain only one <think>...</think>.
- Include the decision and planning steps in your reasoning <think>...</think>.
- All tool calls must be wrapped in <tool_call>...</tool_call>.
- AVOID REDUNDANT CALLS: Don't repeat successful tools unless specifically needed.
- All final answers must be wrapped in <answer>...</answer>.
- Before giving the final answer, ensure all aspects of the task are addressed.)PROMPT";

/// fetch_tools is referenced by the prose above but never given a schema
/// block in the source material; it is declared formally here, mirroring the
/// explicit get_selected_tools declaration used for tool loading.
inline constexpr std::string_view kFetchToolsDeclaration =
    R"PROMPT(# Tools

You may call one or more functions to assist with the user query.

You are provided with function signatures within <tools></tools> XML tags:
<tools>
{"type": "function", "function": {"name": "fetch_tools", "description": "A tool for fetching the list of tools available within a particular MCP server.", "parameters": {"type": "object", "properties": {"server": {"type": "string", "description": "The MCP server to fetch tools from."}}, "required": ["server"]}}}
</tools>

For each function call, return a json object with function name and arguments within <tool_call></tool_call> XML tags:
<tool_call>
{"name": <function-name>, "arguments": <args-json-object>}
</tool_call>)PROMPT";

inline std::string isl_system_prompt() {
  return std::string(kIslSystemPromptBody) + "\n\n" + std::string(kFetchToolsDeclaration);
}

inline constexpr std::string_view kItlSystemPrompt =
    R"PROMPT(You are a strategic decision-making expert for a multi-tool AI agent.
You will use the provided MCP servers and their tools to plan and execute the given task effectively.

You will be given a task and a list of MCP servers, each with specific capabilities.
Follow these steps carefully:

## Perform Decision and Planning:
1. Assess if the task is fully completed. If it is, return a final answer enclosed in <answer> ... </answer> tags.
2. If not, decide if executing tools is valuable.
3. If executing tools is not valuable return the best possible final answer enclosed in <answer> ... </answer> tags.
4. If further tool calls are needed, follow the Execution Planning steps below and return tool call enclosed in <tool_call> ... </tool_call> tags.

## Execution Planning:
1. Create a step-wise plan to accomplish the task using the available MCP servers and their tools.
2. Infer the possible description or capability of each MCP server from its name.
3. Identify which MCP server(s) are most relevant based on these inferred roles.
4. Select the best server(s) to accomplish the task.
5. If tools of the server are unknown, use the tool `fetch_tools` to get the list of tools available within that server.
6. Choose the most appropriate tool(s) from the selected server(s) to address the task.
7. Update your plan based on the results obtained from tool executions.

When planning next steps:
- Build on previous results.
- Reason the tool to use.

Note:
- For MCP server tool name is "server:tool_name".
- All tool calls must be wrapped in <tool_call>...</tool_call>.
- AVOID REDUNDANT CALLS: Don't repeat successful tools unless specifically needed
- All final answers must be wrapped in <answer>...</answer>.
- Before giving final answer, ensure all aspects of the task are addressed.

# Tools

You may call one or more functions to assist with the user query.

You are provided with function signatures within <tools></tools> XML tags:
<tools>
{"type": "function", "function": {"name": "get_selected_tools", "description": "A tool for fetching schema of selected tools for a particular MCP server.", "parameters": {"type": "object", "properties": {"server": {"type": "string", "description": "The MCP server to fetch tools from."}, "tools": {"type": "array", "description": "List of tools to fetch"}}, "required": ["server", "tools"]}}}
</tools>

For each function call, return a json object with function name and arguments within <tool_call></tool_call> XML tags:
<tool_call>
{"name": <function-name>, "arguments": <args-json-object>}
</tool_call>)PROMPT";

inline constexpr std::string_view kPtcSystemPrompt =
    R"PROMPT(You are a reasoning language model that can reach precise answers through careful reasoning and tool use when needed.

Tools:
You are provided with function signatures within <tools></tools> XML tags:

<tools>
{
    "type": "function",
    "function": {
        "name": "code_interpreter",
        "description": "A tool for executing Python code in Jupyter notebook style cells, state is maintained across the calls",
        "parameters": {
            "type": "object",
            "properties": {
                "code": {
                    "type": "string",
                    "description": "The raw Python code string to be executed."
                }
            },
            "required": ["code"]
        }
    }
}
</tools>

Instructions:
1. Always enclose your internal reasoning process within <think>...</think> blocks.
2. To invoke the Python code_interpreter tool, return a JSON object containing the tool name and the code argument within <tool_call>...</tool_call> tags.
3. Once you have sufficient information, provide your final answer to the user.
4. Use the code interpreter tool to execute Python code and invoke MCPServer methods as needed.

MCP Python Coding Solving Rules:
1. Come up with a brief plan of the steps required to complete the user-specified MCP task with the servers and tools given.
2. While writing Python tool calls, first import the MCPServer object from the MCPBench package and initialize an MCPServer object with the desired server name.
3. The first Python call should always fetch the expected argument formats and output formats for the tools you will need. Use:
mcpobject.get_tools_info(['tool1','tool2',...])
4. Only after understanding the tool schemas, write the code to implement your plan.
5. If you encounter errors due to format issues, call mcpobject.get_tools_info(['tool1','tool2',...]) again.

Example tool calls:

Fetching tool details to get schema for the relevant tools:
<tool_call> { "name": "code_interpreter", "arguments": { "code": "from MCPBench import MCPServer; time_mcp = MCPServer('Time MCP'); time_mcp.get_tools_info(['get_current_time','convert_time'])" } } </tool_call>

Calling a tool after fetching the schema:
<tool_call> { "name": "code_interpreter", "arguments": { "code": "time_mcp.get_current_time(timezone='America/New_York')" } } </tool_call>)PROMPT";

// ---------------------------------------------------------------------------
// Reward pipeline prompts

/// Slots: {user_query}, {solution}.
inline constexpr std::string_view kRubricGenerationPrompt =
    R"PROMPT(You are an expert in generating rubrics, given a user query, for evaluating the performance of AI agents on MCP based tool calling tasks. Your rubrics should be detailed and evidence-based and tailored to the specific task described in the USER_QUERY.

You will be given a USER_QUERY describing the task assigned to the agent and a SOLUTION, which demonstrates one of the possible approaches to solving the task. Based on this, generate a comprehensive rubric for evaluating the agent's trajectory on the task. There could be mulitple ways to solve the task, so ensure your rubric is general enough to accommodate different valid approaches while still being specific to the task requirements. Use the SOLUTION to understand the task requirements and the challenges involved and do not base your rubric solely on the SOLUTION provided. You can always use insights from the SOLUTION to inform your rubric generation.

You are also given the CRITERIA_CATEGORIES and SCORING INSTRUCTIONS to guide your rubric generation. CRITERIA_CATEGORIES define the key dimensions to evaluate, and SCORING INSTRUCTIONS provide guidance on how to assign weights to each criterion.

CRITERIA_CATEGORIES:
1. Task Fulfillment and Quality : Evaluate how well the agent met the task requirements and whether all the subtasks were completed satisfactorily.
2. Tool Appropriateness : Evaluate whether the tools selected by the agent were suitable for the tasks they were intended to solve.
3. Tool Grounding : Evaluate how well the agent's reasoning is grounded in the tool outputs and whether the agent effectively utilized the information provided by the tool response
4. Parameter Accuracy : Evaluate the accuracy and completeness of the parameters used in the tool calls.


SCORING INSTRUCTIONS:
- 1–3: If the criterion is of low importance for evaluating the USER_QUERY and it only evaluates minor aspects of the task, that need not be necessary, but would be a good to have properties while executing the task.
- 4–6: If the criterion is of moderate importance for evaluating the USER_QUERY and it evaluates important aspects of the task but not critical for overall success. These could be aspects that improve the task execution but are not essential.
- 7–8: If the criterion is of high importance for evaluating the USER_QUERY and it significantly impacts the success of the task and its outcomes. These could be aspects that greatly enhance the quality or effectiveness of the task execution.
- 9–10: If the criterion is of critical importance for evaluating the USER_QUERY and it is essential for the successful completion of the task without which the task would fail.


As you response return a list of JSON objects with the following structure:
{
"criteria_name": "name any one of the four CRITERIA_CATEGORIES",
"criteria_description": "detailed description of what this criteria evaluates with respect to the USER_QUERY. Keep this focused on the specific task described in the USER_QUERY.",
"weight": "return a number from 1-10, both included indicating the importance of this criteria for evaluating the USER_QUERY and use the SCORING INSTRUCTIONS to guide your weight assignment."
}

INSTRUCTIONS:
- It is important that Task Fulfillment and Quality is always included and given the highest weight among the rubrics
- Tool Appropriateness  is the second most important criteria and should be generally given the second highest weight among the rubrics
- Always return a list of JSON objects as described above with 12 rubrics out of which follow the below distribution in the same order:
    - 5 rubrics for Task Fulfillment and Quality
    - 3 rubrics for Tool Appropriateness
    - 2 rubrics for Tool Grounding
    - 2 rubrics for Parameter Accuracy
- Ensure that each of the 12 rubrics corresponds to a unique aspect of the USER_QUERY and does not overlap with other rubrics.
- Ensure the descriptions are specific to the USER_QUERY and provide clear guidance on what to evaluate for each criterion.
- Return the list between <RUBRICS>[{ },{ }, ....]</RUBRICS> tags only.

USER_QUERY : {user_query}

SOLUTION : {solution})PROMPT";

/// Slots: {user_query}, {rubrics}, {trajectory}.
inline constexpr std::string_view kRubricEvalPrompt =
    R"PROMPT(You are an expert evaluator for assessing the performance of AI agents on MCP based tool calling on a set of pre-defined rubrics. Given a USER_QUERY describing the task assigned to the agent, a RUBRICS list defining the evaluation criteria, and a TRAJECTORY representing the agent's actions and outputs during task execution, your goal is to return a number between 0 and 1 for each rubric based on the degree to which the agent met the expectations outlined in that rubric based on the below criteria :

- 0.1–0.3: 10-30% of trajectory steps were correctly executed according to the rubric.
- 0.4–0.6: 40-60% of trajectory steps were correctly executed according to the rubric.
- 0.7–0.8: 70-80% of trajectory steps were correctly executed according to the rubric.
- 0.9–1.0: 90-100% of trajectory steps were correctly executed according to the rubric.

USER_QUERY : {user_query}
RUBRICS : {rubrics}
TRAJECTORY : {trajectory}

In your response, return a list of numbers between 0 and 1 corresponding to each rubric in the RUBRICS list in the same order as listed.

You must return a list of 12 decimal numbers between <EVAL_SCORES> and </EVAL_SCORES> tags only as given below:
<EVAL_SCORES>[0.1, 0.8, 1, ..., 0]</EVAL_SCORES>)PROMPT";

/// Slots: {task}, {concrete_task_description}, {execution_summary},
/// {final_solution}, {total_rounds}.
inline constexpr std::string_view kBaseJudgePrompt =
    R"PROMPT(You are a STRICT evaluator. Your role is to critically assess performance with HIGH STANDARDS.

IMPORTANT: The average score across all evaluations should be around 4-5, NOT 7-8.

You must assign scores **only based on evidence** from the task, solution, and tool usage. Your evaluation should be:
- Extremely Critical (assume mediocre performance unless proven otherwise)
- Evidence-based (require strong proof for scores above 5)
- Conservative (when in doubt, score lower - aim for 4-5 average)

CRITICAL FORMAT RULES:
- DO NOT penalize for output format (JSON, text, etc.) unless the TASK PRESENTED TO AGENT explicitly requires it
- If the task presented to agent says "provide information" without specifying format, ANY readable format is acceptable
- Only deduct points for format if the task explicitly states "return as JSON" or "format as table" etc.
- Focus on CONTENT correctness, not presentation style

---

**TASK PRESENTED TO AGENT**: "{task}"

**CONCRETE TASK REFERENCE (For evaluation context only)**: {concrete_task_description}

Note: The agent did NOT see this concrete version. It only saw the task above.
The task visible for the agent is the fuzzy version of the concrete task.
This reference helps assess actual task completion but is not the sole criterion.
The agent's interpretation of the fuzzy task may differ but still be valid.

FORMAT REMINDER: If the concrete task mentions JSON but the TASK PRESENTED TO AGENT doesn't explicitly require it,
DO NOT penalize for not using JSON format. Only the task presented to agent's requirements matter for format.


**EXECUTION SUMMARY**:
{execution_summary}
**FINAL SOLUTION**: "{final_solution}"
**TOTAL ROUNDS**: {total_rounds}


---

### Task Completion Rubric (1–10 per subdimension)

1. **Task Fulfillment and Quality**
- 1–3: Perfectly completes 10-30% of requirements.
- 4–6: Perfectly completes 40-60% of requirements.
- 7–8: Perfectly completes 70-80% of requirements.
- 9–10: Perfectly completes 90-100% of requirements.
NOTE: Requirements come from the task present to agent only. Format (JSON/text) is NOT a requirement unless explicitly stated in the task present to agent.

3. **Grounding**
- 1–3: 10-30% of claims are perfectly grounded in tool outputs.
- 4–6: 40-60% of claims are perfectly grounded in tool outputs.
- 7–8: 70-80% of claims are perfectly grounded in tool outputs.
- 9–10: 90-100% of claims are perfectly grounded in tool outputs.

---

### Tool Usage Rubric (1–10 per subdimension)

1. **Tool Appropriateness**
- 1–3: 10-30% of tools were perfectly selected for their subtasks.
- 4–6: 40-60% of tools were perfectly selected for their subtasks.
- 7–8: 70-80% of tools were perfectly selected for their subtasks.
- 9–10: 90-100% of tools were perfectly selected for their subtasks.

3. **Parameter Accuracy**
- 1–3: 10-30% of tool calls have perfectly accurate and complete parameters.
- 4–6: 40-60% of tool calls have perfectly accurate and complete parameters.
- 7–8: 70-80% of tool calls have perfectly accurate and complete parameters.
- 9–10: 90-100% of tool calls have perfectly accurate and complete parameters.

---

### PERCENTAGE-BASED SCORING SYSTEM:

**How to Calculate Scores:**
For each dimension, calculate the DEFECT RATE:
- Defect Rate = (Number of Issues / Total Opportunities) × 100%

Then map defect rate to score:
- 0-10% defects → Score 9-10 (Excellent to Perfect)
- 10-30% defects → Score 7-9 (Good performance)
- 30-50% defects → Score 5-7 (Average performance)
- 50-70% defects → Score 3-5 (Poor performance)
- 70-100% defects → Score 0-3 (Failed)

**How to Score:**
1. When evaluating percentages, be EXTREMELY STRICT about what counts as "perfectly executed"
2. "Perfectly" means ALL of the following must be true:
    - Correct tool selection (not just "works" but OPTIMAL choice)
    - Complete and accurate parameters (not just valid, but IDEAL)
    - Zero redundancy (no repeated or unnecessary calls)
    - Proper error handling (graceful recovery from ANY failure)
    - Efficient execution (parallel when possible, minimal rounds)
    - Concise output (no verbose explanations unless requested)
3. If ANY of the above is missing, that portion is NOT perfectly executed (counts as 0%)
4. Example: Task completed correctly but with 1 redundant call = that portion is 0% perfect

**KEY PRINCIPLES:**
1. ALWAYS calculate as percentage, NOT absolute numbers
2. 10 errors in 100 calls (10%) = same score as 1 error in 10 calls (10%)
3. Consider the OPPORTUNITY COUNT for each dimension:
    - Tool calls: How many total calls were made?
    - Parameters: How many total parameters across all calls?
    - Claims: How many factual statements were made?
---

CRITICAL: Apply the STRICTEST interpretation of "perfectly executed". If there's ANY doubt, score lower.

**CONCRETE SCORING EXAMPLES WITH PROPORTIONS:**

Task Fulfillment:
- Completed 19/20 requirements (5% defect rate) = Score 9
- Completed 16/20 requirements (20% defect rate) = Score 8
- Completed 12/20 requirements (40% defect rate) = Score 6
- Completed 8/20 requirements (60% defect rate) = Score 4

Tool Appropriateness:
- 19/20 tools optimal (5% defect rate) = Score 9
- 16/20 tools optimal (20% defect rate) = Score 8
- 12/20 tools optimal (40% defect rate) = Score 6
- 8/20 tools optimal (60% defect rate) = Score 4


Grounding:
- 19/20 claims supported by evidence (5% unsupported) = Score 9
- 16/20 claims supported by evidence (20% unsupported) = Score 8
- 12/20 claims supported by evidence (40% unsupported) = Score 6
- 8/20 claims supported by evidence (60% unsupported) = Score 4

Parameter Accuracy:
- 95/100 parameters perfect (5% defect rate) = Score 9
- 80/100 parameters perfect (20% defect rate) = Score 8
- 60/100 parameters perfect (40% defect rate) = Score 6
- 40/100 parameters perfect (60% defect rate) = Score 4

FORMAT NOTE: Text output when JSON not required in the task present to the agent = NO PENALTY (0% defect)
FORMAT NOTE: Missing JSON when explicitly required in the task present to the agent = Count as failed requirement

Remember: Most real-world executions should score 4-6. Scores of 8+ should be EXCEPTIONAL.

FINAL REMINDER BEFORE SCORING:
- Default to 4-5 unless you have strong evidence for higher
- Count ONLY truly perfect executions toward the percentage
- Be your most critical self - find flaws first, then acknowledge successes
- If you're considering a score above 7, re-examine for ANY imperfection
- Server count is IRRELEVANT - using more servers is NOT better

Please score based on COMPLETION PERCENTAGES and PROPORTIONAL SUCCESS, not absolute numbers.
Return your evaluation scoring and reasoning in this exact JSON format:
{
"task_fulfillment_reasoning": "Explain how well the agent fulfilled the detailed task objectives, referencing specific content from the CONCRETE TASK DESCRIPTION and what percentage was completed.",
"grounding_reasoning": "Explain how well the agent's outputs were grounded in actual tool results versus unsupported claims.",
"tool_appropriateness_reasoning": "Explain whether the tools selected were appropriate for each subtask requirement.",
"parameter_accuracy_reasoning": "Explain the accuracy and completeness of parameters used in tool calls, noting any missing required parameters or incorrect values.",

"task_fulfillment": X,
"grounding": X,

"tool_appropriateness": X,
"parameter_accuracy": X,

"dependency_awareness": X,
"parallelism_and_efficiency": X,
}

Return **only** the JSON object.)PROMPT";

// ---------------------------------------------------------------------------
// Task preambles

inline constexpr std::string_view kServersAvailableLine = "The following servers are available:";
inline constexpr std::string_view kServersAvailablePtcLine =
    "The following servers are available that can be initiated as a MCPServer Object:";

}  // namespace toolscope::prompts

#pragma once

#include "toolscope/agent.hpp"
#include "toolscope/commands.hpp"
#include "toolscope/config.hpp"
#include "toolscope/context.hpp"
#include "toolscope/levenshtein.hpp"
#include "toolscope/llm.hpp"
#include "toolscope/mockmcp.hpp"
#include "toolscope/prompts.hpp"
#include "toolscope/protocol.hpp"
#include "toolscope/rewards.hpp"
#include "toolscope/schema.hpp"
#include "toolscope/script/interpreter.hpp"
#include "toolscope/tokens.hpp"
#include "toolscope/value.hpp"

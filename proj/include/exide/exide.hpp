#pragma once

#include "exide/corpus.hpp"
#include "exide/error.hpp"
#include "exide/flowgraph.hpp"
#include "exide/llm.hpp"
#include "exide/metrics.hpp"
#include "exide/pipeline.hpp"
#include "exide/prompt.hpp"
#include "exide/rule.hpp"
#include "exide/text.hpp"

#pragma once

#include "cqe/config.hpp"
#include "cqe/corpus_index.hpp"
#include "cqe/engine_client.hpp"
#include "cqe/error.hpp"
#include "cqe/lexical_graph.hpp"
#include "cqe/measures.hpp"
#include "cqe/query_pool.hpp"
#include "cqe/ranker_eval.hpp"
#include "cqe/service.hpp"

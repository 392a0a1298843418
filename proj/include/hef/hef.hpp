#pragma once

#include "hef/bench.hpp"
#include "hef/cache.hpp"
#include "hef/cache_io.hpp"
#include "hef/chunker.hpp"
#include "hef/common.hpp"
#include "hef/embedder.hpp"
#include "hef/fuser.hpp"
#include "hef/hnsw.hpp"
#include "hef/linalg.hpp"
#include "hef/projector.hpp"
#include "hef/query.hpp"
#include "hef/synthetic.hpp"
#include "hef/tokenizer.hpp"
#include "hef/training.hpp"
#include "hef/uwl.hpp"

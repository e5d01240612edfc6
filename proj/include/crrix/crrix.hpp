#pragma once

#include "crrix/baselines.hpp"
#include "crrix/coherence.hpp"
#include "crrix/corpus.hpp"
#include "crrix/csv.hpp"
#include "crrix/date.hpp"
#include "crrix/error.hpp"
#include "crrix/hash.hpp"
#include "crrix/index.hpp"
#include "crrix/lda.hpp"
#include "crrix/matrix.hpp"
#include "crrix/pipeline.hpp"
#include "crrix/random.hpp"
#include "crrix/similarity.hpp"
#include "crrix/stats.hpp"
#include "crrix/svg.hpp"

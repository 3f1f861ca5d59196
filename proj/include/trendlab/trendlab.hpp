#pragma once

// Umbrella header for the trendlab library.

#include "trendlab/buckets.hpp"
#include "trendlab/common.hpp"
#include "trendlab/csvio.hpp"
#include "trendlab/ingest.hpp"
#include "trendlab/leastsq.hpp"
#include "trendlab/panel_io.hpp"
#include "trendlab/pipeline.hpp"
#include "trendlab/presets.hpp"
#include "trendlab/regress.hpp"
#include "trendlab/report.hpp"
#include "trendlab/rng.hpp"
#include "trendlab/simulate.hpp"
#include "trendlab/trend.hpp"

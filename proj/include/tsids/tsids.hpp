#pragma once

// Umbrella header for the whole toolkit.

#include "tsids/errors.hpp"
#include "tsids/eval.hpp"
#include "tsids/event.hpp"
#include "tsids/feature_series.hpp"
#include "tsids/ingest.hpp"
#include "tsids/lstm.hpp"
#include "tsids/matrix_profile.hpp"
#include "tsids/rng.hpp"
#include "tsids/sarima.hpp"
#include "tsids/simulate.hpp"
#include "tsids/stats.hpp"
#include "tsids/svg.hpp"

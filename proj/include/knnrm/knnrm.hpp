#pragma once

#include "knnrm/code_models.hpp"
#include "knnrm/error.hpp"
#include "knnrm/estimator.hpp"
#include "knnrm/harness.hpp"
#include "knnrm/order_statistics.hpp"
#include "knnrm/report.hpp"
#include "knnrm/rng.hpp"
#include "knnrm/schedules.hpp"
#include "knnrm/theory.hpp"

#pragma once

#include "o2o/core.hpp"
#include "o2o/rng.hpp"
#include "o2o/envs/linear_mdp.hpp"
#include "o2o/envs/generators.hpp"
#include "o2o/envs/reference_q.hpp"
#include "o2o/envs/planting.hpp"
#include "o2o/envs/serialize.hpp"
#include "o2o/oracle/values.hpp"
#include "o2o/oracle/coverage.hpp"
#include "o2o/oracle/hard_instance.hpp"
#include "o2o/regression/ridge.hpp"
#include "o2o/agent/lsvi.hpp"
#include "o2o/harness/config.hpp"
#include "o2o/harness/run.hpp"
#include "o2o/harness/sweep.hpp"
#include "o2o/harness/reports.hpp"

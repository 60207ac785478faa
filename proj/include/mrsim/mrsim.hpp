#pragma once

#include "mrsim/classifier.hpp"
#include "mrsim/cluster.hpp"
#include "mrsim/core.hpp"
#include "mrsim/engine.hpp"
#include "mrsim/error.hpp"
#include "mrsim/events.hpp"
#include "mrsim/experiment.hpp"
#include "mrsim/overload.hpp"
#include "mrsim/report.hpp"
#include "mrsim/schedulers.hpp"
#include "mrsim/workload.hpp"

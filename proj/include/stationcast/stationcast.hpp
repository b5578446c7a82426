#pragma once

#include "stationcast/access.hpp"
#include "stationcast/autodiff.hpp"
#include "stationcast/baselines.hpp"
#include "stationcast/config.hpp"
#include "stationcast/csv.hpp"
#include "stationcast/errors.hpp"
#include "stationcast/graph.hpp"
#include "stationcast/ingest.hpp"
#include "stationcast/manifest.hpp"
#include "stationcast/metrics.hpp"
#include "stationcast/nn.hpp"
#include "stationcast/pipeline.hpp"
#include "stationcast/rng.hpp"
#include "stationcast/serialize.hpp"
#include "stationcast/synthetic.hpp"
#include "stationcast/tensor.hpp"
#include "stationcast/timestamps.hpp"
#include "stationcast/train.hpp"

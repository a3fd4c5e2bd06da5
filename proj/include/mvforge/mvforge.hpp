#pragma once

#include "mvforge/annotate.hpp"
#include "mvforge/config.hpp"
#include "mvforge/dataset_io.hpp"
#include "mvforge/errors.hpp"
#include "mvforge/evaluation.hpp"
#include "mvforge/fusion.hpp"
#include "mvforge/generator.hpp"
#include "mvforge/geometry.hpp"
#include "mvforge/grid_map.hpp"
#include "mvforge/hungarian.hpp"
#include "mvforge/json_positions.hpp"
#include "mvforge/metrics.hpp"
#include "mvforge/ot.hpp"
#include "mvforge/pipeline.hpp"
#include "mvforge/polygon.hpp"
#include "mvforge/rng.hpp"
#include "mvforge/scene_synth.hpp"
#include "mvforge/stats.hpp"

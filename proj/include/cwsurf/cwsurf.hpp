#pragma once

#include "cwsurf/types.hpp"
#include "cwsurf/minkowski.hpp"
#include "cwsurf/chart.hpp"
#include "cwsurf/stencil.hpp"
#include "cwsurf/surface.hpp"
#include "cwsurf/congruence.hpp"
#include "cwsurf/stats.hpp"
#include "cwsurf/connection_family.hpp"
#include "cwsurf/conserved.hpp"
#include "cwsurf/transforms.hpp"
#include "cwsurf/io.hpp"
#include "cwsurf/pipeline.hpp"

#pragma once

#include "unfold/core.hpp"
#include "unfold/quadrature.hpp"
#include "unfold/series.hpp"
#include "unfold/chi.hpp"
#include "unfold/geometry.hpp"
#include "unfold/line.hpp"
#include "unfold/transforms.hpp"
#include "unfold/solver.hpp"
#include "unfold/applications.hpp"

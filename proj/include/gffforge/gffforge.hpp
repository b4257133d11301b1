#pragma once

#include "gffforge/errors.hpp"
#include "gffforge/quadrature.hpp"
#include "gffforge/geometry.hpp"
#include "gffforge/test_function.hpp"
#include "gffforge/lattice.hpp"
#include "gffforge/observables.hpp"
#include "gffforge/random.hpp"
#include "gffforge/parallel.hpp"
#include "gffforge/greens.hpp"
#include "gffforge/fields.hpp"
#include "gffforge/averaging.hpp"
#include "gffforge/excursions.hpp"
#include "gffforge/stats.hpp"
#include "gffforge/verify.hpp"
#include "gffforge/experiments.hpp"

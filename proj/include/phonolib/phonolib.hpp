#pragma once

#include "dynamics.hpp"
#include "errors.hpp"
#include "fit/compare.hpp"
#include "fit/dataset.hpp"
#include "fit/engine.hpp"
#include "fit/models.hpp"
#include "interpolation.hpp"
#include "linewidth.hpp"
#include "presets.hpp"
#include "quadrature.hpp"
#include "rates.hpp"
#include "shifts.hpp"
#include "spectra.hpp"
#include "units.hpp"
#include "version.hpp"

#pragma once

// Umbrella header.

#include "ellreg/accumulate.hpp"
#include "ellreg/csv.hpp"
#include "ellreg/distributions.hpp"
#include "ellreg/elliptical.hpp"
#include "ellreg/errors.hpp"
#include "ellreg/estimators.hpp"
#include "ellreg/model.hpp"
#include "ellreg/montecarlo.hpp"
#include "ellreg/quadrature.hpp"
#include "ellreg/risk.hpp"
#include "ellreg/rng.hpp"
#include "ellreg/special.hpp"

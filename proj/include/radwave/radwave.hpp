#pragma once

#include "bubble_decomposition.hpp"
#include "core_fields.hpp"
#include "elliptic_linearization.hpp"
#include "error.hpp"
#include "estimates_lab.hpp"
#include "ground_state.hpp"
#include "io.hpp"
#include "linear_radiation.hpp"
#include "nonlinear_evolution.hpp"
#include "quadrature.hpp"
#include "scenario.hpp"

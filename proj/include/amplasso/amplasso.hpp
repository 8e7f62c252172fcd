#pragma once

#include "amplasso/amp.hpp"
#include "amplasso/csv.hpp"
#include "amplasso/errors.hpp"
#include "amplasso/experiments.hpp"
#include "amplasso/kernels.hpp"
#include "amplasso/lasso.hpp"
#include "amplasso/policy.hpp"
#include "amplasso/prior.hpp"
#include "amplasso/problem.hpp"
#include "amplasso/rng.hpp"
#include "amplasso/state_evolution.hpp"

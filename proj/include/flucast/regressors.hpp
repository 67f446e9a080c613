#pragma once

#include "flucast/regressors/adaboost.hpp"
#include "flucast/regressors/cross_validation.hpp"
#include "flucast/regressors/lasso.hpp"
#include "flucast/regressors/scaling.hpp"
#include "flucast/regressors/svr.hpp"
#include "flucast/regressors/tree.hpp"

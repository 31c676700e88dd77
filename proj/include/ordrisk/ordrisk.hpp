#pragma once

#include "ordrisk/cart.hpp"
#include "ordrisk/dataset.hpp"
#include "ordrisk/error.hpp"
#include "ordrisk/evaluation.hpp"
#include "ordrisk/forest.hpp"
#include "ordrisk/imputation.hpp"
#include "ordrisk/logistic.hpp"
#include "ordrisk/matrix.hpp"
#include "ordrisk/metrics.hpp"
#include "ordrisk/ordinal.hpp"
#include "ordrisk/parallel.hpp"
#include "ordrisk/risk.hpp"
#include "ordrisk/rng.hpp"
#include "ordrisk/synthetic.hpp"

#pragma once

// Numerics only; the CSV/JSON helpers live under latentgc/io/.

#include "benchmark.hpp"
#include "causality.hpp"
#include "covariance.hpp"
#include "deflation.hpp"
#include "gradient.hpp"
#include "matching.hpp"
#include "optimizer.hpp"
#include "simulator.hpp"
#include "surrogate.hpp"
#include "version.hpp"

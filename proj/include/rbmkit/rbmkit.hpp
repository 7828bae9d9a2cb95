#pragma once

// Umbrella header for the whole toolkit.

#include "benchmark.hpp"
#include "classifier.hpp"
#include "dataset.hpp"
#include "detail/parallel.hpp"
#include "errors.hpp"
#include "math.hpp"
#include "partition.hpp"
#include "rbm.hpp"
#include "rng.hpp"
#include "training.hpp"
#include "transfer.hpp"

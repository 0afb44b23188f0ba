#pragma once

#include "fbmq/analytics.hpp"
#include "fbmq/constants.hpp"
#include "fbmq/errors.hpp"
#include "fbmq/experiments.hpp"
#include "fbmq/functional.hpp"
#include "fbmq/gaussgen.hpp"
#include "fbmq/parallel.hpp"
#include "fbmq/rng.hpp"
#include "fbmq/storage.hpp"

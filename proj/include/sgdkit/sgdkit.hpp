#pragma once

#include "sgdkit/config.hpp"
#include "sgdkit/core.hpp"
#include "sgdkit/data.hpp"
#include "sgdkit/harness.hpp"
#include "sgdkit/lr.hpp"
#include "sgdkit/metrics.hpp"
#include "sgdkit/models.hpp"
#include "sgdkit/optim.hpp"
#include "sgdkit/parallel.hpp"
#include "sgdkit/plot.hpp"
#include "sgdkit/synthetic.hpp"

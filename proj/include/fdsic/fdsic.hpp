// SPDX-License-Identifier: Apache-2.0
#pragma once

/// @file fdsic.hpp
/// @brief Umbrella header.

#include "fdsic/arith.hpp"
#include "fdsic/cancellers.hpp"
#include "fdsic/complexity.hpp"
#include "fdsic/config.hpp"
#include "fdsic/dataset.hpp"
#include "fdsic/error.hpp"
#include "fdsic/fixed_point.hpp"
#include "fdsic/fx_cancellers.hpp"
#include "fdsic/kernels.hpp"
#include "fdsic/metrics.hpp"
#include "fdsic/model_io.hpp"
#include "fdsic/nn_train.hpp"
#include "fdsic/pipeline/geometry.hpp"
#include "fdsic/pipeline/simulate.hpp"
#include "fdsic/pipeline/trace.hpp"
#include "fdsic/pipeline/units.hpp"
#include "fdsic/pipeline/weights_memory.hpp"
#include "fdsic/signal.hpp"
#include "fdsic/sweep.hpp"

// SPDX-License-Identifier: Apache-2.0
//
// Umbrella header: the whole public surface.

#pragma once

#include "oencsd/assignment.hpp"
#include "oencsd/cli.hpp"
#include "oencsd/cluster.hpp"
#include "oencsd/common.hpp"
#include "oencsd/config.hpp"
#include "oencsd/eend_eda.hpp"
#include "oencsd/eval.hpp"
#include "oencsd/features.hpp"
#include "oencsd/losses.hpp"
#include "oencsd/refine.hpp"
#include "oencsd/rttm.hpp"
#include "oencsd/segments.hpp"
#include "oencsd/simulate.hpp"
#include "oencsd/stream.hpp"
#include "oencsd/wav.hpp"
#include "oencsd/weights.hpp"

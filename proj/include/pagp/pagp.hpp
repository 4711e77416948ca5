#pragma once

// Umbrella header for the whole library.

#include "pagp/types.hpp"
#include "pagp/kernel.hpp"
#include "pagp/linalg.hpp"
#include "pagp/reference.hpp"
#include "pagp/joint_model.hpp"
#include "pagp/acquisition.hpp"
#include "pagp/offline_design.hpp"
#include "pagp/environment.hpp"
#include "pagp/algorithms.hpp"
#include "pagp/bench.hpp"
#include "pagp/config.hpp"
#include "pagp/remote_oracle.hpp"

#pragma once

#include "csikit/channel.hpp"
#include "csikit/common.hpp"
#include "csikit/dhsic.hpp"
#include "csikit/harness.hpp"
#include "csikit/io.hpp"
#include "csikit/pca.hpp"
#include "csikit/rng.hpp"
#include "csikit/stats.hpp"

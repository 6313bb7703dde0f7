#pragma once

// Adaptive zero-error communication over discrete memoryless channels with
// noiseless and noisy feedback: channel analysis, capacity computation,
// erasure-only codebooks, retransmission protocols, and the simulation and
// verification harness around them.

#include "zefchan/analysis.hpp"
#include "zefchan/capacity.hpp"
#include "zefchan/codebook.hpp"
#include "zefchan/dmc.hpp"
#include "zefchan/errors.hpp"
#include "zefchan/json_io.hpp"
#include "zefchan/protocol.hpp"
#include "zefchan/rng.hpp"
#include "zefchan/sim.hpp"

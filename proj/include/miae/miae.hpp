#pragma once

// Umbrella header pulling in the whole library.

#include "miae/version.hpp"

#include "miae/core/autograd.hpp"
#include "miae/core/autograd_geom.hpp"
#include "miae/core/autograd_nn.hpp"
#include "miae/core/errors.hpp"
#include "miae/core/rng.hpp"
#include "miae/core/tensor.hpp"

#include "miae/geometry/frames.hpp"
#include "miae/geometry/kabsch.hpp"
#include "miae/geometry/vec3.hpp"

#include "miae/io/backbone.hpp"
#include "miae/io/container.hpp"
#include "miae/io/pdb.hpp"

#include "miae/masking/mask.hpp"

#include "miae/model/checkpoint.hpp"
#include "miae/model/config.hpp"
#include "miae/model/layers.hpp"
#include "miae/model/network.hpp"
#include "miae/model/params.hpp"

#include "miae/losses/losses.hpp"

#include "miae/train/config.hpp"
#include "miae/train/metrics.hpp"
#include "miae/train/optimizer.hpp"
#include "miae/train/schedule.hpp"
#include "miae/train/trainer.hpp"

#include "miae/eval/embed.hpp"
#include "miae/eval/lbfgs.hpp"
#include "miae/eval/metrics.hpp"
#include "miae/eval/probe.hpp"

#include "miae/data/cath.hpp"
#include "miae/data/samples.hpp"
#include "miae/data/split.hpp"
#include "miae/data/synthetic.hpp"

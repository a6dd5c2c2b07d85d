#pragma once

#include "mvprune/analysis.hpp"
#include "mvprune/autodiff.hpp"
#include "mvprune/config.hpp"
#include "mvprune/error.hpp"
#include "mvprune/format.hpp"
#include "mvprune/graph.hpp"
#include "mvprune/init.hpp"
#include "mvprune/model.hpp"
#include "mvprune/multiview.hpp"
#include "mvprune/optim.hpp"
#include "mvprune/pooling.hpp"
#include "mvprune/prune.hpp"
#include "mvprune/report.hpp"
#include "mvprune/rng.hpp"
#include "mvprune/sparse.hpp"
#include "mvprune/split.hpp"
#include "mvprune/synth.hpp"
#include "mvprune/tensor.hpp"
#include "mvprune/train.hpp"
#include "mvprune/tu_format.hpp"

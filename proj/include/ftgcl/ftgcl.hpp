#pragma once

#include "ftgcl/autodiff.hpp"
#include "ftgcl/contrast.hpp"
#include "ftgcl/encoder.hpp"
#include "ftgcl/error.hpp"
#include "ftgcl/eval.hpp"
#include "ftgcl/graph.hpp"
#include "ftgcl/io.hpp"
#include "ftgcl/topo_embed.hpp"
#include "ftgcl/train.hpp"
#include "ftgcl/views.hpp"
#include "ftgcl/wl.hpp"

#pragma once

#include "podm/autodiff.hpp"
#include "podm/backbone.hpp"
#include "podm/checkpoint.hpp"
#include "podm/commands.hpp"
#include "podm/config.hpp"
#include "podm/data.hpp"
#include "podm/errors.hpp"
#include "podm/gaussian.hpp"
#include "podm/grad_check.hpp"
#include "podm/metrics.hpp"
#include "podm/model.hpp"
#include "podm/nn.hpp"
#include "podm/pon.hpp"
#include "podm/random.hpp"
#include "podm/sam.hpp"
#include "podm/tensor.hpp"
#include "podm/trainer.hpp"
#include "podm/types.hpp"

#pragma once

#include "routefuse/common.hpp"
#include "routefuse/corpus.hpp"
#include "routefuse/distill.hpp"
#include "routefuse/gateway.hpp"
#include "routefuse/harness.hpp"
#include "routefuse/judge.hpp"
#include "routefuse/pricing.hpp"
#include "routefuse/reward.hpp"
#include "routefuse/routers.hpp"
#include "routefuse/synthetic.hpp"
#include "routefuse/thought.hpp"

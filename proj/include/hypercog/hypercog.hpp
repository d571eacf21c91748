#pragma once

#include "hypercog/aggregate.hpp"
#include "hypercog/community.hpp"
#include "hypercog/compartments.hpp"
#include "hypercog/error.hpp"
#include "hypercog/explain.hpp"
#include "hypercog/features.hpp"
#include "hypercog/lemon.hpp"
#include "hypercog/lexicon.hpp"
#include "hypercog/metrics.hpp"
#include "hypercog/models.hpp"
#include "hypercog/network.hpp"
#include "hypercog/pipeline.hpp"
#include "hypercog/svg.hpp"
#include "hypercog/synthetic.hpp"
#include "hypercog/tree.hpp"
#include "hypercog/validate.hpp"

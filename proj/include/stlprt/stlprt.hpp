#pragma once

#include "stlprt/artifacts.hpp"
#include "stlprt/branch_bound.hpp"
#include "stlprt/coordinator.hpp"
#include "stlprt/encoding.hpp"
#include "stlprt/error.hpp"
#include "stlprt/external.hpp"
#include "stlprt/lp_format.hpp"
#include "stlprt/milp_model.hpp"
#include "stlprt/model.hpp"
#include "stlprt/plot.hpp"
#include "stlprt/reach.hpp"
#include "stlprt/scenario.hpp"
#include "stlprt/simplex.hpp"
#include "stlprt/stl.hpp"
#include "stlprt/stl_parser.hpp"
#include "stlprt/tightening.hpp"
#include "stlprt/verification.hpp"

#pragma once

// Everything at once. Individual headers can be included on their own.

#include "pnpsci/admm.hpp"
#include "pnpsci/bench.hpp"
#include "pnpsci/color.hpp"
#include "pnpsci/config.hpp"
#include "pnpsci/denoisers.hpp"
#include "pnpsci/error.hpp"
#include "pnpsci/gap.hpp"
#include "pnpsci/metrics.hpp"
#include "pnpsci/plugin.hpp"
#include "pnpsci/sensing.hpp"
#include "pnpsci/solver.hpp"
#include "pnpsci/synthetic.hpp"
#include "pnpsci/tensor.hpp"
#include "pnpsci/tensor_io.hpp"
#include "pnpsci/trace.hpp"

#pragma once

#include "cwl/common.hpp"
#include "cwl/cyclic_dataset.hpp"
#include "cwl/evaluation.hpp"
#include "cwl/forecaster.hpp"
#include "cwl/io.hpp"
#include "cwl/llr.hpp"
#include "cwl/poisson.hpp"
#include "cwl/synthetic.hpp"
#include "cwl/trace.hpp"

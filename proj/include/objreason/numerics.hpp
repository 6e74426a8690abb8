#pragma once

#include "objreason/numerics/attention_op.hpp"
#include "objreason/numerics/error.hpp"
#include "objreason/numerics/gradcheck.hpp"
#include "objreason/numerics/graph.hpp"
#include "objreason/numerics/ops.hpp"
#include "objreason/numerics/tensor.hpp"

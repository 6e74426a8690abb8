#pragma once

#include "objreason/analysis/attention.hpp"
#include "objreason/analysis/reports.hpp"
#include "objreason/analysis/taxonomy.hpp"

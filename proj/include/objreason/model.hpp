#pragma once

#include "objreason/model/checkpoint.hpp"
#include "objreason/model/config.hpp"
#include "objreason/model/heads.hpp"
#include "objreason/model/sequence.hpp"
#include "objreason/model/transformer.hpp"

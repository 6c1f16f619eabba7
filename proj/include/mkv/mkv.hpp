#pragma once

#include "mkv/controls.hpp"
#include "mkv/error.hpp"
#include "mkv/lfd.hpp"
#include "mkv/measures.hpp"
#include "mkv/model.hpp"
#include "mkv/model_zoo.hpp"
#include "mkv/objective.hpp"
#include "mkv/regularity.hpp"
#include "mkv/rng.hpp"
#include "mkv/simulate.hpp"
#include "mkv/transport.hpp"
#include "mkv/verify.hpp"

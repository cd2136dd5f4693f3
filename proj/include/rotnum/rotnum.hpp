#pragma once

#include "rotnum/dual.hpp"
#include "rotnum/error.hpp"
#include "rotnum/expr.hpp"
#include "rotnum/flow.hpp"
#include "rotnum/frame.hpp"
#include "rotnum/io.hpp"
#include "rotnum/nms.hpp"
#include "rotnum/orbit.hpp"
#include "rotnum/parallel.hpp"
#include "rotnum/rotation.hpp"
#include "rotnum/scenes.hpp"

#pragma once

#include "rulegrad/autodiff.hpp"
#include "rulegrad/curriculum.hpp"
#include "rulegrad/data.hpp"
#include "rulegrad/error.hpp"
#include "rulegrad/eval.hpp"
#include "rulegrad/logic.hpp"
#include "rulegrad/losses.hpp"
#include "rulegrad/rng.hpp"
#include "rulegrad/tensor.hpp"
#include "rulegrad/train.hpp"
#include "rulegrad/vse.hpp"

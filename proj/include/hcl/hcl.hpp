#pragma once

#include "hcl/compare.hpp"
#include "hcl/corpus.hpp"
#include "hcl/curriculum.hpp"
#include "hcl/emotion_wheel.hpp"
#include "hcl/error.hpp"
#include "hcl/eval.hpp"
#include "hcl/model.hpp"
#include "hcl/random.hpp"
#include "hcl/synth.hpp"
#include "hcl/training.hpp"
#include "hcl/version.hpp"

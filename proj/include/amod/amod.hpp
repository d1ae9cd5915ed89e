#pragma once

#include "amod/common.hpp"
#include "amod/quadrature.hpp"
#include "amod/fft.hpp"
#include "amod/group.hpp"
#include "amod/windows.hpp"
#include "amod/symbol.hpp"
#include "amod/admissibility.hpp"
#include "amod/voice.hpp"

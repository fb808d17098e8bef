#pragma once

#include "lpg/align.hpp"
#include "lpg/classify.hpp"
#include "lpg/domain.hpp"
#include "lpg/errors.hpp"
#include "lpg/graphgen.hpp"
#include "lpg/harness.hpp"
#include "lpg/kernels.hpp"
#include "lpg/lanczos.hpp"
#include "lpg/loss.hpp"
#include "lpg/operator_spectrum.hpp"
#include "lpg/quadrature.hpp"
#include "lpg/rng.hpp"
#include "lpg/spectral.hpp"

#pragma once

#include "qhyper/context.hpp"
#include "qhyper/error.hpp"
#include "qhyper/identities.hpp"
#include "qhyper/integrals.hpp"
#include "qhyper/params.hpp"
#include "qhyper/qkernel.hpp"
#include "qhyper/quadrature.hpp"
#include "qhyper/report.hpp"
#include "qhyper/scaled_complex.hpp"
#include "qhyper/weights.hpp"

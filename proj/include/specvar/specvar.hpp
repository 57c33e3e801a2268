#pragma once

#include "specvar/errors.hpp"
#include "specvar/extended_value.hpp"
#include "specvar/matrix_core.hpp"
#include "specvar/sv_calculus.hpp"
#include "specvar/absym.hpp"
#include "specvar/oimf.hpp"
#include "specvar/oracles.hpp"
#include "specvar/certify.hpp"

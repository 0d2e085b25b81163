#pragma once

#include "errors.hpp"
#include "util.hpp"
#include "quadrature.hpp"
#include "minimize.hpp"
#include "fock.hpp"
#include "coherent.hpp"
#include "squeeze.hpp"
#include "floquet.hpp"
#include "crystal.hpp"
#include "multimode.hpp"
#include "dicke.hpp"

#pragma once

#include "common.hpp"
#include "poly.hpp"
#include "harmonic.hpp"
#include "mobius.hpp"
#include "random.hpp"
#include "basis.hpp"
#include "rkhs.hpp"
#include "contraction.hpp"
#include "fock.hpp"
#include "io.hpp"

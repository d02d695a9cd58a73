#pragma once

// Everything in one include.

#include "kakeya/core.hpp"
#include "kakeya/crofton.hpp"
#include "kakeya/cutting.hpp"
#include "kakeya/degred.hpp"
#include "kakeya/field.hpp"
#include "kakeya/geometry.hpp"
#include "kakeya/grainy.hpp"
#include "kakeya/io.hpp"
#include "kakeya/linalg.hpp"
#include "kakeya/parallel.hpp"
#include "kakeya/poly1.hpp"
#include "kakeya/poly3.hpp"
#include "kakeya/rng.hpp"
#include "kakeya/surfgeom.hpp"
#include "kakeya/vanishing.hpp"

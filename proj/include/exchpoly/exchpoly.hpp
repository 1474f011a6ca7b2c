#pragma once

#include "exchpoly/common.hpp"
#include "exchpoly/geometry.hpp"
#include "exchpoly/inference.hpp"
#include "exchpoly/io.hpp"
#include "exchpoly/measures.hpp"
#include "exchpoly/parallel.hpp"
#include "exchpoly/pex.hpp"
#include "exchpoly/pmf.hpp"
#include "exchpoly/rays.hpp"
#include "exchpoly/rng.hpp"
#include "exchpoly/sampling.hpp"

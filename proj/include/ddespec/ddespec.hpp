#pragma once

// Umbrella header; pulls in the whole library.

#include "error.hpp"
#include "matrix.hpp"
#include "models.hpp"
#include "charfn.hpp"
#include "polyroots.hpp"
#include "asymspec.hpp"
#include "parallel.hpp"
#include "numspec.hpp"
#include "stab.hpp"
#include "ddesim.hpp"
#include "io.hpp"
#include "cli.hpp"

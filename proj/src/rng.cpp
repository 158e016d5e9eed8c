// File: rng.cpp
// Description: Translation unit anchor for the header-only RNG utilities.
#include "apm/rng.hpp"

#pragma once

#include "qsky/biphoton.hpp"
#include "qsky/config.hpp"
#include "qsky/error.hpp"
#include "qsky/grid.hpp"
#include "qsky/lgmodes.hpp"
#include "qsky/record_csv.hpp"
#include "qsky/runner.hpp"
#include "qsky/stokesfield.hpp"
#include "qsky/tomography.hpp"
#include "qsky/topology.hpp"
#include "qsky/witnesses.hpp"

#pragma once

// Umbrella header.

#include "oamreg/analysis.hpp"
#include "oamreg/basis.hpp"
#include "oamreg/error.hpp"
#include "oamreg/imagefile.hpp"
#include "oamreg/io.hpp"
#include "oamreg/optics.hpp"
#include "oamreg/pipeline.hpp"
#include "oamreg/reduce.hpp"
#include "oamreg/regress.hpp"
#include "oamreg/statespace.hpp"
#include "oamreg/store.hpp"
#include "oamreg/version.hpp"

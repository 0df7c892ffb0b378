#pragma once

#include "hmflow/error.hpp"
#include "hmflow/target.hpp"
#include "hmflow/grid.hpp"
#include "hmflow/relax.hpp"
#include "hmflow/wed.hpp"
#include "hmflow/flows.hpp"
#include "hmflow/frequency.hpp"
#include "hmflow/diagnostics.hpp"
#include "hmflow/init.hpp"
#include "hmflow/io.hpp"
#include "hmflow/config.hpp"
#include "hmflow/harness.hpp"

// eitbs.hpp - the whole library.

#pragma once

#include "eitbs/core.hpp"
#include "eitbs/mbloch.hpp"
#include "eitbs/splitter.hpp"
#include "eitbs/fock_oracle.hpp"
#include "eitbs/stats.hpp"
#include "eitbs/scenario.hpp"
#include "eitbs/config.hpp"
#include "eitbs/csv.hpp"
#include "eitbs/runners.hpp"
#include "eitbs/acceptance.hpp"

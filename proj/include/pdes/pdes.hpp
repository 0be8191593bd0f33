#pragma once

#include "value.hpp"
#include "dec.hpp"
#include "null_query.hpp"
#include "chase.hpp"
#include "repair.hpp"
#include "system.hpp"
#include "semantics.hpp"
#include "import.hpp"
#include "asp.hpp"

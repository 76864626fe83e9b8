#include <doctest.h>

#include "dynext/report.hpp"

#pragma once

#include "monodyn/core.hpp"
#include "monodyn/dynamics.hpp"
#include "monodyn/effpot.hpp"
#include "monodyn/error.hpp"
#include "monodyn/oracle.hpp"
#include "monodyn/stationary.hpp"

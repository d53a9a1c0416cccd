#pragma once

#include "tresca/adapt.hpp"
#include "tresca/config.hpp"
#include "tresca/contact.hpp"
#include "tresca/driver.hpp"
#include "tresca/elasticity.hpp"
#include "tresca/errors.hpp"
#include "tresca/estimator.hpp"
#include "tresca/geometry.hpp"
#include "tresca/mesh.hpp"
#include "tresca/parallel.hpp"
#include "tresca/quadrature.hpp"
#include "tresca/space.hpp"
#include "tresca/vtk.hpp"

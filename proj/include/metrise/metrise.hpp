#pragma once

#include "metrise/expr.hpp"
#include "metrise/field.hpp"
#include "metrise/frame.hpp"
#include "metrise/geodesic.hpp"
#include "metrise/projective.hpp"
#include "metrise/sphere.hpp"
#include "metrise/tensor.hpp"

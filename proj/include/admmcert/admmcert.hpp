#pragma once

#include <admmcert/admm.hpp>
#include <admmcert/csv.hpp>
#include <admmcert/errors.hpp>
#include <admmcert/feasibility.hpp>
#include <admmcert/lasso.hpp>
#include <admmcert/linalg.hpp>
#include <admmcert/lmi.hpp>
#include <admmcert/parallel.hpp>
#include <admmcert/quadratic.hpp>
#include <admmcert/rate_bounds.hpp>

#ifndef KDPP_KDPP_HPP
#define KDPP_KDPP_HPP

#include "kdpp/analysis.hpp"
#include "kdpp/chain.hpp"
#include "kdpp/conditional.hpp"
#include "kdpp/discrete.hpp"
#include "kdpp/errors.hpp"
#include "kdpp/gram.hpp"
#include "kdpp/kernel.hpp"
#include "kdpp/rng.hpp"
#include "kdpp/sphere.hpp"
#include "kdpp/warmstart.hpp"

#endif

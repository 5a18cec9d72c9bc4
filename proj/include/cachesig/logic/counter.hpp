/*
 * Copyright 2026 The cachesig Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*!
  \file counter.hpp
  \brief Population-count netlist built from one-bit ripple additions

  Each input is added into a binary counter with a chain of half adders
  (NAND form). Counter bits that are still constant zero are tracked
  symbolically, so no gate ever reads a constant.
*/

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "../errors.hpp"
#include "netlist.hpp"

namespace cachesig::logic
{

/*! \brief ceil(log2(n + 1)): bits needed to hold any count in [0, n]. */
inline std::uint32_t counter_width( std::uint64_t n )
{
  std::uint32_t w = 0;
  while ( ( std::uint64_t{ 1 } << w ) <= n )
    ++w;
  return w;
}

/*! \brief Netlist with `n_inputs` inputs `x0..` and outputs `c0..` (LSB first) holding their popcount. */
inline netlist build_counter_netlist( std::uint32_t n_inputs )
{
  if ( n_inputs == 0 )
    throw precondition_error( "build_counter_netlist: at least one input is required" );

  netlist net;
  std::vector<signal> xs;
  for ( std::uint32_t i = 0; i < n_inputs; ++i )
    xs.push_back( net.add_input( "x" + std::to_string( i ) ) );

  auto const width = counter_width( n_inputs );
  std::vector<std::optional<signal>> bit( width ); /* nullopt: constant zero */

  for ( std::uint32_t i = 0; i < n_inputs; ++i )
  {
    signal carry = xs[i];
    for ( std::uint32_t j = 0; j < width; ++j )
    {
      if ( !bit[j] )
      {
        bit[j] = carry;
        break;
      }
      auto const tag = "s" + std::to_string( i ) + "b" + std::to_string( j );
      auto const c = *bit[j];
      auto const n1 = net.add_gate( op::nand_gate, { c, carry }, tag + ".n" );
      auto const p = net.add_gate( op::nand_gate, { c, n1 }, tag + ".p" );
      auto const q = net.add_gate( op::nand_gate, { carry, n1 }, tag + ".q" );
      bit[j] = net.add_gate( op::nand_gate, { p, q }, tag + ".s" );
      if ( j + 1 == width )
        break; /* the count never exceeds n, so the top carry is always zero */
      carry = net.add_gate( op::not_gate, { n1 }, tag + ".c" );
    }
  }

  for ( auto const& b : bit )
    net.add_output( *b );
  return net;
}

} // namespace cachesig::logic

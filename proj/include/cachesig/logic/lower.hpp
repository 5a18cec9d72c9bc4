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
  \file lower.hpp
  \brief Lowering onto the gates the cache gadgets implement natively

  The result uses only NAND, NOT and REPLICATE and reads every signal at
  most once, because reading a cacheline destroys it. The pass runs in two
  steps:

  1. expansion: AND = NOT(NAND), OR = NAND of inverted inputs,
     NOR = NOT(OR), XOR = the four-NAND construction (chained for wider
     XORs), outputs wired straight to a primary input become NOT(NOT(x));
  2. fan-out: each signal read `u > 1` times gets a REPLICATE right after
     its definition. Fan-out above `max_fanout` becomes a replication tree.
*/

#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "../errors.hpp"
#include "netlist.hpp"

namespace cachesig::logic
{

struct lower_params
{
  std::uint32_t max_fanout = 23;
  std::uint32_t max_nand_fan_in = 128;
};

namespace detail
{

class expander
{
public:
  expander( netlist const& src, lower_params const& ps ) : src_( src ), ps_( ps ), map_( src.num_signals() ) {}

  netlist run()
  {
    for ( auto s : src_.inputs() )
      map_[s] = out_.add_input( src_.name( s ) );

    for ( auto const& g : src_.gates() )
    {
      std::vector<signal> ins;
      for ( auto s : g.inputs )
        ins.push_back( map_[s] );
      auto const& name = src_.name( g.outputs.front() );
      switch ( g.kind )
      {
      case op::not_gate:
        map_[g.outputs[0]] = out_.add_gate( op::not_gate, ins, name );
        break;
      case op::nand_gate:
        map_[g.outputs[0]] = nand( ins, name );
        break;
      case op::and_gate:
        map_[g.outputs[0]] = out_.add_gate( op::not_gate, { nand( ins, name + ".n" ) }, name );
        break;
      case op::or_gate:
        map_[g.outputs[0]] = or_gate( ins, name );
        break;
      case op::nor_gate:
        map_[g.outputs[0]] = out_.add_gate( op::not_gate, { or_gate( ins, name + ".o" ) }, name );
        break;
      case op::xor_gate:
      {
        signal acc = ins[0];
        for ( std::size_t i = 1; i < ins.size(); ++i )
          acc = xor2( acc, ins[i], i + 1 == ins.size() ? name : name + ".p" + std::to_string( i ) );
        map_[g.outputs[0]] = acc;
        break;
      }
      case op::replicate:
        /* copies become extra reads of the source; the fan-out step rebuilds them */
        for ( auto o : g.outputs )
          map_[o] = ins[0];
        break;
      }
    }

    for ( auto s : src_.outputs() )
    {
      auto m = map_[s];
      if ( out_.is_input( m ) )
      {
        auto const& n = out_.name( m );
        m = out_.add_gate( op::not_gate, { out_.add_gate( op::not_gate, { m }, n + ".inv" ) }, n + ".buf" );
      }
      out_.add_output( m );
    }
    return std::move( out_ );
  }

private:
  /* wider than the limit: AND groups of max_nand_fan_in first, then NAND the partial products */
  signal nand( std::vector<signal> const& ins, std::string const& name )
  {
    auto const k = ps_.max_nand_fan_in;
    if ( ins.size() <= k )
      return out_.add_gate( op::nand_gate, ins, name );
    std::vector<signal> partial;
    for ( std::size_t i = 0; i < ins.size(); i += k )
    {
      std::vector<signal> group( ins.begin() + i, ins.begin() + std::min( ins.size(), i + k ) );
      auto const part = name + ".a" + std::to_string( i / k );
      partial.push_back( group.size() == 1 ? group[0]
                                           : out_.add_gate( op::not_gate, { nand( group, part + ".n" ) }, part ) );
    }
    return nand( partial, name );
  }

  signal or_gate( std::vector<signal> const& ins, std::string const& name )
  {
    std::vector<signal> inv;
    for ( std::size_t i = 0; i < ins.size(); ++i )
      inv.push_back( out_.add_gate( op::not_gate, { ins[i] }, name + ".i" + std::to_string( i ) ) );
    return nand( inv, name );
  }

  signal xor2( signal a, signal b, std::string const& name )
  {
    auto const n1 = out_.add_gate( op::nand_gate, { a, b }, name + ".n1" );
    auto const x = out_.add_gate( op::nand_gate, { a, n1 }, name + ".x" );
    auto const y = out_.add_gate( op::nand_gate, { b, n1 }, name + ".y" );
    return out_.add_gate( op::nand_gate, { x, y }, name );
  }

  netlist const& src_;
  lower_params const& ps_;
  std::vector<signal> map_;
  netlist out_;
};

inline netlist insert_fanout( netlist const& src, lower_params const& ps )
{
  if ( ps.max_fanout < 2 )
    throw precondition_error( "lower: max_fanout must be at least 2" );
  auto const uses = use_counts( src );
  netlist out;
  std::vector<signal> map( src.num_signals() );
  std::vector<std::deque<signal>> copies( src.num_signals() );

  auto const fan_out = [&]( signal s_src ) {
    auto const u = uses[s_src];
    if ( u <= 1 )
      return;
    std::vector<signal> leaves = out.add_replicate( map[s_src], std::min<std::size_t>( ps.max_fanout, u ) );
    while ( leaves.size() < u )
    {
      auto const leaf = leaves.back();
      leaves.pop_back();
      auto const k = std::min<std::size_t>( ps.max_fanout, u - leaves.size() );
      auto more = out.add_replicate( leaf, k );
      leaves.insert( leaves.end(), more.begin(), more.end() );
    }
    copies[s_src].assign( leaves.begin(), leaves.end() );
  };
  auto const read = [&]( signal s_src ) {
    if ( copies[s_src].empty() )
      return map[s_src];
    auto const c = copies[s_src].front();
    copies[s_src].pop_front();
    return c;
  };

  for ( auto s : src.inputs() )
    map[s] = out.add_input( src.name( s ) );
  for ( auto s : src.inputs() )
    fan_out( s );

  for ( auto const& g : src.gates() )
  {
    std::vector<signal> ins;
    for ( auto s : g.inputs )
      ins.push_back( read( s ) );
    if ( g.kind == op::replicate )
    {
      auto outs = out.add_replicate( ins[0], g.outputs.size() );
      for ( std::size_t i = 0; i < outs.size(); ++i )
        map[g.outputs[i]] = outs[i];
    }
    else
    {
      map[g.outputs[0]] = out.add_gate( g.kind, ins, src.name( g.outputs[0] ) );
    }
    for ( auto o : g.outputs )
      fan_out( o );
  }
  for ( auto s : src.outputs() )
    out.add_output( read( s ) );
  return out;
}

} // namespace detail

/*! \brief True if `net` only uses NAND/NOT/REPLICATE and reads each signal once. */
inline bool is_lowered( netlist const& net, lower_params const& ps = {} )
{
  for ( auto const& g : net.gates() )
  {
    if ( g.kind != op::nand_gate && g.kind != op::not_gate && g.kind != op::replicate )
      return false;
    if ( g.kind == op::replicate && g.outputs.size() > ps.max_fanout )
      return false;
    if ( g.kind == op::nand_gate && g.inputs.size() > ps.max_nand_fan_in )
      return false;
  }
  for ( auto s : net.outputs() )
    if ( net.is_input( s ) )
      return false;
  return multiply_used( net ).empty();
}

/*! \brief Equivalent netlist over {NAND, NOT, REPLICATE} obeying single use. */
inline netlist lower( netlist const& net, lower_params const& ps = {} )
{
  if ( ps.max_fanout < 2 || ps.max_nand_fan_in < 2 )
    throw precondition_error( "lower: max_fanout and max_nand_fan_in must be at least 2" );
  return detail::insert_fanout( detail::expander( net, ps ).run(), ps );
}

} // namespace cachesig::logic

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
  \file execute.hpp
  \brief Running a lowered netlist as a sequence of cache gadgets

  Primary inputs and outputs live on caller-provided lines. Every other
  signal gets a line from a scratch pool; once a signal is consumed its
  line is flushed and goes back to the pool.

  NOT maps to the inverter and NAND to the NAND gadget. The replicator
  gadget inverts, so a netlist REPLICATE runs as an inverter into a
  temporary line followed by the replicator.
*/

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "../cache_model.hpp"
#include "../errors.hpp"
#include "../gadgets.hpp"
#include "lower.hpp"
#include "netlist.hpp"

namespace cachesig::logic
{

inline constexpr std::int64_t external_line = -1;

/*! \brief Scratch-slot assignment for the internal signals of a netlist. */
struct line_plan
{
  std::vector<std::int64_t> slot_of;   /* per signal; external_line for inputs/outputs */
  std::vector<std::int64_t> temp_slot; /* per gate; REPLICATE staging line or -1 */
  std::size_t pool_size = 0;
};

/*! \brief Assigns pool slots in program order, recycling freed slots LIFO.

  Output and staging slots of a gate are taken before its inputs are
  released, so a gate never writes a line it also reads.
*/
inline line_plan plan_lines( netlist const& net )
{
  line_plan plan;
  plan.slot_of.assign( net.num_signals(), external_line );
  plan.temp_slot.assign( net.gates().size(), -1 );

  std::vector<std::uint8_t> external( net.num_signals(), 0 );
  for ( auto s : net.inputs() )
    external[s] = 1;
  for ( auto s : net.outputs() )
    external[s] = 1;

  std::vector<std::int64_t> free_slots;
  auto take = [&] {
    if ( free_slots.empty() )
      return static_cast<std::int64_t>( plan.pool_size++ );
    auto const s = free_slots.back();
    free_slots.pop_back();
    return s;
  };

  for ( std::size_t gi = 0; gi < net.gates().size(); ++gi )
  {
    auto const& g = net.gates()[gi];
    for ( auto o : g.outputs )
      if ( !external[o] )
        plan.slot_of[o] = take();
    if ( g.kind == op::replicate )
      plan.temp_slot[gi] = take();
    for ( auto i : g.inputs )
      if ( plan.slot_of[i] != external_line )
        free_slots.push_back( plan.slot_of[i] );
    if ( plan.temp_slot[gi] >= 0 )
      free_slots.push_back( plan.temp_slot[gi] );
  }
  return plan;
}

/*! \brief A lowered netlist with its line plan, reusable across runs. */
struct compiled_netlist
{
  netlist net;
  line_plan plan;
};

inline compiled_netlist compile( netlist const& net, lower_params const& ps = {} )
{
  auto lowered = is_lowered( net, ps ) ? net : lower( net, ps );
  auto plan = plan_lines( lowered );
  return { std::move( lowered ), std::move( plan ) };
}

/*! \brief Runs `prog` on bound lines.

  `input_lines`/`output_lines` follow the netlist's input/output order;
  `pool` must hold at least `plan.pool_size` absent lines. Input lines are
  consumed; output lines must start absent.
*/
inline void execute_on_lines( compiled_netlist const& prog, std::span<line_id const> input_lines,
                              std::span<line_id const> output_lines, std::span<line_id const> pool,
                              gadget_context& ctx )
{
  auto const& net = prog.net;
  auto const& plan = prog.plan;
  if ( input_lines.size() != net.inputs().size() || output_lines.size() != net.outputs().size() )
    throw precondition_error( "execute: line binding does not match the netlist interface" );
  if ( pool.size() < plan.pool_size )
    throw precondition_error( "execute: scratch pool exhausted, need " + std::to_string( plan.pool_size ) +
                              " lines, have " + std::to_string( pool.size() ) );
  for ( std::size_t i = 0; i < plan.pool_size; ++i )
    if ( ctx.state.phi( pool[i] ) )
      throw precondition_error( "execute: scratch line " + to_string( pool[i] ) + " is not absent" );

  std::vector<line_id> line_of( net.num_signals() );
  for ( signal s = 0; s < net.num_signals(); ++s )
    if ( plan.slot_of[s] != external_line )
      line_of[s] = pool[static_cast<std::size_t>( plan.slot_of[s] )];
  for ( std::size_t i = 0; i < input_lines.size(); ++i )
    line_of[net.inputs()[i]] = input_lines[i];
  for ( std::size_t i = 0; i < output_lines.size(); ++i )
    line_of[net.outputs()[i]] = output_lines[i];

  std::vector<line_id> ins, outs;
  for ( std::size_t gi = 0; gi < net.gates().size(); ++gi )
  {
    auto const& g = net.gates()[gi];
    ins.clear();
    outs.clear();
    for ( auto s : g.inputs )
      ins.push_back( line_of[s] );
    for ( auto s : g.outputs )
      outs.push_back( line_of[s] );

    switch ( g.kind )
    {
    case op::not_gate:
      invert( ins[0], outs[0], ctx );
      break;
    case op::nand_gate:
      nand( ins, outs[0], ctx );
      break;
    case op::replicate:
    {
      auto const& tmp = pool[static_cast<std::size_t>( plan.temp_slot[gi] )];
      invert( ins[0], tmp, ctx );
      replicate( tmp, outs, ctx );
      ctx.state.flush( tmp );
      break;
    }
    default:
      throw precondition_error( "execute: netlist is not lowered (" + std::string( to_string( g.kind ) ) + " gate)" );
    }

    for ( auto s : g.inputs )
      if ( plan.slot_of[s] != external_line )
        ctx.state.flush( line_of[s] );
  }
}

/*! \brief Sets up fresh lines for `assignment`, runs, and reads the outputs by presence. */
inline std::vector<bool> execute( compiled_netlist const& prog, std::vector<bool> const& assignment,
                                  gadget_context& ctx, line_arena& arena )
{
  auto const& net = prog.net;
  if ( assignment.size() != net.inputs().size() )
    throw precondition_error( "execute: expected " + std::to_string( net.inputs().size() ) + " input bits" );

  auto alloc = [&]( std::size_t n ) {
    std::vector<line_id> lines;
    if ( n > 0 )
    {
      lines = arena.allocate( n );
      ctx.state.register_lines( lines );
    }
    return lines;
  };
  auto const in_lines = alloc( net.inputs().size() );
  auto const out_lines = alloc( net.outputs().size() );
  auto const pool = alloc( prog.plan.pool_size );

  for ( std::size_t i = 0; i < in_lines.size(); ++i )
    ctx.state.set( in_lines[i], assignment[i] );

  execute_on_lines( prog, in_lines, out_lines, pool, ctx );

  std::vector<bool> result;
  result.reserve( out_lines.size() );
  for ( auto const& l : out_lines )
    result.push_back( ctx.state.phi( l ) );
  return result;
}

struct simulation_options
{
  latency_model latency{};
  noise_model noise{};
  std::uint32_t deplen = 5;
  engine_limits limits{};
  std::uint64_t stride = default_line_stride;
};

/*! \brief One-shot execution on a private cache state seeded from `noise.seed`. */
inline std::vector<bool> simulate( compiled_netlist const& prog, std::vector<bool> const& assignment,
                                   simulation_options const& opts = {}, gadget_tally* tally = nullptr )
{
  cache_state state;
  rng random( opts.noise.seed );
  gadget_context ctx{ .state = state,
                      .random = random,
                      .latency = opts.latency,
                      .noise = opts.noise,
                      .deplen = opts.deplen,
                      .limits = opts.limits };
  line_arena arena( 0, opts.stride );
  auto out = execute( prog, assignment, ctx, arena );
  if ( tally )
    *tally = ctx.tally;
  return out;
}

} // namespace cachesig::logic

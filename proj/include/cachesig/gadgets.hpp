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
  \file gadgets.hpp
  \brief Logic gates on cacheline presence

  Every gate reads its inputs destructively: afterwards each input line is
  present no matter what it held. Output lines must start absent.
*/

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cache_model.hpp"
#include "errors.hpp"
#include "random.hpp"
#include "speculation.hpp"
#include "timing.hpp"

namespace cachesig
{

enum class gate_kind
{
  not_gate,
  replicate,
  nand,
  nor,
  xor_gate,
  half_adder
};

inline constexpr std::array<std::uint32_t, 7> supported_nand_fan_in = { 2, 4, 8, 16, 32, 64, 128 };
inline constexpr std::uint32_t max_nand_fan_in = 128;

inline std::string_view to_string( gate_kind k )
{
  switch ( k )
  {
  case gate_kind::not_gate:
    return "NOT";
  case gate_kind::replicate:
    return "REPLICATE";
  case gate_kind::nand:
    return "NAND";
  case gate_kind::nor:
    return "NOR";
  case gate_kind::xor_gate:
    return "XOR";
  case gate_kind::half_adder:
    return "HALF_ADDER";
  }
  return "?";
}

struct gate_shape
{
  gate_kind kind = gate_kind::not_gate;
  std::uint32_t fan_in = 1;
  std::uint32_t fan_out = 1;

  bool valid() const noexcept
  {
    switch ( kind )
    {
    case gate_kind::not_gate:
      return fan_in == 1 && fan_out == 1;
    case gate_kind::replicate:
      return fan_in == 1 && fan_out >= 1;
    case gate_kind::nand:
      for ( auto f : supported_nand_fan_in )
        if ( f == fan_in )
          return fan_out == 1;
      return false;
    case gate_kind::nor:
    case gate_kind::xor_gate:
      return fan_in == 2 && fan_out == 1;
    case gate_kind::half_adder:
      return fan_in == 2 && fan_out == 2;
    }
    return false;
  }
};

struct gadget_tally
{
  std::uint64_t invocations = 0;
  std::uint64_t flips = 0;
};

/*! \brief Everything a gate needs besides its lines.

  Gates run strictly one after another on `state`. `tally` counts every
  primitive invocation and every noise flip.
*/
struct gadget_context
{
  cache_state& state;
  rng& random;
  latency_model latency{};
  noise_model noise{};
  std::uint32_t deplen = 5;
  engine_limits limits{};
  gadget_tally tally{};

  speculation_outcome run( gadget_spec const& spec )
  {
    auto outcome = run_primitive( spec, state, latency, noise, random, limits );
    ++tally.invocations;
    tally.flips += outcome.flipped ? 1u : 0u;
    return outcome;
  }
};

namespace detail
{

inline void require_absent( cache_state const& state, std::span<line_id const> outs, char const* gate )
{
  for ( auto const& o : outs )
    if ( state.phi( o ) )
      throw precondition_error( std::string( gate ) + ": output " + to_string( o ) + " must start absent" );
}

} // namespace detail

/*! \brief phi(b) = !phi(a). */
inline speculation_outcome invert( line_id const& a, line_id const& b, gadget_context& ctx )
{
  if ( a == b )
    throw aliasing_error( "invert: input and output are the same line" );
  detail::require_absent( ctx.state, std::span( &b, 1 ), "invert" );
  return ctx.run( { .guards = { { { a }, guard_combine::max_chain } }, .deplen = ctx.deplen, .outputs = { b } } );
}

/*! \brief Every output receives !phi(a); outputs are fetched in parallel. */
inline speculation_outcome replicate( line_id const& a, std::span<line_id const> outs, gadget_context& ctx )
{
  if ( outs.empty() )
    throw precondition_error( "replicate: at least one output is required" );
  if ( outs.size() > ctx.limits.max_accesslen )
    throw precondition_error( "replicate: fan-out " + std::to_string( outs.size() ) + " exceeds accesslen " +
                              std::to_string( ctx.limits.max_accesslen ) );
  detail::require_absent( ctx.state, outs, "replicate" );
  return ctx.run( { .guards = { { { a }, guard_combine::max_chain } },
                    .deplen = ctx.deplen,
                    .outputs = { outs.begin(), outs.end() },
                    .dependency = output_dependency::independent } );
}

/*! \brief phi(out) = !(phi(in_0) && ... && phi(in_k)), 2 <= k <= 128. */
inline speculation_outcome nand( std::span<line_id const> inputs, line_id const& out, gadget_context& ctx )
{
  if ( inputs.size() < 2 || inputs.size() > max_nand_fan_in )
    throw precondition_error( "nand: fan-in " + std::to_string( inputs.size() ) + " outside [2, 128]" );
  for ( std::size_t i = 0; i < inputs.size(); ++i )
    for ( std::size_t j = i + 1; j < inputs.size(); ++j )
      if ( inputs[i] == inputs[j] )
        throw aliasing_error( "nand: input " + to_string( inputs[i] ) + " listed twice" );
  detail::require_absent( ctx.state, std::span( &out, 1 ), "nand" );
  return ctx.run( { .guards = { { { inputs.begin(), inputs.end() }, guard_combine::max_chain } },
                    .deplen = ctx.deplen,
                    .outputs = { out } } );
}

inline speculation_outcome nand( std::initializer_list<line_id> inputs, line_id const& out, gadget_context& ctx )
{
  return nand( std::span<line_id const>( inputs.begin(), inputs.size() ), out, ctx );
}

/*! \brief phi(out) = !(phi(a) || phi(b)); two guards, either one squashes. */
inline speculation_outcome nor( line_id const& a, line_id const& b, line_id const& out, gadget_context& ctx )
{
  if ( a == b )
    throw aliasing_error( "nor: inputs must be distinct lines" );
  detail::require_absent( ctx.state, std::span( &out, 1 ), "nor" );
  return ctx.run( { .guards = { { { a }, guard_combine::max_chain }, { { b }, guard_combine::max_chain } },
                    .deplen = ctx.deplen,
                    .outputs = { out } } );
}

/*! \brief phi(out) = phi(a) != phi(b), using the native XOR primitive. */
inline speculation_outcome xor_gate( line_id const& a, line_id const& b, line_id const& out, gadget_context& ctx )
{
  auto outcome = xor_primitive( a, b, out, ctx.state, ctx.latency, ctx.noise, ctx.random, ctx.deplen, ctx.limits );
  ++ctx.tally.invocations;
  ctx.tally.flips += outcome.flipped ? 1u : 0u;
  return outcome;
}

inline constexpr std::size_t half_adder_scratch_lines = 11;

/*! \brief sum = a ^ b, carry = a & b, from replicators, NANDs and one inverter.

  The replicator inverts, so positive copies come from replicating a
  replicated line:

      ~a0 ~a1 = REP(a)      a0 a1 = REP(~a1)
      ~b0 ~b1 = REP(b)      b0 b1 = REP(~b1)
      x = NAND(a0, ~b0)     y = NAND(~a0, b0)     sum = NAND(x, y)
      z = NAND(a1, b1)      carry = NOT(z)

  Needs `half_adder_scratch_lines` absent scratch lines; all of them are
  left present.
*/
inline void half_adder( line_id const& a, line_id const& b, line_id const& sum, line_id const& carry,
                        std::span<line_id const> scratch, gadget_context& ctx )
{
  if ( scratch.size() < half_adder_scratch_lines )
    throw precondition_error( "half_adder: needs " + std::to_string( half_adder_scratch_lines ) +
                              " scratch lines, got " + std::to_string( scratch.size() ) );
  line_id const outs[] = { sum, carry };
  detail::require_absent( ctx.state, outs, "half_adder" );
  detail::require_absent( ctx.state, scratch.first( half_adder_scratch_lines ), "half_adder" );

  auto const& na0 = scratch[0];
  auto const& na1 = scratch[1];
  auto const& a0 = scratch[2];
  auto const& a1 = scratch[3];
  auto const& nb0 = scratch[4];
  auto const& nb1 = scratch[5];
  auto const& b0 = scratch[6];
  auto const& b1 = scratch[7];
  auto const& x = scratch[8];
  auto const& y = scratch[9];
  auto const& z = scratch[10];

  line_id const rep_a[] = { na0, na1 };
  line_id const rep_na[] = { a0, a1 };
  line_id const rep_b[] = { nb0, nb1 };
  line_id const rep_nb[] = { b0, b1 };
  replicate( a, rep_a, ctx );
  replicate( na1, rep_na, ctx );
  replicate( b, rep_b, ctx );
  replicate( nb1, rep_nb, ctx );
  nand( { a0, nb0 }, x, ctx );
  nand( { na0, b0 }, y, ctx );
  nand( { x, y }, sum, ctx );
  nand( { a1, b1 }, z, ctx );
  invert( z, carry, ctx );
}

} // namespace cachesig

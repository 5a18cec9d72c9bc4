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
  \file asm_emitter.hpp
  \brief GNU assembler (AT&T syntax) text for the speculation gadgets

  Register convention: first input in RSI, second in RDX, output in RDI,
  replicator outputs in R8..R15, scratch in RAX/RBX/RCX. Wider NAND inputs
  sit at multiples of the stride above RSI.

  Every gadget has the shape

          call    <redirect>
          <delay block, deplen times>
          <output loads, indexed by the delay result>
          lfence
      <redirect>:
          movq    $<landing>, (%rsp)
          <guard loads folded into the return address>
          ret
      <landing>:
          nop

  Labels are GNU numeric local labels `label_base + k`; one emission
  reserves `[label_base, label_base + 10)`.
*/

#pragma once

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cache_model.hpp"
#include "errors.hpp"

namespace cachesig
{

enum class emit_kind
{
  forced_spec,
  inverter,
  replicator,
  nand,
  nor,
  xor_gate,
  half_adder,
  amplifier
};

inline std::string_view to_string( emit_kind k )
{
  switch ( k )
  {
  case emit_kind::forced_spec:
    return "forced-spec";
  case emit_kind::inverter:
    return "inverter";
  case emit_kind::replicator:
    return "replicator";
  case emit_kind::nand:
    return "nand";
  case emit_kind::nor:
    return "nor";
  case emit_kind::xor_gate:
    return "xor";
  case emit_kind::half_adder:
    return "half-adder";
  case emit_kind::amplifier:
    return "amplifier";
  }
  return "?";
}

inline std::optional<emit_kind> emit_kind_from_string( std::string_view s )
{
  for ( auto k : { emit_kind::forced_spec, emit_kind::inverter, emit_kind::replicator, emit_kind::nand, emit_kind::nor,
                   emit_kind::xor_gate, emit_kind::half_adder, emit_kind::amplifier } )
    if ( to_string( k ) == s )
      return k;
  if ( s == "not" )
    return emit_kind::inverter;
  if ( s == "replicate" )
    return emit_kind::replicator;
  return std::nullopt;
}

inline constexpr std::uint32_t emit_label_span = 10;
inline constexpr std::uint32_t max_replicator_registers = 8;

/*! \brief Parameters of one emission. For the replicator, `accesslen` is the fan-out. */
struct emit_request
{
  emit_kind kind = emit_kind::forced_spec;
  std::uint32_t deplen = 5;
  std::uint32_t accesslen = 1;
  std::uint32_t fan_in = 1;
  std::uint64_t stride = default_line_stride;
  std::uint32_t label_base = 100;
};

namespace detail
{

class asm_writer
{
public:
  explicit asm_writer( std::uint32_t base ) : base_( base ) {}

  void op( std::string_view mnemonic, std::string_view operands = {} )
  {
    out_ << '\t' << mnemonic;
    if ( !operands.empty() )
      out_ << '\t' << operands;
    out_ << '\n';
  }
  void label( std::uint32_t k ) { out_ << base_ + k << ":\n"; }
  void comment( std::string_view text ) { out_ << "\t# " << text << '\n'; }
  std::string fwd( std::uint32_t k ) const { return std::to_string( base_ + k ) + "f"; }
  std::string text() const { return out_.str(); }

  void delay( std::uint32_t deplen )
  {
    if ( deplen == 0 )
      return;
    op( ".rept", std::to_string( deplen ) );
    op( "addq", "(%rsp), %rax" );
    op( "andq", "$0, %rax" );
    op( ".endr" );
  }

  void redirect( std::uint32_t self, std::uint32_t landing, std::vector<std::string> const& guards )
  {
    label( self );
    op( "movq", "$" + fwd( landing ) + ", (%rsp)" );
    for ( auto const& g : guards )
    {
      op( "movq", g + ", %rcx" );
      op( "andq", "$0, %rcx" );
      op( "addq", "%rcx, (%rsp)" );
    }
    op( "ret" );
    label( landing );
    op( "nop" );
  }

private:
  std::uint32_t base_;
  std::ostringstream out_;
};

inline void validate( emit_request const& req )
{
  if ( req.label_base == 0 )
    throw precondition_error( "emit: label_base must be positive" );
  if ( req.stride == 0 )
    throw precondition_error( "emit: stride must be positive" );
  if ( req.deplen > 4096 )
    throw precondition_error( "emit: deplen " + std::to_string( req.deplen ) + " is unreasonably large" );
  switch ( req.kind )
  {
  case emit_kind::forced_spec:
  case emit_kind::inverter:
  case emit_kind::nor:
    break;
  case emit_kind::replicator:
    if ( req.accesslen == 0 || req.accesslen > max_replicator_registers )
      throw precondition_error( "emit: replicator fan-out must be in [1, 8] (R8..R15)" );
    break;
  case emit_kind::nand:
    if ( req.fan_in < 2 || req.fan_in > 128 || ( req.fan_in & ( req.fan_in - 1 ) ) != 0 )
      throw precondition_error( "emit: NAND fan-in must be a power of two in [2, 128]" );
    break;
  case emit_kind::amplifier:
    if ( req.accesslen == 0 )
      throw precondition_error( "emit: amplifier accesslen must be positive" );
    break;
  case emit_kind::xor_gate:
  case emit_kind::half_adder:
    throw precondition_error( "emit: no assembler form for " + std::string( to_string( req.kind ) ) +
                              "; lower it to NAND/NOT/REPLICATE first" );
  }
}

inline std::string describe( emit_request const& req )
{
  std::ostringstream s;
  s << to_string( req.kind ) << ": deplen=" << req.deplen;
  if ( req.kind == emit_kind::nand )
    s << " fan_in=" << req.fan_in;
  if ( req.kind == emit_kind::replicator )
    s << " fan_out=" << req.accesslen;
  if ( req.kind == emit_kind::amplifier )
    s << " accesslen=" << req.accesslen << " stride=" << req.stride;
  s << " labels=[" << req.label_base << ", " << req.label_base + emit_label_span << ")";
  return s.str();
}

} // namespace detail

/*! \brief Assembler text for one gadget. Throws for XOR and HALF_ADDER. */
inline std::string emit( emit_request const& req )
{
  detail::validate( req );
  detail::asm_writer w( req.label_base );
  w.comment( detail::describe( req ) );

  auto const out_load = [&]( std::string_view reg ) { w.op( "movq", "(" + std::string( reg ) + ",%rax), %rbx" ); };

  std::vector<std::string> guards;
  switch ( req.kind )
  {
  case emit_kind::forced_spec:
    w.op( "call", w.fwd( 1 ) );
    w.delay( req.deplen );
    out_load( "%rdi" );
    w.op( "lfence" );
    w.redirect( 1, 2, {} );
    break;

  case emit_kind::inverter:
    w.op( "call", w.fwd( 1 ) );
    w.delay( req.deplen );
    out_load( "%rdi" );
    w.op( "lfence" );
    w.redirect( 1, 2, { "(%rsi)" } );
    break;

  case emit_kind::replicator:
    w.op( "call", w.fwd( 1 ) );
    w.delay( req.deplen );
    for ( std::uint32_t i = 0; i < req.accesslen; ++i )
      out_load( "%r" + std::to_string( 8 + i ) );
    w.op( "lfence" );
    w.redirect( 1, 2, { "(%rsi)" } );
    break;

  case emit_kind::nand:
    if ( req.fan_in == 2 )
      guards = { "(%rsi)", "(%rdx)" };
    else
      for ( std::uint32_t i = 0; i < req.fan_in; ++i )
        guards.push_back( i == 0 ? "(%rsi)" : std::to_string( std::uint64_t{ i } * req.stride ) + "(%rsi)" );
    w.op( "call", w.fwd( 1 ) );
    w.delay( req.deplen );
    out_load( "%rdi" );
    w.op( "lfence" );
    w.redirect( 1, 2, guards );
    break;

  case emit_kind::nor:
    /* the inner speculation, guarded by the second input, runs inside the outer one */
    w.op( "call", w.fwd( 1 ) );
    w.op( "call", w.fwd( 3 ) );
    w.delay( req.deplen );
    out_load( "%rdi" );
    w.op( "lfence" );
    w.redirect( 3, 4, { "(%rdx)" } );
    w.op( "lfence" );
    w.redirect( 1, 2, { "(%rsi)" } );
    break;

  case emit_kind::amplifier:
    w.op( "call", w.fwd( 1 ) );
    w.delay( req.deplen );
    w.op( ".rept", std::to_string( req.accesslen ) );
    out_load( "%rdi" );
    w.op( "addq", "$" + std::to_string( req.stride ) + ", %rdi" );
    w.op( ".endr" );
    w.op( "lfence" );
    w.redirect( 1, 2, { "(%rsi)" } );
    break;

  case emit_kind::xor_gate:
  case emit_kind::half_adder:
    break;
  }
  return w.text();
}

inline std::string symbol_name( emit_request const& req )
{
  std::string kind( to_string( req.kind ) );
  std::replace( kind.begin(), kind.end(), '-', '_' );
  return "cachesig_" + kind + "_" + std::to_string( req.label_base );
}

/*! \brief One assemblable file; each emission becomes a function symbol. */
inline std::string emit_module( std::vector<emit_request> const& requests )
{
  std::map<std::uint32_t, std::size_t> used; /* label_base -> request index */
  for ( std::size_t i = 0; i < requests.size(); ++i )
  {
    auto const base = requests[i].label_base;
    auto next = used.lower_bound( base );
    bool clash = next != used.end() && next->first < base + emit_label_span;
    if ( next != used.begin() && std::prev( next )->first + emit_label_span > base )
      clash = true;
    if ( clash )
      throw precondition_error( "emit_module: label range of request " + std::to_string( i ) + " (base " +
                                std::to_string( base ) + ") overlaps another request" );
    used.emplace( base, i );
  }

  std::ostringstream out;
  out << "# cache gadget module, AT&T syntax\n";
  out << "# registers: in1 %rsi, in2 %rdx, out %rdi, replicator outs %r8-%r15\n";
  out << "# entries: " << requests.size() << "\n";
  for ( auto const& r : requests )
    out << "#   " << symbol_name( r ) << " -- " << detail::describe( r ) << "\n";
  out << "\t.text\n";
  for ( auto const& r : requests )
  {
    auto const body = emit( r );
    auto const sym = symbol_name( r );
    out << "\n\t.globl\t" << sym << "\n";
    out << "\t.type\t" << sym << ", @function\n";
    out << sym << ":\n";
    out << body;
    out << "\tret\n";
    out << "\t.size\t" << sym << ", .-" << sym << "\n";
  }
  out << "\t.section\t.note.GNU-stack,\"\",@progbits\n";
  return out.str();
}

/* ----------------------------------------------------- structural checks */

/*! \brief What the checker found in one emission or module. */
struct asm_structure
{
  std::size_t calls = 0;
  std::size_t lfences = 0;
  std::size_t matched_redirects = 0;
  std::vector<std::uint64_t> delay_blocks; /* repetition count of each delay block */
  std::size_t delay_ops = 0;
  std::size_t output_loads = 0;
  std::vector<std::uint64_t> stride_immediates;
  std::vector<std::string> problems;

  bool ok() const noexcept { return problems.empty(); }
};

namespace detail
{

inline std::vector<std::string> asm_lines( std::string_view text )
{
  std::vector<std::string> lines;
  std::istringstream in{ std::string( text ) };
  std::string line;
  while ( std::getline( in, line ) )
  {
    if ( auto const hash = line.find( '#' ); hash != std::string::npos )
      line.erase( hash );
    auto const first = line.find_first_not_of( " \t" );
    if ( first == std::string::npos )
      continue;
    line.erase( 0, first );
    line.erase( line.find_last_not_of( " \t" ) + 1 );
    std::replace( line.begin(), line.end(), '\t', ' ' );
    lines.push_back( line );
  }
  return lines;
}

inline bool starts_with( std::string_view s, std::string_view p ) { return s.substr( 0, p.size() ) == p; }

} // namespace detail

/*! \brief Expands `.rept` blocks and checks the gadget grammar.

  Checks: one `lfence` per `call`; every `call Nf` lands on a label `N:`
  that stores `$Mf` into the return slot and ends in `ret`, followed by
  label `M:`. Counts delay blocks, output loads (`movq (...,%rax), %rbx`)
  and pointer-advance immediates (`addq $K, %rdi`).
*/
inline asm_structure inspect_asm( std::string_view text )
{
  asm_structure st;
  auto const raw = detail::asm_lines( text );

  /* expand .rept */
  std::vector<std::string> lines;
  for ( std::size_t i = 0; i < raw.size(); ++i )
  {
    if ( !detail::starts_with( raw[i], ".rept" ) )
    {
      lines.push_back( raw[i] );
      continue;
    }
    auto const count = std::stoull( raw[i].substr( 5 ) );
    std::size_t j = i + 1;
    while ( j < raw.size() && raw[j] != ".endr" )
      ++j;
    if ( j == raw.size() )
    {
      st.problems.push_back( ".rept without .endr" );
      break;
    }
    bool const is_delay = j == i + 3 && raw[i + 1] == "addq (%rsp), %rax" && raw[i + 2] == "andq $0, %rax";
    if ( is_delay )
      st.delay_blocks.push_back( count );
    for ( std::uint64_t c = 0; c < count; ++c )
      lines.insert( lines.end(), raw.begin() + static_cast<std::ptrdiff_t>( i + 1 ),
                    raw.begin() + static_cast<std::ptrdiff_t>( j ) );
    i = j;
  }

  std::map<std::string, std::size_t> labels;
  for ( std::size_t i = 0; i < lines.size(); ++i )
    if ( lines[i].back() == ':' )
      labels[lines[i].substr( 0, lines[i].size() - 1 )] = i;

  for ( std::size_t i = 0; i < lines.size(); ++i )
  {
    auto const& l = lines[i];
    if ( l == "lfence" )
      ++st.lfences;
    else if ( l == "addq (%rsp), %rax" )
      ++st.delay_ops;
    else if ( detail::starts_with( l, "movq (" ) && l.find( ",%rax), %rbx" ) != std::string::npos )
      ++st.output_loads;
    else if ( detail::starts_with( l, "addq $" ) && l.ends_with( ", %rdi" ) )
      st.stride_immediates.push_back( std::stoull( l.substr( 6 ) ) );
    else if ( detail::starts_with( l, "call " ) )
    {
      ++st.calls;
      auto target = l.substr( 5 );
      if ( target.empty() || target.back() != 'f' )
      {
        st.problems.push_back( "call target '" + target + "' is not a forward local label" );
        continue;
      }
      target.pop_back();
      auto const it = labels.find( target );
      if ( it == labels.end() || it->second < i )
      {
        st.problems.push_back( "call " + target + "f has no redirect block after it" );
        continue;
      }
      auto k = it->second + 1;
      if ( k >= lines.size() || !detail::starts_with( lines[k], "movq $" ) || !lines[k].ends_with( "f, (%rsp)" ) )
      {
        st.problems.push_back( "redirect " + target + " does not overwrite the return address" );
        continue;
      }
      auto const landing = lines[k].substr( 6, lines[k].size() - 6 - std::string_view( "f, (%rsp)" ).size() );
      while ( k < lines.size() && lines[k] != "ret" && lines[k].back() != ':' )
        ++k;
      if ( k >= lines.size() || lines[k] != "ret" )
      {
        st.problems.push_back( "redirect " + target + " does not end in ret" );
        continue;
      }
      if ( k + 1 >= lines.size() || lines[k + 1] != landing + ":" )
      {
        st.problems.push_back( "redirect " + target + " is not followed by its landing label " + landing );
        continue;
      }
      ++st.matched_redirects;
    }
  }
  if ( st.lfences != st.calls )
    st.problems.push_back( std::to_string( st.lfences ) + " lfence(s) for " + std::to_string( st.calls ) +
                           " speculation region(s)" );
  return st;
}

/*! \brief Problems of `text` as an emission of `req`; empty when it conforms. */
inline std::vector<std::string> check_emission( emit_request const& req, std::string_view text )
{
  auto st = inspect_asm( text );
  auto problems = st.problems;
  auto const want_regions = req.kind == emit_kind::nor ? 2u : 1u;
  if ( st.calls != want_regions || st.matched_redirects != want_regions )
    problems.push_back( "expected " + std::to_string( want_regions ) + " call/redirect pair(s)" );
  if ( st.delay_ops != req.deplen )
    problems.push_back( "delay count " + std::to_string( st.delay_ops ) + " != deplen " + std::to_string( req.deplen ) );
  for ( auto c : st.delay_blocks )
    if ( c != req.deplen )
      problems.push_back( "delay block repeats " + std::to_string( c ) + " times" );
  std::size_t want_loads = 1;
  if ( req.kind == emit_kind::replicator || req.kind == emit_kind::amplifier )
    want_loads = req.accesslen;
  if ( st.output_loads != want_loads )
    problems.push_back( "output loads " + std::to_string( st.output_loads ) + " != " + std::to_string( want_loads ) );
  if ( req.kind == emit_kind::amplifier )
  {
    if ( st.stride_immediates.size() != req.accesslen )
      problems.push_back( "expected one pointer advance per output load" );
    for ( auto s : st.stride_immediates )
      if ( s != req.stride )
        problems.push_back( "stride immediate " + std::to_string( s ) + " != " + std::to_string( req.stride ) );
  }
  return problems;
}

/*! \brief The canonical parameter sets with committed golden files. */
inline std::vector<std::pair<std::string, emit_request>> canonical_emissions()
{
  return {
      { "forced_spec", { .kind = emit_kind::forced_spec, .deplen = 5, .label_base = 100 } },
      { "inverter_d5", { .kind = emit_kind::inverter, .deplen = 5, .label_base = 100 } },
      { "replicator_f3", { .kind = emit_kind::replicator, .deplen = 5, .accesslen = 3, .label_base = 100 } },
      { "nand_f2", { .kind = emit_kind::nand, .deplen = 5, .fan_in = 2, .label_base = 100 } },
      { "nor", { .kind = emit_kind::nor, .deplen = 5, .fan_in = 2, .label_base = 100 } },
      { "amplifier_d5_a23_s4160",
        { .kind = emit_kind::amplifier, .deplen = 5, .accesslen = 23, .stride = 4160, .label_base = 100 } },
  };
}

} // namespace cachesig

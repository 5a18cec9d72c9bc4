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
  \file cache_model.hpp
  \brief Cacheline presence state and the address layout rules

  The whole hierarchy is collapsed to one presence bit per line: `phi(L)`
  is true iff the line would hit at some level. Lines are laid out at a
  stride of at least 4096 + 64 bytes so no two consecutive lines share a
  page (prefetchers) or an L1 index (bits 11:6).
*/

#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace cachesig
{

inline constexpr std::uint64_t cacheline_bytes = 64u;
inline constexpr std::uint64_t page_bytes = 4096u;
inline constexpr std::uint64_t min_line_stride = page_bytes + cacheline_bytes;
inline constexpr std::uint64_t default_line_stride = min_line_stride;

/*! \brief A cacheline, identified by its virtual address.

  `index` is the line number (`virtual_address / 64`) and is what a
  `cache_state` keys on.
*/
struct line_id
{
  std::uint64_t index{};
  std::uint64_t virtual_address{};

  static constexpr line_id from_address( std::uint64_t address ) noexcept
  {
    return line_id{ address / cacheline_bytes, address };
  }

  /* L1 set index, address bits 11:6 */
  constexpr std::uint32_t l1_index() const noexcept
  {
    return static_cast<std::uint32_t>( ( virtual_address >> 6 ) & 0x3f );
  }

  friend constexpr bool operator==( line_id const&, line_id const& ) = default;
  friend constexpr auto operator<=>( line_id const&, line_id const& ) = default;
};

inline std::string to_string( line_id const& line )
{
  return "line@" + std::to_string( line.virtual_address );
}

struct layout_config
{
  std::uint64_t stride = default_line_stride;
  std::uint64_t count = 1;
  std::uint64_t base = 0;
};

/*! \brief Lays out `cfg.count` lines at `base + i * stride`.

  Rejects a zero count, a stride below 4160 bytes, unaligned base/stride,
  and any layout in which some L1 index is used more than
  `ceil(count / 64)` times.
*/
inline std::vector<line_id> allocate_lines( layout_config const& cfg )
{
  if ( cfg.count == 0 )
    throw layout_error( "allocate_lines: count must be at least 1" );
  if ( cfg.stride < min_line_stride )
    throw layout_error( "allocate_lines: stride " + std::to_string( cfg.stride ) + " is below the minimum of " +
                        std::to_string( min_line_stride ) + " bytes" );
  if ( cfg.stride % cacheline_bytes != 0 || cfg.base % cacheline_bytes != 0 )
    throw layout_error( "allocate_lines: base and stride must be multiples of 64 bytes" );
  if ( cfg.count - 1 > ( std::numeric_limits<std::uint64_t>::max() - cfg.base ) / cfg.stride )
    throw layout_error( "allocate_lines: layout overflows the address space" );

  std::vector<line_id> lines;
  lines.reserve( cfg.count );
  std::uint64_t histogram[64] = {};
  auto const limit = ( cfg.count + 63u ) / 64u;
  for ( std::uint64_t i = 0; i < cfg.count; ++i )
  {
    auto const line = line_id::from_address( cfg.base + i * cfg.stride );
    if ( ++histogram[line.l1_index()] > limit )
      throw layout_error( "allocate_lines: stride " + std::to_string( cfg.stride ) +
                          " concentrates lines on too few L1 indexes" );
    lines.push_back( line );
  }
  return lines;
}

/*! \brief Hands out consecutive, non-overlapping line arrays at one stride. */
class line_arena
{
public:
  explicit line_arena( std::uint64_t base = 0, std::uint64_t stride = default_line_stride )
      : next_( base ), stride_( stride ) {}

  std::vector<line_id> allocate( std::uint64_t count )
  {
    auto lines = allocate_lines( { .stride = stride_, .count = count, .base = next_ } );
    next_ = lines.back().virtual_address + stride_;
    return lines;
  }

  line_id allocate_one() { return allocate( 1 ).front(); }

  std::uint64_t stride() const noexcept { return stride_; }

private:
  std::uint64_t next_;
  std::uint64_t stride_;
};

/*! \brief Presence bits for a registered set of lines.

  Every `touch`/`flush` bumps `generation()`, including idempotent ones.
  With a non-zero capacity, touching a line that brings the present count
  above capacity evicts the least recently touched other line.
*/
class cache_state
{
public:
  explicit cache_state( std::size_t capacity = 0 ) : capacity_( capacity ) {}

  void register_line( line_id const& line )
  {
    auto const [it, inserted] = slots_.try_emplace( line.index, static_cast<std::uint32_t>( lines_.size() ) );
    if ( !inserted )
      throw aliasing_error( "cache_state: " + to_string( line ) + " registered twice" );
    lines_.push_back( line );
    present_.push_back( 0 );
    stamp_.push_back( 0 );
  }

  void register_lines( std::span<line_id const> lines )
  {
    slots_.reserve( slots_.size() + lines.size() );
    for ( auto const& l : lines )
      register_line( l );
  }

  bool contains( line_id const& line ) const { return slots_.find( line.index ) != slots_.end(); }

  bool phi( line_id const& line ) const { return present_[slot( line )] != 0; }

  void touch( line_id const& line )
  {
    auto const s = slot( line );
    ++generation_;
    if ( capacity_ != 0 )
      lru_.erase( { stamp_[s], s } );
    stamp_[s] = generation_;
    if ( !present_[s] )
    {
      present_[s] = 1;
      ++present_count_;
    }
    if ( capacity_ != 0 )
    {
      lru_.insert( { stamp_[s], s } );
      while ( present_count_ > capacity_ )
      {
        auto const victim = lru_.begin()->second;
        lru_.erase( lru_.begin() );
        present_[victim] = 0;
        --present_count_;
        ++evictions_;
      }
    }
  }

  void flush( line_id const& line )
  {
    auto const s = slot( line );
    ++generation_;
    if ( present_[s] )
    {
      if ( capacity_ != 0 )
        lru_.erase( { stamp_[s], s } );
      present_[s] = 0;
      --present_count_;
    }
  }

  /* flush or touch so that phi(line) == value */
  void set( line_id const& line, bool value )
  {
    if ( value )
      touch( line );
    else
      flush( line );
  }

  std::uint64_t generation() const noexcept { return generation_; }
  std::size_t size() const noexcept { return lines_.size(); }
  std::size_t present_count() const noexcept { return present_count_; }
  std::size_t capacity() const noexcept { return capacity_; }
  std::uint64_t evictions() const noexcept { return evictions_; }

  std::vector<line_id> present_lines() const
  {
    std::vector<line_id> out;
    for ( std::size_t i = 0; i < lines_.size(); ++i )
      if ( present_[i] )
        out.push_back( lines_[i] );
    std::sort( out.begin(), out.end() );
    return out;
  }

  /* same registered lines with the same presence bits */
  bool same_presence( cache_state const& other ) const
  {
    if ( size() != other.size() )
      return false;
    for ( std::size_t i = 0; i < lines_.size(); ++i )
    {
      if ( !other.contains( lines_[i] ) || other.phi( lines_[i] ) != ( present_[i] != 0 ) )
        return false;
    }
    return true;
  }

private:
  std::uint32_t slot( line_id const& line ) const
  {
    auto const it = slots_.find( line.index );
    if ( it == slots_.end() )
      throw unknown_line_error( "cache_state: " + to_string( line ) + " is not registered" );
    return it->second;
  }

  std::size_t capacity_;
  std::unordered_map<std::uint64_t, std::uint32_t> slots_;
  std::vector<line_id> lines_;
  std::vector<std::uint8_t> present_;
  std::vector<std::uint64_t> stamp_;
  std::set<std::pair<std::uint64_t, std::uint32_t>> lru_;
  std::size_t present_count_ = 0;
  std::uint64_t generation_ = 0;
  std::uint64_t evictions_ = 0;
};

} // namespace cachesig

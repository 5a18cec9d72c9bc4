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
  \file parallel.hpp
  \brief Trial-indexed work distribution with ordered results
*/

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cachesig::harness
{

inline unsigned resolve_threads( std::uint32_t requested )
{
  if ( requested != 0 )
    return requested;
  return std::max( 1u, std::thread::hardware_concurrency() );
}

/*! \brief Calls `fn(i)` for i in [0, count) on up to `threads` workers.

  `fn` must only depend on `i`; results land at index `i`, so the output
  does not depend on the thread count. The first exception is rethrown.
*/
template<typename Fn>
auto parallel_map( std::uint64_t count, std::uint32_t threads, Fn&& fn )
{
  using result_t = decltype( fn( std::uint64_t{} ) );
  std::vector<result_t> out( count );
  auto const workers = static_cast<std::uint64_t>( std::min<std::uint64_t>( resolve_threads( threads ), count ) );
  if ( workers <= 1 )
  {
    for ( std::uint64_t i = 0; i < count; ++i )
      out[i] = fn( i );
    return out;
  }

  std::atomic<std::uint64_t> next{ 0 };
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for ( std::uint64_t i = next++; i < count; i = next++ )
    {
      try
      {
        out[i] = fn( i );
      }
      catch ( ... )
      {
        std::lock_guard lock( failure_mutex );
        if ( !failure )
          failure = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for ( std::uint64_t w = 0; w < workers; ++w )
    pool.emplace_back( work );
  for ( auto& t : pool )
    t.join();
  if ( failure )
    std::rethrow_exception( failure );
  return out;
}

} // namespace cachesig::harness

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

/*
  Counts how many of twelve cachelines are cached, reading only
  ceil(log2(13)) = 4 timings, and compares against the true count.
*/

#include <cachesig/cachesig.hpp>

#include <cstdint>
#include <iostream>

int main()
{
  using namespace cachesig;

  constexpr std::uint32_t n = 12;
  cache_state state;
  rng random( 2026 );
  line_arena arena;
  gadget_context ctx{ .state = state, .random = random };

  auto const prog = make_counter_program( n );
  auto st = make_counter_state( prog, arena, state );

  std::uint64_t expected = 0;
  for ( std::uint32_t i = 0; i < n; ++i )
    if ( random.next() & 1u )
    {
      state.touch( st.inputs[i] );
      ++expected;
    }

  timer_model timer;
  auto const counted = count_lines( st, prog, timer, ctx );
  std::cout << "present lines: " << expected << "\n"
            << "counted:       " << counted << "\n"
            << "measurements:  " << timer.measurements() << "\n";
  return counted == expected ? 0 : 1;
}

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RTAP_PARALLEL_HPP
#define RTAP_PARALLEL_HPP

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rtap {

inline std::atomic<unsigned>& thread_count_storage() {
  static std::atomic<unsigned> count{0};  // 0 = use hardware_concurrency
  return count;
}

inline void set_thread_count(unsigned n) { thread_count_storage().store(n); }

inline unsigned thread_count() {
  unsigned n = thread_count_storage().load();
  if (n == 0) n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

// Runs f(i) for i in [0, n). Work items must be independent and write only
// to their own slots; results are then identical to a serial loop.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
  const unsigned workers = static_cast<unsigned>(
      std::min<std::size_t>(thread_count(), n == 0 ? 1 : n));
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(workers - 1);
  for (unsigned t = 1; t < workers; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace rtap

#endif  // RTAP_PARALLEL_HPP

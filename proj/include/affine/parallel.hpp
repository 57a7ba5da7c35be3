#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace affine
{
//---------------------------------------------------------------------------//
/*!
 * Run body(i) for i in [0, n) on up to `threads` workers.
 *
 * Work is split into contiguous blocks; the first exception thrown by any
 * worker is rethrown after all workers have joined.
 */
template<class F>
void parallel_for(std::size_t n, unsigned threads, F&& body)
{
    threads = std::max(1u, threads);
    if (threads == 1 || n < 2)
    {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::size_t workers = std::min<std::size_t>(threads, n);
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
    {
        std::size_t begin = n * w / workers;
        std::size_t end = n * (w + 1) / workers;
        pool.emplace_back([&, begin, end] {
            try
            {
                for (std::size_t i = begin; i < end; ++i)
                    body(i);
            }
            catch (...)
            {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        });
    }
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

}  // namespace affine

// SPDX-License-Identifier: Apache-2.0
//
// Benchmark of the OpenMP kernels against their serial references:
// matmul family plus one Newton-Schulz polar sweep. Prints a table and
// writes kernel_bench.csv.

#include <skit/fractional.hpp>
#include <skit/io.hpp>
#include <skit/kernels.hpp>

#include <chrono>
#include <functional>
#include <iostream>

using namespace skit;

namespace {

double time_median(const std::function<void()>& f, int reps = 5) {
    f();  // warmup
    std::vector<double> t;
    for (int i = 0; i < reps; ++i) {
        auto t0 = std::chrono::steady_clock::now();
        f();
        t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    std::sort(t.begin(), t.end());
    return t[t.size() / 2];
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::size_t> sizes = {128, 256, 512};
    if (argc > 1) {
        sizes.clear();
        for (int i = 1; i < argc; ++i) sizes.push_back(static_cast<std::size_t>(std::stoul(argv[i])));
    }

    CsvWriter csv("kernel_bench.csv", {"kernel", "size", "serial_s", "parallel_s", "speedup"});
    std::cout << "threads: " << worker_threads() << "\n";
    std::printf("%-12s %6s %12s %12s %8s\n", "kernel", "size", "serial(s)", "parallel(s)", "speedup");

    for (std::size_t n : sizes) {
        RngState rng(42 + n);
        DenseMatrix a = gaussian_matrix(n, n, rng);
        DenseMatrix b = gaussian_matrix(n, n, rng);

        struct Row {
            const char* name;
            std::function<void()> serial, parallel;
        };
        std::vector<Row> rows = {
            {"matmul", [&] { matmul_serial(a, b); }, [&] { matmul(a, b); }},
            {"matmul_tn", [&] { matmul_tn_serial(a, b); }, [&] { matmul_tn(a, b); }},
            {"matmul_nt", [&] { matmul_nt_serial(a, b); }, [&] { matmul_nt(a, b); }},
            {"ns_polar5",
             [&] {
                 const int saved = worker_threads();
                 set_worker_threads(1);
                 polar_newton_schulz(a, 5, AlphaVariant::schatten4);
                 set_worker_threads(saved);
             },
             [&] { polar_newton_schulz(a, 5, AlphaVariant::schatten4); }},
        };
        for (auto& r : rows) {
            const double ts = time_median(r.serial);
            const double tp = time_median(r.parallel);
            std::printf("%-12s %6zu %12.5f %12.5f %8.2f\n", r.name, n, ts, tp, ts / tp);
            csv.row({r.name, std::to_string(n), format_double(ts), format_double(tp),
                     format_double(ts / tp)});
        }
    }
    std::cout << "wrote kernel_bench.csv\n";
    return 0;
}

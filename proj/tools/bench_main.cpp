// Times the OpenMP kernels against their serial reference implementations and
// reports the agreement between the two paths.
#include <chrono>
#include <cstdio>
#include <functional>

#include "ocets/eval.hpp"
#include "ocets/influence.hpp"
#include "ocets/targetdist.hpp"
#include "ocets/train.hpp"

using namespace ocets;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

void report(const char* name, double serial_ms, double parallel_ms, double agreement) {
    std::printf("%-26s %10.2f ms %10.2f ms %8.2fx   %.3e\n", name, serial_ms, parallel_ms,
                serial_ms / parallel_ms, agreement);
}

}  // namespace

int main() {
    std::printf("threads: %d\n", max_threads());
    std::printf("%-26s %13s %13s %9s   %s\n", "kernel", "serial", "parallel", "speedup",
                "max |delta|");

    // target encoding over a batch of scalars, written into flat storage so
    // the timing covers the kernel rather than container churn
    {
        const BinScheme bins = make_bins(100, 0.0, 1.0);
        TargetDistSpec spec;
        spec.sigma = 0.01;
        Rng rng(1);
        Vec targets(20000);
        for (auto& v : targets) v = rng.uniform(0.0, 1.0);
        Vec flat_s(targets.size() * bins.k), flat_p(flat_s.size());

        const double serial_ms = time_ms(
            [&] {
                for (std::size_t i = 0; i < targets.size(); ++i)
                    encode_into(targets[i], bins, spec, flat_s.data() + i * bins.k);
            },
            5);
        const double parallel_ms = time_ms(
            [&] {
                parallel_index(targets.size(), Exec::parallel, [&](std::size_t i) {
                    encode_into(targets[i], bins, spec, flat_p.data() + i * bins.k);
                });
            },
            5);
        double delta = 0.0;
        for (std::size_t i = 0; i < flat_s.size(); ++i)
            delta = std::max(delta, std::abs(flat_s[i] - flat_p[i]));
        report("tpt encode (20k targets)", serial_ms, parallel_ms, delta);
    }

    // batch gradient
    {
        const std::size_t w = 96, h = 24, m = 2, k = 50, n = 128;
        Rng rng(2);
        const ModelParams params = init_params(w, h, m, k, 25, rng);
        const BinScheme bins = make_bins(k, 0.0, 1.0);
        TargetDistSpec spec;
        spec.sigma = 0.01;
        std::vector<TrainSample> samples(n);
        for (auto& s : samples) {
            s.x_norm = Matrix(w, m);
            s.y_norm = Matrix(h, m);
            for (auto& v : s.x_norm.storage()) v = rng.uniform(0.0, 1.0);
            for (auto& v : s.y_norm.storage()) v = rng.uniform(0.0, 1.0);
        }

        Vec grad_ref, grad_par;
        const double serial_ms = time_ms(
            [&] {
                grad_ref =
                    backward_batch_reference(params, samples, bins, spec, LossKind::oce);
            },
            3);
        const double parallel_ms = time_ms(
            [&] {
                grad_par =
                    backward_batch(params, samples, bins, spec, LossKind::oce, Exec::parallel);
            },
            3);
        double delta = 0.0;
        for (std::size_t i = 0; i < grad_ref.size(); ++i)
            delta = std::max(delta, std::abs(grad_ref[i] - grad_par[i]));
        report("backward (128x96x24x50)", serial_ms, parallel_ms, delta);
    }

    // forecast + metrics over windows
    {
        SynthSpec synth;
        synth.rows = 1200;
        synth.channels = 2;
        const SeriesTable table = make_synthetic(synth);
        const auto windows = make_windows(table, 96, 24, 1);
        Rng rng(3);
        const ModelParams params = init_params(96, 24, 2, 50, 25, rng);
        const BinScheme bins = make_bins(50, 0.0, 1.0);
        PrepConfig prep;

        double mse_ref = 0.0, mse_par = 0.0;
        const double serial_ms = time_ms(
            [&] {
                mse_ref = evaluate_model_reference(params, windows, prep, bins, false)
                              .summary.mse_per_element;
            },
            10);
        const double parallel_ms = time_ms(
            [&] {
                mse_par = evaluate_model(params, windows, prep, bins, Exec::parallel, false)
                              .summary.mse_per_element;
            },
            10);
        report("evaluate (1k windows)", serial_ms, parallel_ms, std::abs(mse_ref - mse_par));
    }

    // influence sweep
    {
        SweepResult ser, par;
        const double serial_ms =
            time_ms([&] { ser = run_ratio_bound_sweep(2000, 9, Exec::serial); }, 3);
        const double parallel_ms =
            time_ms([&] { par = run_ratio_bound_sweep(2000, 9, Exec::parallel); }, 3);
        double delta = 0.0;
        for (std::size_t i = 0; i < ser.rows.size(); ++i)
            if (!ser.rows[i].skipped)
                delta = std::max(delta,
                                 std::abs(ser.rows[i].report.ratio - par.rows[i].report.ratio));
        report("influence sweep (2k)", serial_ms, parallel_ms, delta);
    }
    return 0;
}

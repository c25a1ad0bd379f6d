// Kernel benchmark: OpenMP-parallel kernels vs the serial reference.
// Reports best-of-N wall times and the elementwise agreement of results.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "hqrl/nn.hpp"
#include "hqrl/pqc.hpp"
#include "hqrl/qsim.hpp"
#include "hqrl/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace hqrl;

namespace {

double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

template <class F>
double best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_ms();
        fn();
        best = std::min(best, now_ms() - t0);
    }
    return best;
}

void report(const std::string& name, double serial_ms, double parallel_ms, double max_diff) {
    std::printf("%-28s %10.3f ms %10.3f ms %8.2fx   max|diff| %.3g\n", name.c_str(), serial_ms,
                parallel_ms, serial_ms / parallel_ms, max_diff);
}

template <class T>
Tensor<T> random_tensor(const std::vector<int>& shape, Rng& rng) {
    Tensor<T> t(shape);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (T& v : t.v) v = static_cast<T>(dist(rng));
    return t;
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads %d\n\n", omp_get_max_threads());
#else
    std::printf("OpenMP disabled; parallel kernels run their serial schedule\n\n");
#endif
    std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

    Rng rng = make_rng(1);

    {
        auto layer = nn::make_conv<float>({4, 32, 8, 4});
        nn::init_conv(layer, rng);
        Tensor<float> in = random_tensor<float>({84, 84, 4}, rng);
        Tensor<float> outs, outp;
        const double ts = best_of(5, [&] { outs = nn::serial::conv2d_forward(layer, in); });
        const double tp = best_of(5, [&] { outp = nn::conv2d_forward(layer, in); });
        double diff = 0.0;
        for (std::size_t k = 0; k < outs.v.size(); ++k)
            diff = std::max(diff, std::abs(static_cast<double>(outs.v[k]) - outp.v[k]));
        report("conv 84x84x4 -> 32@8x8s4", ts, tp, diff);
    }
    {
        auto layer = nn::make_conv<float>({32, 64, 4, 2});
        nn::init_conv(layer, rng);
        Tensor<float> in = random_tensor<float>({20, 20, 32}, rng);
        nn::ConvCache<float> cs, cp;
        nn::serial::conv2d_forward(layer, in, &cs);
        nn::conv2d_forward(layer, in, &cp);
        Tensor<float> up = random_tensor<float>({9, 9, 64}, rng);
        nn::ConvGrads<float> gs, gp;
        const double ts = best_of(5, [&] { gs = nn::serial::conv2d_backward(layer, cs, up); });
        const double tp = best_of(5, [&] { gp = nn::conv2d_backward(layer, cp, up); });
        double diff = 0.0;
        for (std::size_t k = 0; k < gs.d_w.v.size(); ++k)
            diff = std::max(diff, std::abs(static_cast<double>(gs.d_w.v[k]) - gp.d_w.v[k]));
        report("conv backward 20x20x32", ts, tp, diff);
    }
    {
        auto layer = nn::make_dense<float>({3136, 512, nn::Activation::ReLU});
        nn::init_dense(layer, rng);
        Tensor<float> x = random_tensor<float>({3136}, rng);
        Tensor<float> ys, yp;
        const double ts = best_of(20, [&] { ys = nn::serial::dense_forward(layer, x); });
        const double tp = best_of(20, [&] { yp = nn::dense_forward(layer, x); });
        double diff = 0.0;
        for (std::size_t k = 0; k < ys.v.size(); ++k)
            diff = std::max(diff, std::abs(static_cast<double>(ys.v[k]) - yp.v[k]));
        report("dense 3136 -> 512", ts, tp, diff);
    }
    {
        qsim::StateVector ser = qsim::init_state(12);
        qsim::StateVector par = qsim::init_state(12);
        std::uniform_real_distribution<double> angle(-3.14, 3.14);
        std::vector<qsim::GateOp> ops;
        std::uniform_int_distribution<int> qubit(0, 11);
        for (int g = 0; g < 200; ++g) ops.push_back(qsim::GateOp::ry(qubit(rng), angle(rng)));
        const double ts = best_of(5, [&] {
            for (const auto& op : ops) qsim::serial::apply_gate(ser, op);
        });
        const double tp = best_of(5, [&] {
            for (const auto& op : ops) qsim::apply_gate(par, op);
        });
        double diff = 0.0;
        for (std::size_t k = 0; k < ser.amps.size(); ++k)
            diff = std::max(diff, std::abs(ser.amps[k] - par.amps[k]));
        report("200 RY gates, 12 qubits", ts, tp, diff);
    }
    {
        Rng seed = make_rng(2);
        qsim::StateVector st = qsim::init_state(12);
        std::uniform_real_distribution<double> angle(-3.14, 3.14);
        for (int q = 0; q < 12; ++q) qsim::apply_gate(st, qsim::GateOp::ry(q, angle(seed)));
        double es = 0.0, ep = 0.0;
        const double ts = best_of(50, [&] { es = qsim::serial::expectation_z(st, 5); });
        const double tp = best_of(50, [&] { ep = qsim::expectation_z(st, 5); });
        report("<Z> reduction, 12 qubits", ts, tp, std::abs(es - ep));
    }

    {
        pqc::PqcArchitecture arch{4, 4};
        Rng prng = make_rng(3);
        pqc::PqcParameters params = pqc::init_params(arch, prng);
        std::vector<double> x(arch.n_encoding(), 0.3);
        pqc::PqcGradient g;
        const double tshift = best_of(3, [&] { g = pqc::pqc_grad_shift(arch, params, x); });
        const double tadj = best_of(3, [&] { g = pqc::pqc_grad_adjoint(arch, params, x); });
        std::printf("\npqc n=4 l=4 gradients: shift %.3f ms, adjoint %.3f ms (%.1fx)\n", tshift,
                    tadj, tshift / tadj);
    }
    return 0;
}

// Times the OpenMP kernels against their serial reference twins and
// the per-pair gradient computation across thread counts. Every
// parallel result must match the serial one bit for bit; a mismatch
// makes the run fail, so this doubles as a determinism check.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "corpusgen/nlg_model.hpp"
#include "corpusgen/nlg_train.hpp"
#include "corpusgen/rng.hpp"
#include "corpusgen/tensor.hpp"

using namespace corpusgen;

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(
             clock::now().time_since_epoch())
      .count();
}

template <typename F> double best_of(F f, int reps) {
  double best = 0.0;
  for (int r = 0; r < reps; ++r) {
    double t0 = now_ms();
    f();
    double t1 = now_ms();
    if (r == 0 || t1 - t0 < best) best = t1 - t0;
  }
  return best;
}

Mat random_mat(SplitRng &rng, int rows, int cols) {
  Mat m(rows, cols);
  for (double &x : m.a) x = rng.uniform(-1.0, 1.0);
  return m;
}

Vec random_vec(SplitRng &rng, int n) {
  Vec v(static_cast<std::size_t>(n));
  for (double &x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

bool bench_matvec(SplitRng &rng, int size, int iters) {
  Mat m = random_mat(rng, size, size);
  Vec v = random_vec(rng, size);
  Vec out_serial, out_parallel;
  double ts = best_of(
      [&] {
        for (int i = 0; i < iters; ++i) out_serial = serial::matvec(m, v);
      },
      3);
  double tp = best_of(
      [&] {
        for (int i = 0; i < iters; ++i) out_parallel = matvec(m, v);
      },
      3);
  bool same = out_serial == out_parallel;
  std::printf("matvec      %5dx%-5d %4d iters  serial %8.3f ms  parallel %8.3f ms  speedup %5.2fx  %s\n",
              size, size, iters, ts, tp, ts / tp, same ? "identical" : "MISMATCH");

  Vec t_serial, t_parallel;
  ts = best_of(
      [&] {
        for (int i = 0; i < iters; ++i) t_serial = serial::matvec_t(m, v);
      },
      3);
  tp = best_of(
      [&] {
        for (int i = 0; i < iters; ++i) t_parallel = matvec_t(m, v);
      },
      3);
  bool same_t = t_serial == t_parallel;
  std::printf("matvec_t    %5dx%-5d %4d iters  serial %8.3f ms  parallel %8.3f ms  speedup %5.2fx  %s\n",
              size, size, iters, ts, tp, ts / tp, same_t ? "identical" : "MISMATCH");

  Vec u = random_vec(rng, size);
  Mat acc_serial = m, acc_parallel = m;
  ts = best_of(
      [&] {
        for (int i = 0; i < iters; ++i)
          serial::add_outer(acc_serial, u, v, 0.001);
      },
      1);
  tp = best_of(
      [&] {
        for (int i = 0; i < iters; ++i) add_outer(acc_parallel, u, v, 0.001);
      },
      1);
  bool same_o = acc_serial.a == acc_parallel.a;
  std::printf("add_outer   %5dx%-5d %4d iters  serial %8.3f ms  parallel %8.3f ms  speedup %5.2fx  %s\n",
              size, size, iters, ts, tp, ts / tp, same_o ? "identical" : "MISMATCH");
  return same && same_t && same_o;
}

bool bench_gradients() {
  // Synthetic corpus: 64 pairs of short random token sequences.
  SplitRng rng(99);
  std::vector<std::string> words;
  for (int i = 0; i < 40; ++i) words.push_back("w" + std::to_string(i));
  std::vector<TrainingPair> pairs;
  for (int p = 0; p < 64; ++p) {
    std::vector<std::string> in, out;
    for (int k = 0; k < 5; ++k)
      in.push_back(words[rng.next_below(words.size())]);
    for (int k = 0; k < 7; ++k)
      out.push_back(words[rng.next_below(words.size())]);
    pairs.emplace_back(in, out);
  }
  std::vector<std::vector<std::string>> ins, outs;
  for (const auto &p : pairs) {
    ins.push_back(p.first);
    outs.push_back(p.second);
  }
  Hyper hyper{16, 32, 32};
  NlgModel model = init_model(Vocab::build(ins), Vocab::build(outs), hyper,
                              LogitsFrom::context, 7);
  std::vector<EncodedPair> encoded = encode_pairs(model, pairs);

  Vec reference;
  bool all_same = true;
#ifdef _OPENMP
  int hw = omp_get_max_threads();
  std::vector<int> thread_counts = {1, 2, 4, hw};
  std::sort(thread_counts.begin(), thread_counts.end());
  thread_counts.erase(std::unique(thread_counts.begin(), thread_counts.end()),
                      thread_counts.end());
#else
  std::vector<int> thread_counts = {1};
#endif
  for (int threads : thread_counts) {
#ifdef _OPENMP
    omp_set_num_threads(threads);
#endif
    ModelTensors grads = zero_like(model.p);
    double t = best_of([&] {
      grads = zero_like(model.p);
      corpus_gradients(model, encoded, grads);
    },
                       3);
    Vec flat = flatten(grads);
    if (reference.empty())
      reference = flat;
    else if (flat != reference)
      all_same = false;
    std::printf("corpus_gradients  64 pairs  H=32  threads %2d  %8.3f ms  %s\n",
                threads, t,
                flat == reference ? "identical" : "MISMATCH");
  }
  return all_same;
}

} // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads %d\n\n", omp_get_max_threads());
#else
  std::printf("OpenMP disabled, serial build\n\n");
#endif
  SplitRng rng(42);
  bool ok = true;
  ok &= bench_matvec(rng, 64, 200);
  ok &= bench_matvec(rng, 256, 40);
  ok &= bench_matvec(rng, 1024, 4);
  std::printf("\n");
  ok &= bench_gradients();
  if (!ok) {
    std::printf("\nFAIL: parallel kernels diverged from the serial reference\n");
    return 1;
  }
  std::printf("\nall parallel results identical to the serial reference\n");
  return 0;
}

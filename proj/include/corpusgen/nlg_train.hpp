#ifndef CORPUSGEN_NLG_TRAIN_HPP
#define CORPUSGEN_NLG_TRAIN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "corpusgen/nlg_model.hpp"
#include "corpusgen/seed_corpus.hpp"

namespace corpusgen {

// Teacher-forced cross-entropy training of NlgModel with hand-derived
// backprop and plain gradient descent under global-norm clipping.
// Per-pair gradients may be computed in parallel; the reduction always
// runs in pair order, so results are bit-identical for a fixed seed
// regardless of thread count.

struct TrainHyper {
  double learning_rate = 0.1;
  int epochs = 300;
  int batch_size = 16;
  std::uint64_t rng_seed = 1;
  double clip_norm = 5.0;
};

struct TrainResult {
  NlgModel model;
  std::vector<double> loss_trace; // mean per-token loss per epoch
};

// Id form of one training pair. target_ids end with EOS; the decoder
// is fed BOS followed by target_ids[0..n-2].
struct EncodedPair {
  std::vector<int> input_ids;
  std::vector<int> target_ids;
};

std::vector<EncodedPair> encode_pairs(const NlgModel &m,
                                      const std::vector<TrainingPair> &pairs);

// Mean per-token cross-entropy over all pairs.
double corpus_loss(const NlgModel &m, const std::vector<EncodedPair> &pairs);

// Teacher-forced argmax accuracy over all target positions.
double token_accuracy(const NlgModel &m,
                      const std::vector<EncodedPair> &pairs);

// Accumulates the gradient of the mean per-token loss into `grads`
// (which must be zero_like-shaped) and returns that loss.
double corpus_gradients(const NlgModel &m,
                        const std::vector<EncodedPair> &pairs,
                        ModelTensors &grads);

double global_norm(const ModelTensors &t);
void clip_gradients(ModelTensors &grads, double clip_norm);
void sgd_update(ModelTensors &params, const ModelTensors &grads, double lr);

TrainResult train(const NlgModel &m, const std::vector<TrainingPair> &pairs,
                  const TrainHyper &hyper);

// Max relative error between analytic and central-difference gradients
// of the full training loss at the model's current parameters.
double training_grad_check(const NlgModel &m,
                           const std::vector<TrainingPair> &pairs,
                           double epsilon);

// Two-column text: epoch index and mean loss.
void save_loss_trace(const std::vector<double> &trace,
                     const std::string &path);

} // namespace corpusgen

#endif

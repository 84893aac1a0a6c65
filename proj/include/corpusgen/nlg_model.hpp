#ifndef CORPUSGEN_NLG_MODEL_HPP
#define CORPUSGEN_NLG_MODEL_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "corpusgen/tensor.hpp"
#include "corpusgen/vocab.hpp"

namespace corpusgen {

// Sequence-to-sequence generator: learned embeddings, a bidirectional
// LSTM encoder over the linearized meaning representation, and an
// attention decoder producing sentence tokens.
//
// The decoder is a single forward LSTM. Its recurrence is sometimes
// written with the same name as the bidirectional encoder cell, but a
// bidirectional decoder cannot run autoregressively, so one direction
// is what executes here.
//
// Output logits come from the attention context of the fresh decoder
// state by default (logits = out_proj * context(s_k)); the
// conventional variant that projects state-and-context is available
// via LogitsFrom::state_context.
//
// MODEL FILE: binary, little-endian.
//   bytes 0..7   magic "CGMODEL\0"
//   u32          format version (1)
//   u32          flags (bit 0: logits from state+context)
//   u32 x 5      E, H, H_dec, |vocab_in|, |vocab_out|
//   u32          tensor count
//   per tensor   u32 rows, u32 cols (cols 0 marks a vector)
//   per tensor   rows*max(cols,1) doubles, row-major
//   vocab_in     u32 count, then per token u32 byte length + bytes
//   vocab_out    same layout
// Tensors appear in parameter_refs order. A file ending early is a
// corrupt-file error; dims disagreeing with the header is a
// shape-mismatch error.

struct Hyper {
  int embed_dim = 16;
  int hidden_dim = 32;
  int dec_hidden_dim = 32;
};

enum class LogitsFrom { context, state_context };

struct LstmParams {
  // recurrent (H x H), input (H x I), bias (H); one set per gate:
  // input gate, forget gate, output gate, cell candidate
  Mat w_h_i, w_h_f, w_h_o, w_h_g;
  Mat w_x_i, w_x_f, w_x_o, w_x_g;
  Vec b_i, b_f, b_o, b_g;

  LstmParams() = default;
  LstmParams(int hidden, int input);

  int hidden_dim() const { return w_h_i.rows; }
  int input_dim() const { return w_x_i.cols; }
};

struct LstmState {
  Vec h, c;

  static LstmState zero(int hidden) {
    return {Vec(static_cast<std::size_t>(hidden), 0.0),
            Vec(static_cast<std::size_t>(hidden), 0.0)};
  }
};

// Every trainable tensor; gradients reuse this shape.
struct ModelTensors {
  Mat embed_in;  // |vocab_in| x E
  Mat embed_out; // |vocab_out| x E
  LstmParams enc_fwd, enc_bwd; // hidden H, input E
  LstmParams dec;              // hidden H_dec, input E + 2H
  Mat attn;     // H_dec x 2H
  Mat out_proj; // |vocab_out| x 2H, or |vocab_out| x (H_dec + 2H)
};

struct NlgModel {
  Vocab vocab_in, vocab_out;
  Hyper hyper;
  LogitsFrom logits_from = LogitsFrom::context;
  ModelTensors p;

  int logits_input_dim() const {
    int two_h = 2 * hyper.hidden_dim;
    return logits_from == LogitsFrom::context ? two_h
                                              : hyper.dec_hidden_dim + two_h;
  }
  void validate() const; // throws on any shape inconsistency
};

// Fresh model with all parameters uniform in [-0.08, 0.08] drawn from
// the seed in parameter_refs order.
NlgModel init_model(const Vocab &vocab_in, const Vocab &vocab_out,
                    const Hyper &hyper, LogitsFrom logits_from,
                    std::uint64_t rng_seed);

// Zero tensors shaped like m's (gradient accumulators).
ModelTensors zero_like(const ModelTensors &m);

// One trainable tensor: exactly one of mat/vec is set.
struct TensorRef {
  Mat *mat = nullptr;
  Vec *vec = nullptr;
  const char *name = "";
};

// Fixed, documented traversal order used by the optimizer, the
// serializer, and the flattened view. Order: embed_in, embed_out,
// enc_fwd, enc_bwd, dec (each w_h_i,f,o,g then w_x_i,f,o,g then
// b_i,f,o,g), attn, out_proj.
std::vector<TensorRef> parameter_refs(ModelTensors &t);
std::size_t parameter_count(const ModelTensors &t);
Vec flatten(const ModelTensors &t);
void unflatten(ModelTensors &t, const Vec &flat);

LstmState lstm_step(const LstmParams &p, const LstmState &prev, const Vec &x);

// Bidirectional encoding of input ids: element e concatenates the
// backward-direction hidden state with the forward-direction one at
// position e; both passes start from zero states. Output dim is 2H.
std::vector<Vec> encode(const NlgModel &m, const std::vector<int> &input_ids);

struct Attention {
  Vec weights; // one per encoder position, sums to 1
  Vec context; // dim 2H
};

// score_e = s . (attn * enc_e), softmaxed into weights, context is the
// weight-averaged encoder sequence.
Attention attend(const Mat &attn, const Vec &s, const std::vector<Vec> &enc);

struct DecodeOut {
  Vec dist; // softmax over vocab_out
  LstmState state;
};

// One decoder step: cell input is embed_out(prev_token) + attention
// context of prev_state, the distribution comes from the attention
// context of the new state (plus the state itself in state_context
// mode).
DecodeOut decode_step(const NlgModel &m, int prev_token,
                      const LstmState &prev_state,
                      const std::vector<Vec> &enc);

void save_model(const NlgModel &m, std::ostream &out);
void save_model_file(const NlgModel &m, const std::string &path);
NlgModel load_model(std::istream &in);
NlgModel load_model_file(const std::string &path);

} // namespace corpusgen

#endif

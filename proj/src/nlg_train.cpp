#include "corpusgen/nlg_train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "corpusgen/errors.hpp"
#include "corpusgen/rng.hpp"

namespace corpusgen {

namespace {

// Everything lstm_step computes that the backward pass reads back.
struct StepCache {
  Vec x, h_prev, c_prev;
  Vec i, f, o, g; // post-activation gate values
  Vec c, tanh_c;
};

LstmState lstm_step_cached(const LstmParams &p, const LstmState &prev,
                           const Vec &x, StepCache &cc) {
  cc.x = x;
  cc.h_prev = prev.h;
  cc.c_prev = prev.c;
  cc.i = sigmoid(add(add(matvec(p.w_h_i, prev.h), matvec(p.w_x_i, x)), p.b_i));
  cc.f = sigmoid(add(add(matvec(p.w_h_f, prev.h), matvec(p.w_x_f, x)), p.b_f));
  cc.o = sigmoid(add(add(matvec(p.w_h_o, prev.h), matvec(p.w_x_o, x)), p.b_o));
  cc.g =
      tanh_elem(add(add(matvec(p.w_h_g, prev.h), matvec(p.w_x_g, x)), p.b_g));
  LstmState next;
  next.c = add(hadamard(cc.f, prev.c), hadamard(cc.i, cc.g));
  cc.c = next.c;
  cc.tanh_c = tanh_elem(next.c);
  next.h = hadamard(cc.o, cc.tanh_c);
  return next;
}

// Backprop through one cell step. dh/dc are gradients at this step's
// outputs; dh_prev/dc_prev receive (overwrite) the previous step's,
// dx receives the input's, and g accumulates parameter gradients.
void lstm_step_backward(const LstmParams &p, const StepCache &cc,
                        const Vec &dh, const Vec &dc, LstmParams &g,
                        Vec &dh_prev, Vec &dc_prev, Vec &dx) {
  const std::size_t H = dh.size();
  Vec do_pre(H), di_pre(H), df_pre(H), dg_pre(H);
  dc_prev.assign(cc.c_prev.size(), 0.0);
  for (std::size_t j = 0; j < H; ++j) {
    const double dout = dh[j] * cc.tanh_c[j];
    do_pre[j] = dout * cc.o[j] * (1.0 - cc.o[j]);
    const double dc_total =
        dc[j] + dh[j] * cc.o[j] * (1.0 - cc.tanh_c[j] * cc.tanh_c[j]);
    di_pre[j] = dc_total * cc.g[j] * cc.i[j] * (1.0 - cc.i[j]);
    df_pre[j] = dc_total * cc.c_prev[j] * cc.f[j] * (1.0 - cc.f[j]);
    dg_pre[j] = dc_total * cc.i[j] * (1.0 - cc.g[j] * cc.g[j]);
    dc_prev[j] = dc_total * cc.f[j];
  }

  dh_prev.assign(cc.h_prev.size(), 0.0);
  dx.assign(cc.x.size(), 0.0);
  struct GateSlot {
    const Vec *dpre;
    const Mat *wh;
    const Mat *wx;
    Mat *gwh;
    Mat *gwx;
    Vec *gb;
  };
  GateSlot slots[4] = {
      {&di_pre, &p.w_h_i, &p.w_x_i, &g.w_h_i, &g.w_x_i, &g.b_i},
      {&df_pre, &p.w_h_f, &p.w_x_f, &g.w_h_f, &g.w_x_f, &g.b_f},
      {&do_pre, &p.w_h_o, &p.w_x_o, &g.w_h_o, &g.w_x_o, &g.b_o},
      {&dg_pre, &p.w_h_g, &p.w_x_g, &g.w_h_g, &g.w_x_g, &g.b_g},
  };
  for (const auto &s : slots) {
    Vec h_contrib = matvec_t(*s.wh, *s.dpre);
    Vec x_contrib = matvec_t(*s.wx, *s.dpre);
    for (std::size_t j = 0; j < dh_prev.size(); ++j)
      dh_prev[j] += h_contrib[j];
    for (std::size_t j = 0; j < dx.size(); ++j)
      dx[j] += x_contrib[j];
    add_outer(*s.gwh, *s.dpre, cc.h_prev);
    add_outer(*s.gwx, *s.dpre, cc.x);
    for (std::size_t j = 0; j < s.gb->size(); ++j)
      (*s.gb)[j] += (*s.dpre)[j];
  }
}

// Backprop through attend(): dctx is the gradient at the context
// output. Adds into dh, dattn and denc.
void attention_backward(const Mat &attn, const Vec &h,
                        const std::vector<Vec> &enc, const Vec &weights,
                        const Vec &dctx, Mat &dattn, Vec &dh,
                        std::vector<Vec> &denc) {
  const std::size_t M = enc.size();
  Vec u = matvec_t(attn, h);
  Vec dalpha(M);
  double avg = 0.0;
  for (std::size_t e = 0; e < M; ++e) {
    dalpha[e] = dot(dctx, enc[e]);
    avg += weights[e] * dalpha[e];
  }
  for (std::size_t e = 0; e < M; ++e) {
    axpy(denc[e], weights[e], dctx);
    const double dscore = weights[e] * (dalpha[e] - avg);
    if (dscore == 0.0)
      continue;
    Vec proj = matvec(attn, enc[e]);
    axpy(dh, dscore, proj);
    add_outer(dattn, h, enc[e], dscore);
    axpy(denc[e], dscore, u);
  }
}

struct PairWork {
  double loss_sum = 0.0; // summed token CE, unweighted
  std::size_t tokens = 0;
};

// Forward + backward for one pair. Gradient contributions are scaled
// by `weight` (1 / total token count of the batch) so the accumulated
// result is the gradient of the mean per-token loss.
PairWork pair_backward(const NlgModel &m, const EncodedPair &pair,
                       double weight, ModelTensors &g) {
  const int H = m.hyper.hidden_dim;
  const int Hd = m.hyper.dec_hidden_dim;
  const int E = m.hyper.embed_dim;
  const std::size_t M = pair.input_ids.size();
  const std::size_t N = pair.target_ids.size();
  if (M == 0 || N == 0)
    throw ValidationError("training pair with empty side");

  // ---- encoder forward
  std::vector<Vec> embedded(M);
  for (std::size_t e = 0; e < M; ++e) {
    const int id = pair.input_ids[e];
    const double *r = m.p.embed_in.row(id);
    embedded[e] = Vec(r, r + E);
  }
  std::vector<StepCache> fwd_cache(M), bwd_cache(M);
  std::vector<Vec> enc(M);
  {
    LstmState s = LstmState::zero(H);
    std::vector<Vec> fwd_h(M);
    for (std::size_t e = 0; e < M; ++e) {
      s = lstm_step_cached(m.p.enc_fwd, s, embedded[e], fwd_cache[e]);
      fwd_h[e] = s.h;
    }
    s = LstmState::zero(H);
    std::vector<Vec> bwd_h(M);
    for (std::size_t t = 0; t < M; ++t) { // time order of the bwd pass
      const std::size_t e = M - 1 - t;
      s = lstm_step_cached(m.p.enc_bwd, s, embedded[e], bwd_cache[t]);
      bwd_h[e] = s.h;
    }
    for (std::size_t e = 0; e < M; ++e)
      enc[e] = concat(bwd_h[e], fwd_h[e]);
  }

  // ---- decoder forward with caches
  std::vector<LstmState> states(N + 1);
  states[0] = LstmState::zero(Hd);
  std::vector<Attention> att(N + 1); // att[k] belongs to states[k]
  att[0] = attend(m.p.attn, states[0].h, enc);
  std::vector<StepCache> dec_cache(N);
  std::vector<Vec> probs(N), logit_in(N);
  std::vector<int> dec_in(N);
  PairWork work;
  work.tokens = N;
  for (std::size_t k = 0; k < N; ++k) {
    dec_in[k] = k == 0 ? Vocab::bos_id : pair.target_ids[k - 1];
    const double *r = m.p.embed_out.row(dec_in[k]);
    Vec x = concat(Vec(r, r + E), att[k].context);
    states[k + 1] = lstm_step_cached(m.p.dec, states[k], x, dec_cache[k]);
    att[k + 1] = attend(m.p.attn, states[k + 1].h, enc);
    logit_in[k] = m.logits_from == LogitsFrom::context
                      ? att[k + 1].context
                      : concat(states[k + 1].h, att[k + 1].context);
    probs[k] = softmax(matvec(m.p.out_proj, logit_in[k]));
    const double p = probs[k][static_cast<std::size_t>(pair.target_ids[k])];
    work.loss_sum += -std::log(std::max(p, 1e-300));
  }

  // ---- backward
  std::vector<Vec> denc(M, Vec(static_cast<std::size_t>(2 * H), 0.0));
  std::vector<Vec> dctx(N + 1, Vec(static_cast<std::size_t>(2 * H), 0.0));
  Vec dh(static_cast<std::size_t>(Hd), 0.0);
  Vec dc(static_cast<std::size_t>(Hd), 0.0);
  for (std::size_t k = N; k-- > 0;) {
    // cross-entropy at step k (1-based k+1)
    Vec dlogits = probs[k];
    dlogits[static_cast<std::size_t>(pair.target_ids[k])] -= 1.0;
    scale_inplace(dlogits, weight);
    add_outer(g.out_proj, dlogits, logit_in[k]);
    Vec dli = matvec_t(m.p.out_proj, dlogits);
    if (m.logits_from == LogitsFrom::context) {
      for (std::size_t j = 0; j < dctx[k + 1].size(); ++j)
        dctx[k + 1][j] += dli[j];
    } else {
      for (int j = 0; j < Hd; ++j)
        dh[static_cast<std::size_t>(j)] += dli[static_cast<std::size_t>(j)];
      for (std::size_t j = 0; j < dctx[k + 1].size(); ++j)
        dctx[k + 1][j] += dli[static_cast<std::size_t>(Hd) + j];
    }
    // attention that produced context(s_{k+1})
    attention_backward(m.p.attn, states[k + 1].h, enc, att[k + 1].weights,
                       dctx[k + 1], g.attn, dh, denc);
    // decoder cell step k+1
    Vec dh_prev, dc_prev, dx;
    lstm_step_backward(m.p.dec, dec_cache[k], dh, dc, g.dec, dh_prev, dc_prev,
                       dx);
    dh = std::move(dh_prev);
    dc = std::move(dc_prev);
    // split dx into the embedding part and the input-context part
    double *emb_row = g.embed_out.row(dec_in[k]);
    for (int j = 0; j < E; ++j)
      emb_row[j] += dx[static_cast<std::size_t>(j)];
    for (std::size_t j = 0; j < dctx[k].size(); ++j)
      dctx[k][j] += dx[static_cast<std::size_t>(E) + j];
  }
  // attention at the zero state feeds step 1's input context; the
  // state itself is constant, so its gradient is dropped.
  Vec dh0(static_cast<std::size_t>(Hd), 0.0);
  attention_backward(m.p.attn, states[0].h, enc, att[0].weights, dctx[0],
                     g.attn, dh0, denc);

  // ---- encoder backward
  std::vector<Vec> dx_fwd(M), dx_bwd(M);
  {
    Vec eh(static_cast<std::size_t>(H), 0.0);
    Vec ec(static_cast<std::size_t>(H), 0.0);
    for (std::size_t e = M; e-- > 0;) {
      for (int j = 0; j < H; ++j)
        eh[static_cast<std::size_t>(j)] +=
            denc[e][static_cast<std::size_t>(H + j)]; // fwd half is second
      Vec ph, pc, dx;
      lstm_step_backward(m.p.enc_fwd, fwd_cache[e], eh, ec, g.enc_fwd, ph, pc,
                         dx);
      eh = std::move(ph);
      ec = std::move(pc);
      dx_fwd[e] = std::move(dx);
    }
    eh.assign(static_cast<std::size_t>(H), 0.0);
    ec.assign(static_cast<std::size_t>(H), 0.0);
    for (std::size_t t = M; t-- > 0;) { // reverse of the bwd pass's time
      const std::size_t e = M - 1 - t;  // position it looked at
      for (int j = 0; j < H; ++j)
        eh[static_cast<std::size_t>(j)] +=
            denc[e][static_cast<std::size_t>(j)]; // bwd half is first
      Vec ph, pc, dx;
      lstm_step_backward(m.p.enc_bwd, bwd_cache[t], eh, ec, g.enc_bwd, ph, pc,
                         dx);
      eh = std::move(ph);
      ec = std::move(pc);
      dx_bwd[e] = std::move(dx);
    }
  }
  for (std::size_t e = 0; e < M; ++e) {
    double *row = g.embed_in.row(pair.input_ids[e]);
    for (int j = 0; j < E; ++j)
      row[j] += dx_fwd[e][static_cast<std::size_t>(j)] +
                dx_bwd[e][static_cast<std::size_t>(j)];
  }
  return work;
}

void add_tensors(ModelTensors &acc, const ModelTensors &inc) {
  auto a = parameter_refs(acc);
  auto b = parameter_refs(const_cast<ModelTensors &>(inc));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].mat) {
      for (std::size_t j = 0; j < a[i].mat->a.size(); ++j)
        a[i].mat->a[j] += b[i].mat->a[j];
    } else {
      for (std::size_t j = 0; j < a[i].vec->size(); ++j)
        (*a[i].vec)[j] += (*b[i].vec)[j];
    }
  }
}

std::size_t total_target_tokens(const std::vector<EncodedPair> &pairs) {
  std::size_t n = 0;
  for (const auto &p : pairs)
    n += p.target_ids.size();
  return n;
}

struct ForwardOnly {
  double loss_sum = 0.0;
  std::size_t tokens = 0;
  std::size_t correct = 0;
};

ForwardOnly pair_forward(const NlgModel &m, const EncodedPair &pair) {
  auto enc = encode(m, pair.input_ids);
  LstmState state = LstmState::zero(m.hyper.dec_hidden_dim);
  ForwardOnly out;
  int prev = Vocab::bos_id;
  for (std::size_t k = 0; k < pair.target_ids.size(); ++k) {
    DecodeOut step = decode_step(m, prev, state, enc);
    const int y = pair.target_ids[k];
    const double p = step.dist[static_cast<std::size_t>(y)];
    out.loss_sum += -std::log(std::max(p, 1e-300));
    ++out.tokens;
    std::size_t best = 0;
    for (std::size_t j = 1; j < step.dist.size(); ++j)
      if (step.dist[j] > step.dist[best])
        best = j;
    if (static_cast<int>(best) == y)
      ++out.correct;
    state = step.state;
    prev = y; // teacher forcing
  }
  return out;
}

} // namespace

std::vector<EncodedPair> encode_pairs(const NlgModel &m,
                                      const std::vector<TrainingPair> &pairs) {
  std::vector<EncodedPair> out;
  out.reserve(pairs.size());
  for (const auto &[in_tokens, out_tokens] : pairs) {
    EncodedPair p;
    p.input_ids = m.vocab_in.encode(in_tokens);
    p.target_ids = m.vocab_out.encode(out_tokens);
    p.target_ids.push_back(Vocab::eos_id);
    if (p.input_ids.empty())
      throw ValidationError("training pair with empty input");
    out.push_back(std::move(p));
  }
  return out;
}

double corpus_loss(const NlgModel &m, const std::vector<EncodedPair> &pairs) {
  if (pairs.empty())
    throw ValidationError("no training pairs");
  double loss = 0.0;
  std::size_t tokens = 0;
  for (const auto &p : pairs) {
    ForwardOnly f = pair_forward(m, p);
    loss += f.loss_sum;
    tokens += f.tokens;
  }
  return loss / static_cast<double>(tokens);
}

double token_accuracy(const NlgModel &m,
                      const std::vector<EncodedPair> &pairs) {
  if (pairs.empty())
    throw ValidationError("no training pairs");
  std::size_t tokens = 0, correct = 0;
  for (const auto &p : pairs) {
    ForwardOnly f = pair_forward(m, p);
    tokens += f.tokens;
    correct += f.correct;
  }
  return static_cast<double>(correct) / static_cast<double>(tokens);
}

double corpus_gradients(const NlgModel &m,
                        const std::vector<EncodedPair> &pairs,
                        ModelTensors &grads) {
  if (pairs.empty())
    throw ValidationError("no training pairs");
  const double weight =
      1.0 / static_cast<double>(total_target_tokens(pairs));
  double loss_sum = 0.0;

  // Per-pair gradients land in their own slot, then are reduced in
  // pair order: the sum is identical no matter how many threads ran.
  const std::size_t chunk = 16;
  std::vector<ModelTensors> slot(std::min(chunk, pairs.size()));
  std::vector<double> slot_loss(slot.size());
  for (auto &s : slot)
    s = zero_like(m.p);
  for (std::size_t base = 0; base < pairs.size(); base += chunk) {
    const std::size_t n = std::min(chunk, pairs.size() - base);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
      PairWork w = pair_backward(m, pairs[base + i], weight, slot[i]);
      slot_loss[i] = w.loss_sum;
    }
    for (std::size_t i = 0; i < n; ++i) {
      add_tensors(grads, slot[i]);
      loss_sum += slot_loss[i];
      if (base + chunk < pairs.size()) {
        // reset for reuse
        ModelTensors &s = slot[i];
        for (auto &ref : parameter_refs(s)) {
          if (ref.mat)
            std::fill(ref.mat->a.begin(), ref.mat->a.end(), 0.0);
          else
            std::fill(ref.vec->begin(), ref.vec->end(), 0.0);
        }
      }
    }
  }
  return loss_sum * weight;
}

double global_norm(const ModelTensors &t) {
  double sum = 0.0;
  for (auto &ref : parameter_refs(const_cast<ModelTensors &>(t))) {
    if (ref.mat) {
      for (double x : ref.mat->a)
        sum += x * x;
    } else {
      for (double x : *ref.vec)
        sum += x * x;
    }
  }
  return std::sqrt(sum);
}

void clip_gradients(ModelTensors &grads, double clip_norm) {
  if (clip_norm <= 0.0)
    throw ValidationError("clip_norm must be positive");
  const double norm = global_norm(grads);
  if (norm <= clip_norm || norm == 0.0)
    return;
  const double scale = clip_norm / norm;
  for (auto &ref : parameter_refs(grads)) {
    if (ref.mat) {
      for (double &x : ref.mat->a)
        x *= scale;
    } else {
      for (double &x : *ref.vec)
        x *= scale;
    }
  }
}

void sgd_update(ModelTensors &params, const ModelTensors &grads, double lr) {
  auto p = parameter_refs(params);
  auto g = parameter_refs(const_cast<ModelTensors &>(grads));
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].mat) {
      for (std::size_t j = 0; j < p[i].mat->a.size(); ++j)
        p[i].mat->a[j] -= lr * g[i].mat->a[j];
    } else {
      for (std::size_t j = 0; j < p[i].vec->size(); ++j)
        (*p[i].vec)[j] -= lr * (*g[i].vec)[j];
    }
  }
}

TrainResult train(const NlgModel &m, const std::vector<TrainingPair> &pairs,
                  const TrainHyper &hyper) {
  if (pairs.empty())
    throw ValidationError("no training pairs");
  if (hyper.batch_size < 1)
    throw ValidationError("batch_size must be at least 1");
  TrainResult result;
  result.model = m;
  if (hyper.epochs <= 0)
    return result;

  auto encoded = encode_pairs(m, pairs);
  SplitRng root(hyper.rng_seed);
  std::vector<std::size_t> order(encoded.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = i;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    SplitRng shuffler =
        root.split("shuffle", static_cast<std::uint64_t>(epoch));
    shuffler.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t epoch_tokens = 0;
    for (std::size_t base = 0; base < order.size();
         base += static_cast<std::size_t>(hyper.batch_size)) {
      std::vector<EncodedPair> batch;
      for (std::size_t i = base;
           i < std::min(order.size(),
                        base + static_cast<std::size_t>(hyper.batch_size));
           ++i)
        batch.push_back(encoded[order[i]]);
      ModelTensors grads = zero_like(result.model.p);
      const double mean_loss =
          corpus_gradients(result.model, batch, grads);
      if (!std::isfinite(mean_loss))
        throw TrainingDiverged("non-finite loss at epoch " +
                               std::to_string(epoch));
      const std::size_t batch_tokens = total_target_tokens(batch);
      epoch_loss += mean_loss * static_cast<double>(batch_tokens);
      epoch_tokens += batch_tokens;
      clip_gradients(grads, hyper.clip_norm);
      sgd_update(result.model.p, grads, hyper.learning_rate);
    }
    const double mean = epoch_loss / static_cast<double>(epoch_tokens);
    if (!std::isfinite(mean))
      throw TrainingDiverged("non-finite epoch loss at epoch " +
                             std::to_string(epoch));
    result.loss_trace.push_back(mean);
  }
  return result;
}

double training_grad_check(const NlgModel &m,
                           const std::vector<TrainingPair> &pairs,
                           double epsilon) {
  auto encoded = encode_pairs(m, pairs);
  ModelTensors grads = zero_like(m.p);
  corpus_gradients(m, encoded, grads);
  Vec analytic = flatten(grads);
  Vec point = flatten(m.p);
  NlgModel probe = m; // reused by the closure to evaluate loss
  auto f = [&probe, &encoded](const Vec &theta) {
    unflatten(probe.p, theta);
    return corpus_loss(probe, encoded);
  };
  return grad_check(f, analytic, point, epsilon);
}

void save_loss_trace(const std::vector<double> &trace,
                     const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write loss trace: " + path);
  out.precision(17);
  for (std::size_t i = 0; i < trace.size(); ++i)
    out << i << '\t' << trace[i] << '\n';
  if (!out)
    throw IoError("write failed: " + path);
}

} // namespace corpusgen

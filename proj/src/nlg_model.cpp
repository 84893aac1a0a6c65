#include "corpusgen/nlg_model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "corpusgen/errors.hpp"
#include "corpusgen/rng.hpp"

namespace corpusgen {

LstmParams::LstmParams(int hidden, int input)
    : w_h_i(hidden, hidden), w_h_f(hidden, hidden), w_h_o(hidden, hidden),
      w_h_g(hidden, hidden), w_x_i(hidden, input), w_x_f(hidden, input),
      w_x_o(hidden, input), w_x_g(hidden, input),
      b_i(static_cast<std::size_t>(hidden), 0.0),
      b_f(static_cast<std::size_t>(hidden), 0.0),
      b_o(static_cast<std::size_t>(hidden), 0.0),
      b_g(static_cast<std::size_t>(hidden), 0.0) {}

namespace {

void check_lstm(const LstmParams &p, int hidden, int input,
                const char *where) {
  auto bad = [&](const char *what) {
    throw DimensionError(std::string(where) + ": " + what);
  };
  const Mat *hs[] = {&p.w_h_i, &p.w_h_f, &p.w_h_o, &p.w_h_g};
  for (const Mat *m : hs)
    if (m->rows != hidden || m->cols != hidden)
      bad("recurrent matrix shape");
  const Mat *xs[] = {&p.w_x_i, &p.w_x_f, &p.w_x_o, &p.w_x_g};
  for (const Mat *m : xs)
    if (m->rows != hidden || m->cols != input)
      bad("input matrix shape");
  const Vec *bs[] = {&p.b_i, &p.b_f, &p.b_o, &p.b_g};
  for (const Vec *v : bs)
    if (static_cast<int>(v->size()) != hidden)
      bad("bias dim");
}

} // namespace

void NlgModel::validate() const {
  const int e = hyper.embed_dim;
  const int h = hyper.hidden_dim;
  const int hd = hyper.dec_hidden_dim;
  if (e < 1 || h < 1 || hd < 1)
    throw DimensionError("model dims must be positive");
  if (p.embed_in.rows != vocab_in.size() || p.embed_in.cols != e)
    throw DimensionError("embed_in shape");
  if (p.embed_out.rows != vocab_out.size() || p.embed_out.cols != e)
    throw DimensionError("embed_out shape");
  check_lstm(p.enc_fwd, h, e, "encoder forward");
  check_lstm(p.enc_bwd, h, e, "encoder backward");
  check_lstm(p.dec, hd, e + 2 * h, "decoder");
  if (p.attn.rows != hd || p.attn.cols != 2 * h)
    throw DimensionError("attention matrix shape");
  if (p.out_proj.rows != vocab_out.size() ||
      p.out_proj.cols != logits_input_dim())
    throw DimensionError("output projection shape");
}

namespace {

ModelTensors make_tensors(int vin, int vout, const Hyper &h,
                          LogitsFrom logits_from) {
  ModelTensors t;
  t.embed_in = Mat(vin, h.embed_dim);
  t.embed_out = Mat(vout, h.embed_dim);
  t.enc_fwd = LstmParams(h.hidden_dim, h.embed_dim);
  t.enc_bwd = LstmParams(h.hidden_dim, h.embed_dim);
  t.dec = LstmParams(h.dec_hidden_dim, h.embed_dim + 2 * h.hidden_dim);
  t.attn = Mat(h.dec_hidden_dim, 2 * h.hidden_dim);
  const int li = logits_from == LogitsFrom::context
                     ? 2 * h.hidden_dim
                     : h.dec_hidden_dim + 2 * h.hidden_dim;
  t.out_proj = Mat(vout, li);
  return t;
}

} // namespace

NlgModel init_model(const Vocab &vocab_in, const Vocab &vocab_out,
                    const Hyper &hyper, LogitsFrom logits_from,
                    std::uint64_t rng_seed) {
  NlgModel m;
  m.vocab_in = vocab_in;
  m.vocab_out = vocab_out;
  m.hyper = hyper;
  m.logits_from = logits_from;
  m.p = make_tensors(vocab_in.size(), vocab_out.size(), hyper, logits_from);
  SplitRng rng(rng_seed);
  for (auto &ref : parameter_refs(m.p)) {
    if (ref.mat) {
      for (double &x : ref.mat->a)
        x = rng.uniform(-0.08, 0.08);
    } else {
      for (double &x : *ref.vec)
        x = rng.uniform(-0.08, 0.08);
    }
  }
  m.validate();
  return m;
}

ModelTensors zero_like(const ModelTensors &m) {
  ModelTensors z;
  z.embed_in = Mat(m.embed_in.rows, m.embed_in.cols);
  z.embed_out = Mat(m.embed_out.rows, m.embed_out.cols);
  auto zero_lstm = [](const LstmParams &p) {
    return LstmParams(p.hidden_dim(), p.input_dim());
  };
  z.enc_fwd = zero_lstm(m.enc_fwd);
  z.enc_bwd = zero_lstm(m.enc_bwd);
  z.dec = zero_lstm(m.dec);
  z.attn = Mat(m.attn.rows, m.attn.cols);
  z.out_proj = Mat(m.out_proj.rows, m.out_proj.cols);
  return z;
}

std::vector<TensorRef> parameter_refs(ModelTensors &t) {
  std::vector<TensorRef> out;
  auto mat = [&out](Mat &m, const char *name) {
    out.push_back({&m, nullptr, name});
  };
  auto vec = [&out](Vec &v, const char *name) {
    out.push_back({nullptr, &v, name});
  };
  auto lstm = [&](LstmParams &p) {
    mat(p.w_h_i, "w_h_i");
    mat(p.w_h_f, "w_h_f");
    mat(p.w_h_o, "w_h_o");
    mat(p.w_h_g, "w_h_g");
    mat(p.w_x_i, "w_x_i");
    mat(p.w_x_f, "w_x_f");
    mat(p.w_x_o, "w_x_o");
    mat(p.w_x_g, "w_x_g");
    vec(p.b_i, "b_i");
    vec(p.b_f, "b_f");
    vec(p.b_o, "b_o");
    vec(p.b_g, "b_g");
  };
  mat(t.embed_in, "embed_in");
  mat(t.embed_out, "embed_out");
  lstm(t.enc_fwd);
  lstm(t.enc_bwd);
  lstm(t.dec);
  mat(t.attn, "attn");
  mat(t.out_proj, "out_proj");
  return out;
}

std::size_t parameter_count(const ModelTensors &t) {
  std::size_t n = 0;
  for (auto &ref : parameter_refs(const_cast<ModelTensors &>(t))) {
    if (ref.mat)
      n += ref.mat->a.size();
    else
      n += ref.vec->size();
  }
  return n;
}

Vec flatten(const ModelTensors &t) {
  Vec out;
  out.reserve(parameter_count(t));
  for (auto &ref : parameter_refs(const_cast<ModelTensors &>(t))) {
    if (ref.mat)
      out.insert(out.end(), ref.mat->a.begin(), ref.mat->a.end());
    else
      out.insert(out.end(), ref.vec->begin(), ref.vec->end());
  }
  return out;
}

void unflatten(ModelTensors &t, const Vec &flat) {
  std::size_t pos = 0;
  for (auto &ref : parameter_refs(t)) {
    std::size_t n = ref.mat ? ref.mat->a.size() : ref.vec->size();
    if (pos + n > flat.size())
      throw DimensionError("unflatten: vector too short");
    double *dst = ref.mat ? ref.mat->a.data() : ref.vec->data();
    std::memcpy(dst, flat.data() + pos, n * sizeof(double));
    pos += n;
  }
  if (pos != flat.size())
    throw DimensionError("unflatten: vector too long");
}

LstmState lstm_step(const LstmParams &p, const LstmState &prev, const Vec &x) {
  if (static_cast<int>(prev.h.size()) != p.hidden_dim() ||
      static_cast<int>(prev.c.size()) != p.hidden_dim())
    throw DimensionError("lstm_step: state dim " +
                         std::to_string(prev.h.size()) + " vs hidden " +
                         std::to_string(p.hidden_dim()));
  if (static_cast<int>(x.size()) != p.input_dim())
    throw DimensionError("lstm_step: input dim " + std::to_string(x.size()) +
                         " vs expected " + std::to_string(p.input_dim()));
  Vec i = sigmoid(add(add(matvec(p.w_h_i, prev.h), matvec(p.w_x_i, x)), p.b_i));
  Vec f = sigmoid(add(add(matvec(p.w_h_f, prev.h), matvec(p.w_x_f, x)), p.b_f));
  Vec o = sigmoid(add(add(matvec(p.w_h_o, prev.h), matvec(p.w_x_o, x)), p.b_o));
  Vec g =
      tanh_elem(add(add(matvec(p.w_h_g, prev.h), matvec(p.w_x_g, x)), p.b_g));
  LstmState next;
  next.c = add(hadamard(f, prev.c), hadamard(i, g));
  next.h = hadamard(o, tanh_elem(next.c));
  return next;
}

namespace {

Vec embedding_row(const Mat &table, int id, const char *what) {
  if (id < 0 || id >= table.rows)
    throw ValidationError(std::string(what) + " id out of range: " +
                          std::to_string(id));
  const double *r = table.row(id);
  return Vec(r, r + table.cols);
}

} // namespace

std::vector<Vec> encode(const NlgModel &m, const std::vector<int> &input_ids) {
  if (input_ids.empty())
    throw ValidationError("encode: empty input");
  const std::size_t n = input_ids.size();
  std::vector<Vec> embedded(n);
  for (std::size_t i = 0; i < n; ++i)
    embedded[i] = embedding_row(m.p.embed_in, input_ids[i], "input token");

  std::vector<Vec> fwd(n), bwd(n);
  LstmState s = LstmState::zero(m.hyper.hidden_dim);
  for (std::size_t i = 0; i < n; ++i) {
    s = lstm_step(m.p.enc_fwd, s, embedded[i]);
    fwd[i] = s.h;
  }
  s = LstmState::zero(m.hyper.hidden_dim);
  for (std::size_t i = n; i-- > 0;) {
    s = lstm_step(m.p.enc_bwd, s, embedded[i]);
    bwd[i] = s.h;
  }
  std::vector<Vec> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = concat(bwd[i], fwd[i]);
  return out;
}

Attention attend(const Mat &attn, const Vec &s, const std::vector<Vec> &enc) {
  if (enc.empty())
    throw ValidationError("attend: empty encoder sequence");
  if (static_cast<int>(s.size()) != attn.rows)
    throw DimensionError("attend: state dim " + std::to_string(s.size()) +
                         " vs attention rows " + std::to_string(attn.rows));
  Vec scores(enc.size());
  Vec u = matvec_t(attn, s); // u = attn^T s, so score_e = u . enc_e
  for (std::size_t e = 0; e < enc.size(); ++e) {
    if (static_cast<int>(enc[e].size()) != attn.cols)
      throw DimensionError("attend: encoder dim " +
                           std::to_string(enc[e].size()) + " vs cols " +
                           std::to_string(attn.cols));
    scores[e] = dot(u, enc[e]);
  }
  Attention out;
  out.weights = softmax(scores);
  out.context = Vec(static_cast<std::size_t>(attn.cols), 0.0);
  for (std::size_t e = 0; e < enc.size(); ++e)
    axpy(out.context, out.weights[e], enc[e]);
  return out;
}

DecodeOut decode_step(const NlgModel &m, int prev_token,
                      const LstmState &prev_state,
                      const std::vector<Vec> &enc) {
  Vec prev_embed =
      embedding_row(m.p.embed_out, prev_token, "output token");
  Attention in_att = attend(m.p.attn, prev_state.h, enc);
  Vec x = concat(prev_embed, in_att.context);
  DecodeOut out;
  out.state = lstm_step(m.p.dec, prev_state, x);
  Attention out_att = attend(m.p.attn, out.state.h, enc);
  Vec li = m.logits_from == LogitsFrom::context
               ? out_att.context
               : concat(out.state.h, out_att.context);
  out.dist = softmax(matvec(m.p.out_proj, li));
  return out;
}

namespace {

void put_u32(std::ostream &out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i)
    b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char *>(b), 4);
}

void put_f64(std::ostream &out, double d) {
  std::uint64_t v = std::bit_cast<std::uint64_t>(d);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i)
    b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char *>(b), 8);
}

std::uint32_t get_u32(std::istream &in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char *>(b), 4))
    throw IoError("model file truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream &in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char *>(b), 8))
    throw IoError("model file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

constexpr char kMagic[8] = {'C', 'G', 'M', 'O', 'D', 'E', 'L', '\0'};

void put_vocab(std::ostream &out, const Vocab &v) {
  put_u32(out, static_cast<std::uint32_t>(v.size()));
  for (const auto &tok : v.tokens()) {
    put_u32(out, static_cast<std::uint32_t>(tok.size()));
    out.write(tok.data(), static_cast<std::streamsize>(tok.size()));
  }
}

Vocab get_vocab(std::istream &in) {
  std::uint32_t n = get_u32(in);
  std::vector<std::string> tokens;
  tokens.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uint32_t len = get_u32(in);
    if (len > (1u << 20))
      throw IoError("model file corrupt: token length " + std::to_string(len));
    std::string tok(len, '\0');
    if (len && !in.read(tok.data(), len))
      throw IoError("model file truncated");
    tokens.push_back(std::move(tok));
  }
  return Vocab::from_tokens(std::move(tokens));
}

} // namespace

void save_model(const NlgModel &m, std::ostream &out) {
  m.validate();
  out.write(kMagic, 8);
  put_u32(out, 1);
  put_u32(out, m.logits_from == LogitsFrom::state_context ? 1u : 0u);
  put_u32(out, static_cast<std::uint32_t>(m.hyper.embed_dim));
  put_u32(out, static_cast<std::uint32_t>(m.hyper.hidden_dim));
  put_u32(out, static_cast<std::uint32_t>(m.hyper.dec_hidden_dim));
  put_u32(out, static_cast<std::uint32_t>(m.vocab_in.size()));
  put_u32(out, static_cast<std::uint32_t>(m.vocab_out.size()));
  auto refs = parameter_refs(const_cast<ModelTensors &>(m.p)); // read only
  put_u32(out, static_cast<std::uint32_t>(refs.size()));
  for (const auto &ref : refs) {
    if (ref.mat) {
      put_u32(out, static_cast<std::uint32_t>(ref.mat->rows));
      put_u32(out, static_cast<std::uint32_t>(ref.mat->cols));
    } else {
      put_u32(out, static_cast<std::uint32_t>(ref.vec->size()));
      put_u32(out, 0);
    }
  }
  for (const auto &ref : refs) {
    if (ref.mat) {
      for (double d : ref.mat->a)
        put_f64(out, d);
    } else {
      for (double d : *ref.vec)
        put_f64(out, d);
    }
  }
  put_vocab(out, m.vocab_in);
  put_vocab(out, m.vocab_out);
  if (!out)
    throw IoError("model write failed");
}

NlgModel load_model(std::istream &in) {
  char magic[8];
  if (!in.read(magic, 8))
    throw IoError("model file truncated");
  if (std::memcmp(magic, kMagic, 8) != 0)
    throw IoError("model file corrupt: bad magic");
  std::uint32_t version = get_u32(in);
  if (version != 1)
    throw IoError("unsupported model format version " +
                  std::to_string(version));
  std::uint32_t flags = get_u32(in);
  NlgModel m;
  m.logits_from =
      (flags & 1u) ? LogitsFrom::state_context : LogitsFrom::context;
  m.hyper.embed_dim = static_cast<int>(get_u32(in));
  m.hyper.hidden_dim = static_cast<int>(get_u32(in));
  m.hyper.dec_hidden_dim = static_cast<int>(get_u32(in));
  const int vin = static_cast<int>(get_u32(in));
  const int vout = static_cast<int>(get_u32(in));
  m.p = make_tensors(vin, vout, m.hyper, m.logits_from);

  auto refs = parameter_refs(m.p);
  std::uint32_t count = get_u32(in);
  if (count != refs.size())
    throw DimensionError("model file shape mismatch: tensor count " +
                         std::to_string(count));
  for (const auto &ref : refs) {
    std::uint32_t rows = get_u32(in);
    std::uint32_t cols = get_u32(in);
    if (ref.mat) {
      if (rows != static_cast<std::uint32_t>(ref.mat->rows) ||
          cols != static_cast<std::uint32_t>(ref.mat->cols))
        throw DimensionError(std::string("model file shape mismatch: ") +
                             ref.name);
    } else {
      if (rows != ref.vec->size() || cols != 0)
        throw DimensionError(std::string("model file shape mismatch: ") +
                             ref.name);
    }
  }
  for (auto &ref : refs) {
    if (ref.mat) {
      for (double &d : ref.mat->a)
        d = get_f64(in);
    } else {
      for (double &d : *ref.vec)
        d = get_f64(in);
    }
  }
  m.vocab_in = get_vocab(in);
  m.vocab_out = get_vocab(in);
  if (m.vocab_in.size() != vin || m.vocab_out.size() != vout)
    throw DimensionError("model file shape mismatch: vocab sizes");
  m.validate();
  return m;
}

void save_model_file(const NlgModel &m, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write model file: " + path);
  save_model(m, out);
}

NlgModel load_model_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open model file: " + path);
  return load_model(in);
}

} // namespace corpusgen

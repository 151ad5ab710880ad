#include "foil/nn/lstm.hpp"

#include <cmath>

#include "foil/nn/ops.hpp"

namespace foil::nn {

std::string to_string(ImageMode mode) {
  switch (mode) {
    case ImageMode::None: return "none";
    case ImageMode::AppendToFinal: return "append";
    case ImageMode::InitHidden: return "init-hidden";
  }
  throw NumericError("unreachable image mode");
}

ImageMode image_mode_from_string(const std::string& s) {
  if (s == "none") return ImageMode::None;
  if (s == "append") return ImageMode::AppendToFinal;
  if (s == "init-hidden") return ImageMode::InitHidden;
  throw DataError("unknown image mode: " + s);
}

LstmModel LstmModel::create(Eigen::Index vocab_size, ImageMode mode,
                            Eigen::Index image_dim, Eigen::Index embed_dim,
                            Eigen::Index hidden_dim, bool init_hidden_only) {
  if (vocab_size <= 0) throw DataError("lstm requires a non-empty vocabulary");
  if (mode != ImageMode::None && image_dim <= 0) {
    throw DataError("lstm image mode requires a positive image dimension");
  }
  LstmModel m;
  m.vocab_size = vocab_size;
  m.embed_dim = embed_dim;
  m.hidden_dim = hidden_dim;
  m.image_dim = mode == ImageMode::None ? 0 : image_dim;
  m.mode = mode;
  m.init_hidden_only = init_hidden_only;

  m.embedding = m.layout.add("embedding", vocab_size, embed_dim);
  m.wx = m.layout.add("wx", 4 * hidden_dim, embed_dim);
  m.wh = m.layout.add("wh", 4 * hidden_dim, hidden_dim);
  m.bg = m.layout.add("b", 4 * hidden_dim);
  if (mode == ImageMode::InitHidden) {
    m.proj_h_w = m.layout.add("proj_h_w", hidden_dim, m.image_dim);
    m.proj_h_b = m.layout.add("proj_h_b", hidden_dim);
    if (!init_hidden_only) {
      m.proj_c_w = m.layout.add("proj_c_w", hidden_dim, m.image_dim);
      m.proj_c_b = m.layout.add("proj_c_b", hidden_dim);
    }
  }
  m.head_w = m.layout.add("head_w", 2, m.head_input_dim());
  m.head_b = m.layout.add("head_b", 2);
  m.params = Vector::Zero(m.layout.total());
  return m;
}

namespace {

void glorot_fill(MatView w, Rng& rng) {
  const Scalar limit =
      std::sqrt(6.0 / static_cast<Scalar>(w.rows() + w.cols()));
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      w(r, c) = rng.uniform(-limit, limit);
    }
  }
}

struct StepCache {
  int index = 0;
  Vector x, i, f, o, g, c, tanh_c, h;
};

struct ForwardCache {
  Vector h0, c0;
  std::vector<StepCache> steps;
  Vector head_in;
  Vector logits;
};

ForwardCache run_forward(const LstmModel& model, const TokenSequence& seq,
                         const Vector& image) {
  const Eigen::Index h = model.hidden_dim;
  if (seq.effective_length() == 0) {
    throw DataError("cannot run the recurrent classifier on an empty token sequence");
  }
  if (model.mode == ImageMode::None) {
    if (image.size() != 0) {
      throw DataError("text-only recurrent model was given an image vector");
    }
  } else if (image.size() != model.image_dim) {
    throw DataError("image vector width does not match the model");
  }

  const auto& p = model.params;
  auto emb = mat(model.layout, p, model.embedding);
  auto wx = mat(model.layout, p, model.wx);
  auto wh = mat(model.layout, p, model.wh);
  auto b = vec(model.layout, p, model.bg);

  ForwardCache cache;
  if (model.mode == ImageMode::InitHidden) {
    auto ph_w = mat(model.layout, p, model.proj_h_w);
    auto ph_b = vec(model.layout, p, model.proj_h_b);
    cache.h0 = ph_w * image + ph_b;
    if (model.init_hidden_only) {
      cache.c0 = Vector::Zero(h);
    } else {
      auto pc_w = mat(model.layout, p, model.proj_c_w);
      auto pc_b = vec(model.layout, p, model.proj_c_b);
      cache.c0 = pc_w * image + pc_b;
    }
  } else {
    cache.h0 = Vector::Zero(h);
    cache.c0 = Vector::Zero(h);
  }

  Vector prev_h = cache.h0;
  Vector prev_c = cache.c0;
  cache.steps.reserve(seq.effective_length());
  for (std::size_t t = 0; t < seq.effective_length(); ++t) {
    StepCache step;
    step.index = seq.indices[t];
    if (step.index < 0 || step.index >= model.vocab_size) {
      throw DataError("token index out of vocabulary range");
    }
    step.x = emb.row(step.index).transpose();
    Vector a = wx * step.x + wh * prev_h + b;
    step.i = sigmoid(Vector(a.segment(0, h)));
    step.f = sigmoid(Vector(a.segment(h, h)));
    step.o = sigmoid(Vector(a.segment(2 * h, h)));
    step.g = a.segment(3 * h, h).array().tanh();
    step.c = step.f.cwiseProduct(prev_c) + step.i.cwiseProduct(step.g);
    step.tanh_c = step.c.array().tanh();
    step.h = step.o.cwiseProduct(step.tanh_c);
    prev_h = step.h;
    prev_c = step.c;
    cache.steps.push_back(std::move(step));
  }

  if (model.mode == ImageMode::AppendToFinal) {
    cache.head_in.resize(h + model.image_dim);
    cache.head_in << prev_h, image;
  } else {
    cache.head_in = prev_h;
  }
  auto head_w = mat(model.layout, p, model.head_w);
  auto head_b = vec(model.layout, p, model.head_b);
  cache.logits = head_w * cache.head_in + head_b;
  return cache;
}

}  // namespace

void lstm_init(LstmModel& model, Rng& rng) {
  model.params.setZero();
  glorot_fill(mat(model.layout, model.params, model.embedding), rng);
  glorot_fill(mat(model.layout, model.params, model.wx), rng);
  glorot_fill(mat(model.layout, model.params, model.wh), rng);
  if (model.mode == ImageMode::InitHidden) {
    glorot_fill(mat(model.layout, model.params, model.proj_h_w), rng);
    if (!model.init_hidden_only) {
      glorot_fill(mat(model.layout, model.params, model.proj_c_w), rng);
    }
  }
  glorot_fill(mat(model.layout, model.params, model.head_w), rng);
  // Forget gate opens at init so early training can carry state.
  vec(model.layout, model.params, model.bg)
      .segment(model.hidden_dim, model.hidden_dim)
      .setConstant(1.0);
}

Vector lstm_logits(const LstmModel& model, const TokenSequence& seq,
                   const Vector& image) {
  return run_forward(model, seq, image).logits;
}

Scalar lstm_loss_grad_accumulate(const LstmModel& model,
                                 const TokenSequence& seq,
                                 const Vector& image, int label,
                                 Vector& grad) {
  const Eigen::Index h = model.hidden_dim;
  ForwardCache cache = run_forward(model, seq, image);

  const Scalar m = cache.logits.maxCoeff();
  const Scalar lse =
      m + std::log((cache.logits.array() - m).exp().sum());
  const Scalar loss = lse - cache.logits[label];

  const auto& p = model.params;
  auto wx = mat(model.layout, p, model.wx);
  auto wh = mat(model.layout, p, model.wh);
  auto head_w = mat(model.layout, p, model.head_w);

  auto g_emb = mat(model.layout, grad, model.embedding);
  auto g_wx = mat(model.layout, grad, model.wx);
  auto g_wh = mat(model.layout, grad, model.wh);
  auto g_b = vec(model.layout, grad, model.bg);

  Vector dlogits = softmax(cache.logits);
  dlogits[label] -= 1.0;

  mat(model.layout, grad, model.head_w) +=
      dlogits * cache.head_in.transpose();
  vec(model.layout, grad, model.head_b) += dlogits;

  Vector dhead = head_w.transpose() * dlogits;
  Vector dh = dhead.segment(0, h);
  Vector dc = Vector::Zero(h);

  for (std::size_t t = cache.steps.size(); t-- > 0;) {
    const StepCache& s = cache.steps[t];
    const Vector& prev_h = t > 0 ? cache.steps[t - 1].h : cache.h0;
    const Vector& prev_c = t > 0 ? cache.steps[t - 1].c : cache.c0;

    Vector do_pre = dh.cwiseProduct(s.tanh_c)
                        .cwiseProduct(s.o)
                        .cwiseProduct(Vector::Ones(h) - s.o);
    dc += dh.cwiseProduct(s.o).cwiseProduct(
        (Vector::Ones(h) - s.tanh_c.cwiseProduct(s.tanh_c)));

    Vector di_pre = dc.cwiseProduct(s.g).cwiseProduct(s.i).cwiseProduct(
        Vector::Ones(h) - s.i);
    Vector df_pre = dc.cwiseProduct(prev_c).cwiseProduct(s.f).cwiseProduct(
        Vector::Ones(h) - s.f);
    Vector dg_pre =
        dc.cwiseProduct(s.i).cwiseProduct(Vector::Ones(h) -
                                          s.g.cwiseProduct(s.g));

    Vector da(4 * h);
    da << di_pre, df_pre, do_pre, dg_pre;

    g_wx += da * s.x.transpose();
    g_wh += da * prev_h.transpose();
    g_b += da;
    g_emb.row(s.index) += (wx.transpose() * da).transpose();

    dh = wh.transpose() * da;
    dc = dc.cwiseProduct(s.f);
  }

  if (model.mode == ImageMode::InitHidden) {
    mat(model.layout, grad, model.proj_h_w) += dh * image.transpose();
    vec(model.layout, grad, model.proj_h_b) += dh;
    if (!model.init_hidden_only) {
      mat(model.layout, grad, model.proj_c_w) += dc * image.transpose();
      vec(model.layout, grad, model.proj_c_b) += dc;
    }
  }
  return loss;
}

}  // namespace foil::nn

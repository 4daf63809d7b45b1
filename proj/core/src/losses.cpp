#include "mgan/losses.hpp"

#include <cmath>

namespace mgan::losses {

namespace {
constexpr float kLogEps = 1e-7f;

ad::Var scale_weighted_sum(const std::array<ad::Var, 3>& per_scale, const std::array<float, 3>& sw) {
  std::vector<ad::Var> terms;
  for (int s = 0; s < 3; ++s) terms.push_back(ad::scale(per_scale[static_cast<size_t>(s)], sw[static_cast<size_t>(s)]));
  return ad::add_scalars(terms);
}

const ad::Var& select_scale(const MultiScaleOutput& m, int s) {
  switch (s) {
    case 0: return m.s1;
    case 1: return m.s2;
    default: return m.s3;
  }
}
}  // namespace

void LossWeights::validate() const {
  if (lambda_adv < 0 || lambda_paired < 0 || lambda_cyc < 0 || beta < 0)
    throw InvalidRange("loss weights must be >= 0");
  for (float w : scale_weights)
    if (w < 0) throw InvalidRange("scale weights must be >= 0");
}

void LossReport::set(const std::string& term, int scale, float value) {
  for (auto& e : entries)
    if (e.term == term && e.scale == scale) {
      e.value = value;
      return;
    }
  entries.push_back({term, scale, value});
}

float LossReport::get(const std::string& term, int scale) const {
  for (const auto& e : entries)
    if (e.term == term && e.scale == scale) return e.value;
  return 0.0f;
}

bool LossReport::has(const std::string& term, int scale) const {
  for (const auto& e : entries)
    if (e.term == term && e.scale == scale) return true;
  return false;
}

std::pair<ad::Var, ad::Var> adversarial_losses(const MultiScaleOutput& d_real, const MultiScaleOutput& d_fake,
                                               const std::array<float, 3>& scale_weights) {
  std::array<ad::Var, 3> d_terms, g_terms;
  for (int s = 0; s < 3; ++s) {
    const ad::Var& r = select_scale(d_real, s);
    const ad::Var& f = select_scale(d_fake, s);
    if (!r->value.same_shape(f->value)) throw ShapeMismatch("adversarial maps differ per scale");
    ad::Var d = ad::add(ad::scale(ad::mean_all(ad::log_clamped(r, kLogEps)), -1.0f),
                        ad::scale(ad::mean_all(ad::log_clamped(ad::one_minus(f), kLogEps)), -1.0f));
    ad::Var g = ad::scale(ad::mean_all(ad::log_clamped(f, kLogEps)), -1.0f);
    d_terms[static_cast<size_t>(s)] = d;
    g_terms[static_cast<size_t>(s)] = g;
  }
  return {scale_weighted_sum(d_terms, scale_weights), scale_weighted_sum(g_terms, scale_weights)};
}

ad::Var quality_loss(const ad::Var& pred, const Tensor& target, const Tensor& q, float beta) {
  if (!pred->value.same_shape(target)) throw ShapeMismatch("quality_loss pred/target shapes differ");
  if (!q.same_shape(target)) throw ShapeMismatch("quality_loss q shape differs");
  Tensor w(q.shape());
  for (std::int64_t i = 0; i < w.numel(); ++i) w[i] = std::pow(1.0f - q[i], beta);
  ad::Var residual = ad::abs_val(ad::sub(ad::constant(target), pred));
  return ad::mean_all(ad::mul_const(residual, std::move(w)));
}

ad::Var texture_loss(const ad::Var& pred, const Tensor& target) {
  if (!pred->value.same_shape(target)) throw ShapeMismatch("texture_loss shapes differ");
  constexpr int kBlock = 4;
  ad::Var mp = ad::gram_matrix(pred, kBlock);
  Tensor mt = ad::gram_matrix(ad::constant(target), kBlock)->value;
  return ad::mean_all(ad::square(ad::sub(mp, ad::constant(std::move(mt)))));
}

ad::Var frequency_loss(const ad::Var& pred, const Tensor& target, const wavelet::FilterBank& bank) {
  if (!pred->value.same_shape(target)) throw ShapeMismatch("frequency_loss shapes differ");
  const int C = pred->value.dim(0);
  ad::Var sp = ad::dwt3_stacked(pred, bank);
  Tensor st = wavelet::dwt3_stacked(target, bank);
  std::vector<ad::Var> terms;
  const std::int64_t band_elems = st.numel() / 8;
  for (int k = 0; k < 8; ++k) {
    Tensor tb({C, st.dim(1), st.dim(2), st.dim(3)});
    for (std::int64_t i = 0; i < band_elems; ++i) tb[i] = st[k * band_elems + i];
    ad::Var pb = ad::slice_channels(sp, k * C, (k + 1) * C);
    terms.push_back(ad::mean_all(ad::abs_val(ad::sub(pb, ad::constant(std::move(tb))))));
  }
  return ad::add_scalars(terms);
}

ad::Var cycle_loss(const Tensor& x_a, const ad::Var& rec_a, const Tensor& x_b, const ad::Var& rec_b) {
  if (!rec_a->value.same_shape(x_a) || !rec_b->value.same_shape(x_b))
    throw ShapeMismatch("cycle_loss shapes differ");
  ad::Var la = ad::mean_all(ad::abs_val(ad::sub(ad::constant(x_a), rec_a)));
  ad::Var lb = ad::mean_all(ad::abs_val(ad::sub(ad::constant(x_b), rec_b)));
  return ad::add_scalars({la, lb});
}

std::array<Tensor, 3> target_pyramid(const Tensor& t) {
  Tensor t2 = avg_pool2(t);
  Tensor t3 = avg_pool2(t2);
  return {t, std::move(t2), std::move(t3)};
}

ad::Var total_objective(const ObjectiveInputs& in, const LossWeights& weights,
                        const wavelet::FilterBank& bank, LossReport& report) {
  weights.validate();
  const bool adversarial = in.d_on_a2b != nullptr && in.d_on_b2a != nullptr;

  std::array<ad::Var, 3> scale_losses;
  for (int s = 0; s < 3; ++s) {
    const ad::Var& pa = select_scale(in.pred_a2b, s);
    const ad::Var& pb = select_scale(in.pred_b2a, s);
    const Tensor& ta = in.target_b[static_cast<size_t>(s)];
    const Tensor& tb = in.target_a[static_cast<size_t>(s)];

    Tensor qa(ta.shape()), qb(tb.shape());  // zeros: plain L1 when no quality maps
    if (adversarial && in.use_quality_guidance) {
      qa = select_scale(*in.d_on_a2b, s)->value;  // detached by copy
      qb = select_scale(*in.d_on_b2a, s)->value;
    }
    ad::Var q_term = ad::add_scalars(
        {quality_loss(pa, ta, qa, weights.beta), quality_loss(pb, tb, qb, weights.beta)});
    report.set("quality", s + 1, q_term->value[0]);

    std::vector<ad::Var> paired_terms{q_term};
    if (s == 0) {
      if (in.enable_texture) {
        ad::Var tex = ad::add_scalars({texture_loss(pa, ta), texture_loss(pb, tb)});
        report.set("texture", 1, tex->value[0]);
        paired_terms.push_back(tex);
      }
      if (in.enable_frequency) {
        ad::Var fr = ad::add_scalars({frequency_loss(pa, ta, bank), frequency_loss(pb, tb, bank)});
        report.set("frequency", 1, fr->value[0]);
        paired_terms.push_back(fr);
      }
    }

    std::vector<ad::Var> scale_term{ad::scale(ad::add_scalars(paired_terms), weights.lambda_paired)};
    if (adversarial) {
      ad::Var adv = ad::add_scalars(
          {ad::scale(ad::mean_all(ad::log_clamped(select_scale(*in.d_on_a2b, s), kLogEps)), -1.0f),
           ad::scale(ad::mean_all(ad::log_clamped(select_scale(*in.d_on_b2a, s), kLogEps)), -1.0f)});
      report.set("adv_g", s + 1, adv->value[0]);
      scale_term.push_back(ad::scale(adv, weights.lambda_adv));
    }
    if (s == 0) {
      ad::Var cyc = cycle_loss(in.x_a, in.rec_a, in.x_b, in.rec_b);
      report.set("cycle", 1, cyc->value[0]);
      scale_term.push_back(ad::scale(cyc, weights.lambda_cyc));
    }
    scale_losses[static_cast<size_t>(s)] = ad::add_scalars(scale_term);
  }
  ad::Var total = scale_weighted_sum(scale_losses, weights.scale_weights);
  report.total = total->value[0];
  return total;
}

}  // namespace mgan::losses

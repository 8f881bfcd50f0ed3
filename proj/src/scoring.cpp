#include "kens/scoring.hpp"

#include <algorithm>
#include <cmath>

namespace kens {

namespace {

void check_dims(size_t a, size_t b, size_t c) {
  if (a != b || b != c) throw ContractError("scoring: dimension mismatch");
}

}  // namespace

double score_transe(std::span<const double> h, std::span<const double> r,
                    std::span<const double> t) {
  check_dims(h.size(), r.size(), t.size());
  double sq = 0.0;
  for (size_t i = 0; i < h.size(); ++i) {
    double d = h[i] + r[i] - t[i];
    sq += d * d;
  }
  return -std::sqrt(sq);
}

double score_rotate(std::span<const double> h, std::span<const double> theta,
                    std::span<const double> t) {
  check_dims(h.size(), 2 * theta.size(), t.size());
  double sq = 0.0;
  for (size_t j = 0; j < theta.size(); ++j) {
    const double c = std::cos(theta[j]), s = std::sin(theta[j]);
    const double a = h[2 * j], b = h[2 * j + 1];
    const double ur = a * c - b * s - t[2 * j];
    const double ui = a * s + b * c - t[2 * j + 1];
    sq += ur * ur + ui * ui;
  }
  return -std::sqrt(sq);
}

double triple_score(const EmbeddingSpace& space, int kg, int32_t h, int32_t r, int32_t t) {
  auto hv = space.entity_vec(kg, h);
  auto rv = space.relation_vec(kg, r);
  auto tv = space.entity_vec(kg, t);
  return space.kind == ModelKind::TransE ? score_transe(hv, rv, tv)
                                         : score_rotate(hv, rv, tv);
}

double triple_score(const EmbeddingSpace& space, int kg, const Triple& t) {
  return triple_score(space, kg, t.head, t.relation, t.tail);
}

bool score_transe_grad(std::span<const double> h, std::span<const double> r,
                       std::span<const double> t, double scale,
                       std::span<double> gh, std::span<double> gr, std::span<double> gt) {
  check_dims(h.size(), r.size(), t.size());
  double sq = 0.0;
  for (size_t i = 0; i < h.size(); ++i) {
    double d = h[i] + r[i] - t[i];
    sq += d * d;
  }
  const double n = std::sqrt(sq);
  if (n <= 0.0) return false;
  const double f = -scale / n;
  for (size_t i = 0; i < h.size(); ++i) {
    double d = h[i] + r[i] - t[i];
    gh[i] += f * d;
    gr[i] += f * d;
    gt[i] -= f * d;
  }
  return true;
}

bool score_rotate_grad(std::span<const double> h, std::span<const double> theta,
                       std::span<const double> t, double scale,
                       std::span<double> gh, std::span<double> gtheta, std::span<double> gt) {
  check_dims(h.size(), 2 * theta.size(), t.size());
  const size_t d = theta.size();
  double sq = 0.0;
  for (size_t j = 0; j < d; ++j) {
    const double c = std::cos(theta[j]), s = std::sin(theta[j]);
    const double a = h[2 * j], b = h[2 * j + 1];
    const double ur = a * c - b * s - t[2 * j];
    const double ui = a * s + b * c - t[2 * j + 1];
    sq += ur * ur + ui * ui;
  }
  const double n = std::sqrt(sq);
  if (n <= 0.0) return false;
  const double f = -scale / n;
  for (size_t j = 0; j < d; ++j) {
    const double c = std::cos(theta[j]), s = std::sin(theta[j]);
    const double a = h[2 * j], b = h[2 * j + 1];
    const double ur = a * c - b * s - t[2 * j];
    const double ui = a * s + b * c - t[2 * j + 1];
    gh[2 * j] += f * (ur * c + ui * s);
    gh[2 * j + 1] += f * (ui * c - ur * s);
    gt[2 * j] -= f * ur;
    gt[2 * j + 1] -= f * ui;
    // d(ur)/d(theta) = -(a s + b c), d(ui)/d(theta) = a c - b s
    gtheta[j] += f * (ui * (a * c - b * s) - ur * (a * s + b * c));
  }
  return true;
}

double hinge(double pos_score, double neg_score, double margin) {
  return std::max(0.0, neg_score - pos_score + margin);
}

double knowledge_loss(const EmbeddingSpace& space, int kg,
                      std::span<const Triple> positives,
                      std::span<const Triple> negatives, double margin) {
  if (positives.size() != negatives.size())
    throw ContractError("knowledge_loss: one negative per positive required");
  double loss = 0.0;
  for (size_t i = 0; i < positives.size(); ++i)
    loss += hinge(triple_score(space, kg, positives[i]),
                  triple_score(space, kg, negatives[i]), margin);
  return loss;
}

double alignment_loss(const EmbeddingSpace& space, int kg_a, int kg_b,
                      std::span<const AlignmentPair> pairs) {
  double loss = 0.0;
  for (const AlignmentPair& p : pairs) {
    auto ea = space.entity_vec(kg_a, p.a);
    auto eb = space.entity_vec(kg_b, p.b);
    double sq = 0.0;
    for (size_t i = 0; i < ea.size(); ++i) {
      double d = ea[i] - eb[i];
      sq += d * d;
    }
    loss += std::sqrt(sq);
  }
  return loss;
}

namespace {

// Ensures a RowGrad for `key` exists; rows stay in first-touch order.
// Appending can reallocate, so callers create every row they need before
// taking spans.
void ensure_row(std::vector<RowGrad>& out, uint64_t key, size_t width) {
  for (RowGrad& rg : out)
    if (rg.key == key) return;
  out.push_back({key, std::vector<double>(width, 0.0)});
}

std::span<double> find_row(std::vector<RowGrad>& out, uint64_t key) {
  for (RowGrad& rg : out)
    if (rg.key == key) return rg.g;
  throw ContractError("gradient row missing");
}

}  // namespace

double hinge_term_grad(const EmbeddingSpace& space, int kg, const Triple& pos,
                       const Triple& neg, double margin, std::vector<RowGrad>& out) {
  if (pos.relation != neg.relation)
    throw ContractError("hinge_term_grad: negative must keep the relation");
  const double pos_score = triple_score(space, kg, pos);
  const double neg_score = triple_score(space, kg, neg);
  const double term = hinge(pos_score, neg_score, margin);
  if (term <= 0.0) return term;

  const size_t ew = static_cast<size_t>(space.entity_width());
  const size_t rw = static_cast<size_t>(space.dim);
  const uint64_t k_ph = row_key(kg, TableKind::Entity, pos.head);
  const uint64_t k_pt = row_key(kg, TableKind::Entity, pos.tail);
  const uint64_t k_nh = row_key(kg, TableKind::Entity, neg.head);
  const uint64_t k_nt = row_key(kg, TableKind::Entity, neg.tail);
  const uint64_t k_r = row_key(kg, TableKind::Relation, pos.relation);
  ensure_row(out, k_ph, ew);
  ensure_row(out, k_pt, ew);
  ensure_row(out, k_nh, ew);
  ensure_row(out, k_nt, ew);
  ensure_row(out, k_r, rw);

  // term = f(neg) - f(pos) + margin, so the positive triple's score enters
  // with scale -1 and the negative's with +1.
  auto grad = space.kind == ModelKind::TransE ? score_transe_grad : score_rotate_grad;
  grad(space.entity_vec(kg, pos.head), space.relation_vec(kg, pos.relation),
       space.entity_vec(kg, pos.tail), -1.0, find_row(out, k_ph), find_row(out, k_r),
       find_row(out, k_pt));
  grad(space.entity_vec(kg, neg.head), space.relation_vec(kg, neg.relation),
       space.entity_vec(kg, neg.tail), +1.0, find_row(out, k_nh), find_row(out, k_r),
       find_row(out, k_nt));
  return term;
}

double alignment_pair_grad(const EmbeddingSpace& space, int kg_a, int kg_b,
                           const AlignmentPair& pair, double scale,
                           std::vector<RowGrad>& out) {
  auto ea = space.entity_vec(kg_a, pair.a);
  auto eb = space.entity_vec(kg_b, pair.b);
  double sq = 0.0;
  for (size_t i = 0; i < ea.size(); ++i) {
    double d = ea[i] - eb[i];
    sq += d * d;
  }
  const double dist = std::sqrt(sq);
  if (dist <= 0.0) return dist;
  const uint64_t k_a = row_key(kg_a, TableKind::Entity, pair.a);
  const uint64_t k_b = row_key(kg_b, TableKind::Entity, pair.b);
  ensure_row(out, k_a, ea.size());
  ensure_row(out, k_b, eb.size());
  auto ga = find_row(out, k_a);
  auto gb = find_row(out, k_b);
  const double f = scale / dist;
  for (size_t i = 0; i < ea.size(); ++i) {
    double d = ea[i] - eb[i];
    ga[i] += f * d;
    gb[i] -= f * d;
  }
  return dist;
}

}  // namespace kens

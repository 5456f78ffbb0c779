#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "scdens/concave_fn.hpp"
#include "scdens/core.hpp"
#include "scdens/density.hpp"
#include "scdens/entropy/transformed_cover.hpp"
#include "scdens/transforms.hpp"

namespace scdens::entropy {

// L_r brackets for {g o phi : (g o phi)^2 in P_{M, g^2}} on the whole line.
//
// The line is cut into I_0 = [-(2M+1), 2M+1] and I_{+-i} = +-[i^p, (i+1)^p]
// with p = ((2r+1)/r) 2 / (alpha - 1/r). On each piece members lie below the
// square root of the class envelope, giving a height H_i and A_i =
// H_i |I_i|^{1/r}. Piece i receives budget eps a_i with a_i = A_i^{1/(2r+1)}.
// Pieces where that budget already exceeds eps* A_i get the single bracket
// [0, eps a_i / (eps* |I_i|^{1/r})]; the others a transformed cover.
class TailCover {
 public:
  struct Piece {
    long long index;  // i >= 0; negative side mirrors positive
    Interval span;    // positive-side span
    double height, A, a;
    bool zero;  // covered by the single zero-lower bracket
    std::shared_ptr<TransformedCover> cover;
  };

  TailCover(TransformSpec g, double M, double eps, double r, Thresholds th = {})
      : g_(std::move(g)), M_(M), eps_(eps), r_(r), th_(th), env_(envelope_for_class(M, square_transform(g_))) {
    if (!(M > 0) || !(eps > 0) || !(r >= 1)) throw DomainError("tail cover needs M > 0, eps > 0, r >= 1");
    double alpha = g_.alpha();
    if (!(alpha > 1 / r))
      throw HypothesisError("tail cover needs alpha > 1/r; got alpha = " + std::to_string(alpha) +
                            ", r = " + std::to_string(r));
    p_ = std::isfinite(alpha) ? std::max(1.0, ((2 * r + 1) / r) * 2 / (alpha - 1 / r)) : 1.0;
    beta_ = 1 / (2 * r + 1);
    R_ = 2 * M + 1;
    // Largest index whose right end stays finite.
    imax_ = static_cast<long long>(std::min(2e5, std::pow(10.0, 300 / p_) - 2));

    add_piece(0, {-R_, R_}, std::sqrt(M));
    int run = 0;
    double prevA = kInf;
    for (long long i = 1; i <= imax_ && run < 20; ++i) {
      double hi = std::pow(static_cast<double>(i + 1), p_);
      if (hi <= R_) continue;
      double lo = std::max(std::pow(static_cast<double>(i), p_), R_);
      auto& pc = add_piece(i, {lo, hi}, std::sqrt(env_(lo)));
      run = (pc.zero && pc.A < prevA) ? run + 1 : 0;
      prevA = pc.A;
    }
    last_ = pieces_.back().index;
    // Remaining pieces all take the zero bracket; add their size analytically.
    double tail = 0, t_half = 0, t_end = 0;
    long long N = std::max(imax_, last_ + 1);
    long long half = last_ + (N - last_) / 2;
    for (long long i = last_ + 1; i <= N; ++i) {
      double lo = std::pow(static_cast<double>(i), p_), hi = std::pow(static_cast<double>(i + 1), p_);
      double t = zero_size_r(i, lo, hi);
      tail += t;
      if (i == half) t_half = t;
      if (i == N) t_end = t;
    }
    if (t_end > 0 && t_half > 0 && N > half) {
      double q = std::log(t_half / t_end) / std::log(static_cast<double>(N) / static_cast<double>(half));
      if (q > 1) tail += t_end * static_cast<double>(N) / (q - 1);
      else tail = kInf;
    }
    declared_r_ += 2 * tail;
    tail_r_ = 2 * tail;
  }

  double log_cardinality() const { return log_card_; }
  double declared_size() const { return std::pow(declared_r_, 1 / r_); }
  double eps() const { return eps_; }
  double partition_exponent() const { return p_; }
  double beta() const { return beta_; }
  const std::vector<Piece>& pieces() const { return pieces_; }
  // L_r^r size carried by zero brackets beyond the enumerated pieces.
  double tail_size_r() const { return tail_r_; }
  const TransformSpec& transform() const { return g_; }
  double height(double x) const { return std::abs(x) <= R_ ? std::sqrt(M_) : std::sqrt(env_(x)); }

  // Piece holding x, and the zero-bracket height for pieces past the list.
  long long piece_index(double x) const {
    double ax = std::abs(x);
    if (ax <= R_) return 0;
    auto i = static_cast<long long>(std::floor(std::pow(ax, 1 / p_)));
    while (std::pow(static_cast<double>(i + 1), p_) <= ax) ++i;
    while (i > 1 && std::pow(static_cast<double>(i), p_) > ax) --i;
    return std::max(i, 1LL);
  }
  double zero_height(long long i) const {
    if (const Piece* p = find(i)) return eps_ * p->a / (th_.eps_star * std::pow(p->span.length(), 1 / r_));
    double lo = std::max(std::pow(static_cast<double>(i), p_), R_), hi = std::pow(static_cast<double>(i + 1), p_);
    double len = hi - lo;
    double A = std::sqrt(env_(lo)) * std::pow(len, 1 / r_);
    return eps_ * std::pow(A, beta_) / (th_.eps_star * std::pow(len, 1 / r_));
  }
  const Piece* find(long long i) const {
    for (const auto& p : pieces_)
      if (p.index == i) return &p;
    return nullptr;
  }

  class Located {
   public:
    // The negative side reuses the positive-side cover on the mirrored member.
    Located(const TailCover& c, const PiecewiseConcave& phi) : c_(std::make_shared<TailCover>(c)) {
      PiecewiseConcave mirrored = phi.reflect();
      for (const auto& p : c.pieces_) {
        for (int side : {1, -1}) {
          if (p.index == 0 && side == -1) continue;
          if (p.zero) continue;
          const PiecewiseConcave& src = side > 0 ? phi : mirrored;
          std::optional<PiecewiseConcave> part;
          auto dom = src.domain();
          if (dom.hi >= p.span.lo && dom.lo <= p.span.hi) {
            auto rp = src.restrict_domain(p.span);
            if (rp.domain().length() > 0) part = rp;
          }
          auto loc = p.cover->locate(part);
          if (!loc.indexed()) indexed_ = false;
          located_.push_back({p.index * side, std::make_shared<TransformedCover::Located>(std::move(loc))});
        }
      }
    }

    bool indexed() const { return indexed_; }

    BracketValue operator()(double x) const {
      long long i = c_->piece_index(x);
      long long key = x < 0 ? -i : i;
      for (const auto& e : located_)
        if (e.key == key) {
          auto v = (*e.loc)(key < 0 ? -x : x);
          v.indexed = v.indexed && indexed_;
          return v;
        }
      return {0.0, c_->zero_height(i), indexed_};
    }

    std::vector<double> breakpoints() const {
      std::vector<double> out;
      for (const auto& e : located_) {
        for (double b : e.loc->breakpoints()) out.push_back(e.key < 0 ? -b : b);
      }
      return out;
    }

   private:
    struct Entry {
      long long key;
      std::shared_ptr<TransformedCover::Located> loc;
    };
    std::shared_ptr<const TailCover> c_;
    std::vector<Entry> located_;
    bool indexed_ = true;
  };

  Located locate(const PiecewiseConcave& phi) const { return Located(*this, phi); }

 private:
  double zero_size_r(long long, double lo, double hi) const {
    double A = std::sqrt(env_(lo)) * std::pow(hi - lo, 1 / r_);
    return std::pow(eps_ * std::pow(A, beta_) / th_.eps_star, r_);
  }

  Piece& add_piece(long long i, Interval span, double H) {
    Piece pc;
    pc.index = i;
    pc.span = span;
    pc.height = H;
    pc.A = H * std::pow(span.length(), 1 / r_);
    pc.a = std::pow(pc.A, beta_);
    pc.zero = eps_ * pc.a > th_.eps_star * pc.A;
    int copies = i == 0 ? 1 : 2;
    if (pc.zero) {
      declared_r_ += copies * std::pow(eps_ * pc.a / th_.eps_star, r_);
    } else {
      pc.cover = std::make_shared<TransformedCover>(g_, span.lo, span.hi, H, eps_ * pc.a, r_, th_);
      log_card_ += copies * pc.cover->log_cardinality();
      declared_r_ += copies * std::pow(pc.cover->declared_size(), r_);
    }
    pieces_.push_back(std::move(pc));
    return pieces_.back();
  }

  TransformSpec g_;
  double M_, eps_, r_;
  Thresholds th_;
  EnvelopeFn env_;
  double p_ = 1, beta_ = 0, R_ = 0;
  long long imax_ = 0, last_ = 0;
  std::vector<Piece> pieces_;
  double log_card_ = 0, declared_r_ = 0, tail_r_ = 0;
};

}  // namespace scdens::entropy

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "scdens/concave_fn.hpp"
#include "scdens/core.hpp"
#include "scdens/density.hpp"
#include "scdens/entropy/bounded_concave_cover.hpp"
#include "scdens/entropy/lipschitz_cover.hpp"
#include "scdens/entropy/tail_cover.hpp"
#include "scdens/entropy/transformed_cover.hpp"
#include "scdens/random.hpp"
#include "scdens/transforms.hpp"

namespace scdens::entropy {

struct LipschitzConcave {
  double a = 0, b = 1, B = 1, Gamma = 1;
};
struct BoundedConcave {
  double b1 = 0, b2 = 1, B = 1;
};
struct TransformedCompact {
  TransformSpec h;
  double b1 = 0, b2 = 1, B = 1;
};
struct TailClass {
  TransformSpec g;
  double M = 2;
};
using ClassDescriptor = std::variant<LipschitzConcave, BoundedConcave, TransformedCompact, TailClass>;

inline std::string describe(const ClassDescriptor& d) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return std::string(buf);
  };
  return std::visit(
      [&](const auto& c) -> std::string {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, LipschitzConcave>)
          return "LipschitzConcave([" + num(c.a) + "," + num(c.b) + "],B=" + num(c.B) + ",Gamma=" + num(c.Gamma) + ")";
        else if constexpr (std::is_same_v<T, BoundedConcave>)
          return "BoundedConcave([" + num(c.b1) + "," + num(c.b2) + "],B=" + num(c.B) + ")";
        else if constexpr (std::is_same_v<T, TransformedCompact>)
          return "TransformedCompact(" + c.h.describe() + ",[" + num(c.b1) + "," + num(c.b2) + "],B=" + num(c.B) + ")";
        else
          return "TailClass(" + c.g.describe() + ",M=" + num(c.M) + ")";
      },
      d);
}

struct ProbeRegion {
  Interval span;
  bool integrate = true;  // counts toward the measured L_r size
};

// One bracket, evaluated lazily.
struct Bracket {
  std::function<BracketValue(double)> eval;
  std::vector<ProbeRegion> regions;
  std::vector<double> breakpoints;
  double extra_size_r = 0;  // L_r^r of the bracket outside the integrated regions
  double lower(double x) const { return eval(x).lower; }
  double upper(double x) const { return eval(x).upper; }
};

// A bracket cover held by its construction parameters. `log_cardinality` is
// the log of the size of the index set the construction draws from.
class BracketSet {
 public:
  ClassDescriptor descriptor;
  double epsilon = 0;
  double r = 1;  // kInf for sup-norm covers
  double log_cardinality = 0;
  double declared_size = 0;  // bound on the L_r width of every bracket

  double constant() const { return declared_size / epsilon; }
  Bracket locate(const PiecewiseConcave& phi) const { return locator_(phi); }

  // Value of the class member represented by phi.
  double member_value(const PiecewiseConcave& phi, double x) const {
    auto v = phi(x);
    if (!transform_) return v.as_double();
    return transform_->eval(v).as_double();
  }

  std::function<Bracket(const PiecewiseConcave&)> locator_;
  std::optional<TransformSpec> transform_;
};

inline BracketSet cover_lipschitz_concave(double a, double b, double B, double Gamma, double eps) {
  auto c = std::make_shared<LipschitzCover>(a, b, B, Gamma, eps);
  BracketSet s;
  s.descriptor = LipschitzConcave{a, b, B, Gamma};
  s.epsilon = eps;
  s.r = kInf;
  s.log_cardinality = c->log_cardinality();
  s.declared_size = c->width();
  s.locator_ = [c](const PiecewiseConcave& phi) {
    auto loc = std::make_shared<LipschitzCover::Located>(c->locate(phi));
    Bracket br;
    br.eval = [loc](double x) { return (*loc)(x); };
    br.regions = {{{c->a(), c->b()}, true}};
    return br;
  };
  return s;
}

inline BracketSet cover_bounded_concave(double b1, double b2, double B, double eps, double r, Thresholds th = {}) {
  auto c = std::make_shared<BoundedConcaveCover>(b1, b2, B, eps, r, th);
  BracketSet s;
  s.descriptor = BoundedConcave{b1, b2, B};
  s.epsilon = eps;
  s.r = r;
  s.log_cardinality = c->log_cardinality();
  s.declared_size = c->declared_size();
  s.locator_ = [c, b1, b2](const PiecewiseConcave& phi) {
    auto loc = std::make_shared<BoundedConcaveCover::Located>(c->locate(phi));
    Bracket br;
    br.eval = [loc](double x) { return (*loc)(x); };
    br.regions = {{{b1, b2}, true}};
    br.breakpoints = loc->breakpoints();
    return br;
  };
  return s;
}

inline BracketSet cover_transformed(const TransformSpec& h, double b1, double b2, double B, double eps, double r,
                                    Thresholds th = {}) {
  auto c = std::make_shared<TransformedCover>(h, b1, b2, B, eps, r, th);
  BracketSet s;
  s.descriptor = TransformedCompact{h, b1, b2, B};
  s.epsilon = eps;
  s.r = r;
  s.log_cardinality = c->log_cardinality();
  s.declared_size = c->declared_size();
  s.transform_ = h;
  s.locator_ = [c, b1, b2](const PiecewiseConcave& phi) {
    auto loc = std::make_shared<TransformedCover::Located>(c->locate(phi));
    Bracket br;
    br.eval = [loc](double x) { return (*loc)(x); };
    br.regions = {{{b1, b2}, true}};
    br.breakpoints = loc->breakpoints();
    return br;
  };
  return s;
}

inline BracketSet cover_tail_class(const TransformSpec& g, double M, double eps, double r, Thresholds th = {}) {
  auto c = std::make_shared<TailCover>(g, M, eps, r, th);
  BracketSet s;
  s.descriptor = TailClass{g, M};
  s.epsilon = eps;
  s.r = r;
  s.log_cardinality = c->log_cardinality();
  s.declared_size = c->declared_size();
  s.transform_ = g;
  double zero_r = c->tail_size_r();
  for (const auto& p : c->pieces())
    if (p.zero) zero_r += (p.index == 0 ? 1 : 2) * std::pow(eps * p.a / th.eps_star, r);
  s.locator_ = [c, zero_r](const PiecewiseConcave& phi) {
    auto loc = std::make_shared<TailCover::Located>(c->locate(phi));
    Bracket br;
    br.eval = [loc](double x) { return (*loc)(x); };
    for (const auto& p : c->pieces()) {
      if (p.zero) continue;
      br.regions.push_back({p.span, true});
      if (p.index != 0) br.regions.push_back({{-p.span.hi, -p.span.lo}, true});
    }
    // Zero-bracket pieces only need probing where the member lives.
    auto dom = phi.domain();
    for (long long side : {1, -1}) {
      double far = side > 0 ? dom.hi : -dom.lo;
      if (far <= 0) continue;
      long long last = c->piece_index(far);
      for (long long i = 0; i <= last; ++i) {
        const auto* p = c->find(i);
        if (p && !p->zero) continue;
        double lo = i == 0 ? 0.0 : std::pow(static_cast<double>(i), c->partition_exponent());
        double hi = std::pow(static_cast<double>(i + 1), c->partition_exponent());
        if (p) lo = p->span.lo, hi = p->span.hi;
        if (i > 0 && c->piece_index(0.5 * (lo + hi)) != i) continue;
        Interval span = side > 0 ? Interval{lo, hi} : Interval{-hi, -lo};
        span.lo = std::max(span.lo, dom.lo);
        span.hi = std::min(span.hi, dom.hi);
        if (span.hi > span.lo) br.regions.push_back({span, false});
      }
    }
    br.breakpoints = loc->breakpoints();
    br.extra_size_r = zero_r;
    return br;
  };
  return s;
}

inline BracketSet build_cover(const ClassDescriptor& d, double eps, double r, Thresholds th = {}) {
  return std::visit(
      [&](const auto& c) -> BracketSet {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, LipschitzConcave>)
          return cover_lipschitz_concave(c.a, c.b, c.B, c.Gamma, eps);
        else if constexpr (std::is_same_v<T, BoundedConcave>)
          return cover_bounded_concave(c.b1, c.b2, c.B, eps, r, th);
        else if constexpr (std::is_same_v<T, TransformedCompact>)
          return cover_transformed(c.h, c.b1, c.b2, c.B, eps, r, th);
        else
          return cover_tail_class(c.g, c.M, eps, r, th);
      },
      d);
}

// ---------------------------------------------------------------------------
// Verification

struct VerificationReport {
  std::size_t members = 0;
  std::size_t uncovered = 0;
  std::size_t unindexed = 0;  // bracket found but outside the counted index set
  double covered_fraction = 1.0;
  double max_observed_size = 0.0;
  std::size_t worst_member = 0;  // first uncovered member, else the largest bracket
  bool vacuous = false;          // no members were supplied
};

struct MemberCheck {
  bool covered = true;
  bool indexed = true;
  double size = 0;
};

inline MemberCheck check_member(const BracketSet& set, const PiecewiseConcave& phi, int grid_density = 2048,
                                double tol = 1e-9) {
  MemberCheck out;
  Bracket br = set.locate(phi);
  bool sup_norm = !std::isfinite(set.r);
  double acc = sup_norm ? 0.0 : br.extra_size_r;
  auto dom = phi.domain();
  for (const auto& reg : br.regions) {
    double lo = reg.span.lo, hi = reg.span.hi;
    if (!(hi > lo)) continue;
    std::vector<double> xs;
    xs.reserve(grid_density + 64);
    for (int i = 0; i <= grid_density; ++i) xs.push_back(lo + (hi - lo) * i / grid_density);
    auto near = [&](double b) {
      if (b < lo || b > hi) return;
      xs.push_back(b);
      xs.push_back(std::nextafter(b, -kInf));
      xs.push_back(std::nextafter(b, kInf));
    };
    for (double b : br.breakpoints) near(b);
    for (double k : phi.knots()) near(k);
    // The transformed member jumps to zero at the ends of its support.
    for (int j = 1; j <= 24; ++j) {
      double d = dom.length() * std::ldexp(1.0, -j);
      for (double b : {dom.lo + d, dom.hi - d}) near(b);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::remove_if(xs.begin(), xs.end(), [&](double x) { return x < lo || x > hi; }), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    double prev_x = 0, prev_w = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double x = xs[i];
      auto v = br.eval(x);
      double f = set.member_value(phi, x);
      if (sup_norm && (x < dom.lo || x > dom.hi)) continue;
      double t = tol * std::max(1.0, std::abs(f));
      if (!(v.lower <= f + t && f <= v.upper + t) || !(v.lower <= v.upper + t)) out.covered = false;
      if (!v.indexed) out.indexed = false;
      double w = std::max(0.0, v.upper - v.lower);
      if (sup_norm) {
        acc = std::max(acc, w);
      } else if (reg.integrate) {
        double wr = std::pow(w, set.r);
        if (i > 0) acc += 0.5 * (wr + prev_w) * (x - prev_x);
        prev_w = wr;
      }
      prev_x = x;
    }
  }
  out.size = sup_norm ? acc : std::pow(acc, 1 / set.r);
  return out;
}

inline VerificationReport verify_bracketing(const BracketSet& set, const std::vector<PiecewiseConcave>& members,
                                            int grid_density = 2048, unsigned jobs = 0) {
  VerificationReport rep;
  rep.members = members.size();
  if (members.empty()) {
    rep.vacuous = true;
    return rep;
  }
  std::vector<MemberCheck> res(members.size());
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(members.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < jobs; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < members.size(); i += jobs) res[i] = check_member(set, members[i], grid_density);
    });
  for (auto& t : pool) t.join();
  bool have_worst = false;
  for (std::size_t i = 0; i < res.size(); ++i) {
    bool ok = res[i].covered && res[i].indexed;
    if (!res[i].covered) ++rep.uncovered;
    else if (!res[i].indexed) ++rep.unindexed;
    if (!ok && !have_worst) {
      rep.worst_member = i;
      have_worst = true;
    }
    if (res[i].size > rep.max_observed_size) {
      rep.max_observed_size = res[i].size;
      if (!have_worst) rep.worst_member = i;
    }
  }
  rep.covered_fraction = 1.0 - static_cast<double>(rep.uncovered + rep.unindexed) / static_cast<double>(res.size());
  return rep;
}

// ---------------------------------------------------------------------------
// Member samplers

// Member of the tail class: phi with sup (g o phi)^2 <= M, (g o phi)^2(0) >= 1/M,
// integral of (g o phi)^2 equal to one.
inline PiecewiseConcave sample_tail_member(const TransformSpec& g, double M, std::uint64_t seed) {
  TransformSpec h = square_transform(g);
  for (std::uint64_t attempt = 0; attempt < 10000; ++attempt) {
    Rng rng(derive_seed(seed, attempt));
    double c1 = std::exp(rng.uniform(std::log(0.5), std::log(200.0)));
    double c2 = std::exp(rng.uniform(std::log(0.5), std::log(200.0)));
    int knots = 2 + static_cast<int>(rng.below(12));
    auto base = sample_random_concave(-c1, c2, 1.0, knots, rng.bits());
    double lambda = std::exp(rng.uniform(std::log(0.2), std::log(20.0)));
    double top = h.inverse(1.0);
    auto phi = base.affine_values(lambda, top - lambda * base.max_value());
    TransformedDensity p = normalize(TransformedDensity(h, phi));
    double sup = p.sup(), at0 = p(0.0);
    if (!(at0 > 0) || !(sup > 0)) continue;
    double clo = 1 / (M * at0), chi = M / sup;
    if (!(clo < chi)) continue;
    double c = std::exp(rng.uniform(std::log(clo), std::log(chi)));
    TransformedDensity q = normalize(TransformedDensity(h, p.phi().affine_argument(1 / c, 0.0)));
    if (q.sup() <= M * (1 - 1e-9) && q(0.0) >= (1 / M) * (1 + 1e-9)) return q.phi();
  }
  throw NumericError("sample_tail_member: no acceptable member found", 0.0);
}

inline std::vector<PiecewiseConcave> sample_members(const ClassDescriptor& d, std::size_t count, std::uint64_t seed) {
  std::vector<PiecewiseConcave> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t s = derive_seed(seed, i);
    Rng rng(s);
    int knots = 2 + static_cast<int>(rng.below(20));
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, LipschitzConcave>) {
            auto f = sample_random_concave(c.a, c.b, c.B, knots, rng.bits());
            double smax = 0;
            for (std::size_t j = 0; j + 1 < f.size(); ++j) smax = std::max(smax, std::abs(f.slope(j)));
            if (smax > c.Gamma) f = f.affine_values(c.Gamma / smax, 0.0);
            out.push_back(std::move(f));
          } else if constexpr (std::is_same_v<T, BoundedConcave>) {
            out.push_back(sample_random_concave(c.b1, c.b2, c.B, knots, rng.bits()));
          } else if constexpr (std::is_same_v<T, TransformedCompact>) {
            double L = c.b2 - c.b1;
            double lo = c.b1, hi = c.b2;
            if (rng.uniform() < 0.7) {
              double u1 = rng.uniform(), u2 = rng.uniform();
              lo = c.b1 + L * std::min(u1, u2);
              hi = c.b1 + L * std::max(u1, u2);
              if (!(hi > lo)) hi = c.b2, lo = c.b1;
            }
            auto base = sample_random_concave(lo, hi, 1.0, knots, rng.bits());
            double lambda = std::exp(rng.uniform(std::log(0.1), std::log(30.0)));
            double top = c.h.inverse(c.B * rng.uniform(0.05, 1.0));
            out.push_back(base.affine_values(lambda, top - lambda * base.max_value()));
          } else {
            out.push_back(sample_tail_member(c.g, c.M, s));
          }
        },
        d);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Entropy curve

struct EntropyRow {
  double eps = 0;
  double log_cardinality = 0;
  double declared_size = 0;
  bool valid = true;
  std::string note;
};

struct EntropyCurve {
  std::vector<EntropyRow> rows;
  double exponent = 0;  // slope of log log N against log(1/eps)
  double K = 0;         // least-squares fit of log N = K eps^{-1/2}
  std::vector<std::string> warnings;
};

inline EntropyCurve entropy_curve(const ClassDescriptor& d, const std::vector<double>& eps_grid, double r,
                                  Thresholds th = {}) {
  EntropyCurve out;
  std::vector<double> lx, ly;
  double num = 0, den = 0;
  for (double eps : eps_grid) {
    EntropyRow row;
    row.eps = eps;
    try {
      if (!(eps > 0)) throw DomainError("eps must be positive");
      auto set = build_cover(d, eps, r, th);
      row.log_cardinality = set.log_cardinality;
      row.declared_size = set.declared_size;
      if (!(set.log_cardinality > 0)) {
        row.valid = false;
        row.note = "single bracket";
      }
    } catch (const Error& e) {
      row.valid = false;
      row.note = e.what();
    }
    if (row.valid) {
      lx.push_back(std::log(1 / eps));
      ly.push_back(std::log(row.log_cardinality));
      num += row.log_cardinality / std::sqrt(eps);
      den += 1 / eps;
    } else {
      out.warnings.push_back("dropped eps = " + std::to_string(eps) + ": " + row.note);
    }
    out.rows.push_back(row);
  }
  if (lx.size() < 3)
    throw InsufficientData("entropy_curve: " + std::to_string(lx.size()) + " valid grid points, need 3");
  out.exponent = scdens::detail::ols_slope(lx, ly);
  out.K = num / den;
  return out;
}

}  // namespace scdens::entropy

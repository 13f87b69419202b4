#include "conelab/cones.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "conelab/version.hpp"

namespace conelab {
namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

class TrivialCone final : public Cone {
 public:
  explicit TrivialCone(int d) : d_(d) {}
  ConeKind kind() const override { return ConeKind::kTrivial; }
  int dim() const override { return d_; }
  Vec project(const Vec&) const override { return Vec::Zero(d_); }
  ConePtr polar() const override { return make_full(d_); }
  std::string describe() const override {
    return "trivial:" + std::to_string(d_);
  }

 private:
  int d_;
};

class FullCone final : public Cone {
 public:
  explicit FullCone(int d) : d_(d) {}
  ConeKind kind() const override { return ConeKind::kFull; }
  int dim() const override { return d_; }
  Vec project(const Vec& v) const override { return v; }
  ConePtr polar() const override { return make_trivial(d_); }
  std::string describe() const override { return "full:" + std::to_string(d_); }

 private:
  int d_;
};

class OrthantCone final : public Cone {
 public:
  explicit OrthantCone(int d) : d_(d) {}
  ConeKind kind() const override { return ConeKind::kOrthant; }
  int dim() const override { return d_; }
  Vec project(const Vec& v) const override { return v.cwiseMax(0.0); }
  ConePtr polar() const override {
    return make_negated(make_orthant(d_));
  }
  std::string describe() const override {
    return "orthant:" + std::to_string(d_);
  }

 private:
  int d_;
};

class SubspaceCone final : public Cone {
 public:
  SubspaceCone(Mat basis, int d) : basis_(std::move(basis)), d_(d) {}
  ConeKind kind() const override { return ConeKind::kSubspace; }
  int dim() const override { return d_; }
  Vec project(const Vec& v) const override {
    if (basis_.cols() == 0) return Vec::Zero(d_);
    return basis_ * (basis_.transpose() * v);
  }
  ConePtr polar() const override {
    return make_subspace_prevalidated(orthonormal_complement(basis_), d_);
  }
  std::string describe() const override {
    return "subspace:" + std::to_string(d_) + ":" +
           std::to_string(basis_.cols());
  }
  const Mat& basis() const { return basis_; }

 private:
  Mat basis_;
  int d_;
};

class SecondOrderCone final : public Cone {
 public:
  explicit SecondOrderCone(int d) : d_(d) {}
  ConeKind kind() const override { return ConeKind::kSecondOrder; }
  int dim() const override { return d_; }
  Vec project(const Vec& v) const override {
    const double t = v[d_ - 1];
    const auto z = v.head(d_ - 1);
    const double a = z.norm();
    if (a <= t) return v;
    if (a <= -t) return Vec::Zero(d_);
    const double s = 0.5 * (a + t);
    Vec out(d_);
    out.head(d_ - 1) = (s / a) * z;
    out[d_ - 1] = s;
    return out;
  }
  ConePtr polar() const override {
    return make_negated(make_second_order(d_));
  }
  std::string describe() const override { return "soc:" + std::to_string(d_); }

 private:
  int d_;
};

class CircularCone final : public Cone {
 public:
  CircularCone(int d, double alpha)
      : d_(d), alpha_(alpha), cos_(std::cos(alpha)), sin_(std::sin(alpha)),
        tan_(std::tan(alpha)) {}
  ConeKind kind() const override { return ConeKind::kCircular; }
  int dim() const override { return d_; }
  Vec project(const Vec& v) const override {
    const double t = v[0];
    const auto z = v.tail(d_ - 1);
    const double a = z.norm();
    if (a <= t * tan_) return v;
    const double beta = t * cos_ + a * sin_;
    Vec out = Vec::Zero(d_);
    if (beta <= 0.0) return out;
    out[0] = beta * cos_;
    if (a > 0.0) out.tail(d_ - 1) = (beta * sin_ / a) * z;
    return out;
  }
  ConePtr polar() const override {
    return make_negated(
        make_circular(d_, 0.5 * std::numbers::pi - alpha_));
  }
  std::string describe() const override {
    return "circ:" + std::to_string(d_) + ":" + fmt_double(alpha_);
  }
  double alpha() const { return alpha_; }

 private:
  int d_;
  double alpha_, cos_, sin_, tan_;
};

class HalfspaceCone final : public Cone {
 public:
  explicit HalfspaceCone(Vec unit_normal)
      : u_(std::move(unit_normal)), d_(static_cast<int>(u_.size())) {}
  ConeKind kind() const override { return ConeKind::kHalfspace; }
  int dim() const override { return d_; }
  Vec project(const Vec& v) const override {
    const double s = u_.dot(v);
    if (s >= 0.0) return v;
    return v - s * u_;
  }
  ConePtr polar() const override;
  std::string describe() const override {
    std::string s = "halfspace:(";
    for (int i = 0; i < d_; ++i) {
      if (i) s += ',';
      s += fmt_double(u_[i]);
    }
    return s + ")";
  }
  const Vec& normal() const { return u_; }

 private:
  Vec u_;
  int d_;
};

class ProductCone final : public Cone {
 public:
  explicit ProductCone(std::vector<ConePtr> cs) : children_(std::move(cs)) {
    d_ = 0;
    for (const auto& c : children_) d_ += c->dim();
  }
  ConeKind kind() const override { return ConeKind::kProduct; }
  int dim() const override { return d_; }
  Vec project(const Vec& v) const override {
    Vec out(d_);
    int off = 0;
    for (const auto& c : children_) {
      const int k = c->dim();
      out.segment(off, k) = c->project(v.segment(off, k));
      off += k;
    }
    return out;
  }
  ConePtr polar() const override {
    std::vector<ConePtr> ps;
    ps.reserve(children_.size());
    for (const auto& c : children_) ps.push_back(make_polar(c));
    return make_product(std::move(ps));
  }
  std::string describe() const override {
    std::string s = "prod:(";
    for (size_t i = 0; i < children_.size(); ++i) {
      if (i) s += ',';
      s += children_[i]->describe();
    }
    return s + ")";
  }
  const std::vector<ConePtr>& children() const { return children_; }

 private:
  std::vector<ConePtr> children_;
  int d_;
};

class PolarCone final : public Cone {
 public:
  explicit PolarCone(ConePtr inner) : inner_(std::move(inner)) {}
  ConeKind kind() const override { return ConeKind::kPolar; }
  int dim() const override { return inner_->dim(); }
  Vec project(const Vec& v) const override {
    return v - inner_->project(v);
  }
  ConePtr polar() const override { return inner_; }
  std::string describe() const override {
    return "polar:(" + inner_->describe() + ")";
  }
  const ConePtr& inner() const { return inner_; }

 private:
  ConePtr inner_;
};

class NegatedCone final : public Cone {
 public:
  explicit NegatedCone(ConePtr inner) : inner_(std::move(inner)) {}
  ConeKind kind() const override { return ConeKind::kNegated; }
  int dim() const override { return inner_->dim(); }
  Vec project(const Vec& v) const override { return -inner_->project(-v); }
  ConePtr polar() const override { return make_negated(inner_->polar()); }
  std::string describe() const override {
    return "neg:(" + inner_->describe() + ")";
  }
  const ConePtr& inner() const { return inner_; }

 private:
  ConePtr inner_;
};

class RestrictedCone final : public Cone {
 public:
  RestrictedCone(ConePtr inner, Vec x)
      : inner_(std::move(inner)), x_(std::move(x)),
        d_(static_cast<int>(x_.size())) {}
  ConeKind kind() const override { return ConeKind::kRestricted; }
  int dim() const override { return d_; }
  Vec project(const Vec& v) const override {
    // Two-set Dykstra over the inner cone and the supporting halfspace. The
    // per-cycle displacement understates the remaining error when the sets
    // meet at a shallow angle (contraction factor near one), so the stopping
    // rule also demands feasibility for both sets at the current iterate.
    Vec x = v;
    Vec p = Vec::Zero(d_), q = Vec::Zero(d_);
    const double scale = 1.0 + v.norm();
    Vec prev(d_);
    for (int cycle = 0; cycle < 5000; ++cycle) {
      prev = x;
      Vec y = inner_->project(x + p);
      p = (x + p) - y;
      Vec w = y + q;
      const double s = x_.dot(w);
      x = (s >= 0.0) ? w : Vec(w - s * x_);
      q = w - x;
      if (cycle > 0 && (x - prev).norm() <= 1e-13 * scale &&
          (x - inner_->project(x)).norm() <= 1e-11 * scale)
        break;
    }
    return x;
  }
  ConePtr polar() const override {
    return ConePtr(new PolarCone(
        make_restricted(inner_, x_)));
  }
  std::string describe() const override {
    std::string s = "restrict:(" + inner_->describe();
    for (int i = 0; i < d_; ++i) s += "," + fmt_double(x_[i]);
    return s + ")";
  }
  const ConePtr& inner() const { return inner_; }
  const Vec& axis() const { return x_; }

 private:
  ConePtr inner_;
  Vec x_;
  int d_;
};

ConePtr HalfspaceCone::polar() const {
  return ConePtr(new PolarCone(make_halfspace(u_)));
}

}  // namespace

ConePtr make_trivial(int d) {
  require(d >= 1, "cone: dimension must be positive");
  return ConePtr(new TrivialCone(d));
}

ConePtr make_full(int d) {
  require(d >= 1, "cone: dimension must be positive");
  return ConePtr(new FullCone(d));
}

ConePtr make_orthant(int d) {
  require(d >= 1, "cone: dimension must be positive");
  return ConePtr(new OrthantCone(d));
}

ConePtr make_subspace(const Mat& basis) {
  require(basis.rows() >= 1, "subspace: ambient dimension must be positive");
  return ConePtr(new SubspaceCone(orthonormal_span(basis),
                                  static_cast<int>(basis.rows())));
}

ConePtr make_subspace_prevalidated(Mat basis, int ambient_dim) {
  require(ambient_dim >= 1 && basis.rows() == ambient_dim,
          "subspace: basis/ambient mismatch");
  return ConePtr(new SubspaceCone(std::move(basis), ambient_dim));
}

ConePtr make_second_order(int d) {
  require(d >= 1, "cone: dimension must be positive");
  return ConePtr(new SecondOrderCone(d));
}

ConePtr make_circular(int d, double alpha) {
  require(d >= 1, "cone: dimension must be positive");
  require(alpha > 0.0 && alpha < 0.5 * std::numbers::pi,
          "circular cone: angle must lie strictly inside (0, pi/2)");
  return ConePtr(new CircularCone(d, alpha));
}

ConePtr make_halfspace(const Vec& normal) {
  require(normal.size() >= 1, "halfspace: dimension must be positive");
  const double n = normal.norm();
  require(n > 0.0, "halfspace: zero normal");
  return ConePtr(new HalfspaceCone(normal / n));
}

ConePtr make_product(std::vector<ConePtr> children) {
  require(!children.empty(), "product cone: needs at least one factor");
  for (const auto& c : children) require(c != nullptr, "product cone: null factor");
  return ConePtr(new ProductCone(std::move(children)));
}

ConePtr make_negated(const ConePtr& inner) {
  require(inner != nullptr, "negated cone: null inner");
  switch (inner->kind()) {
    case ConeKind::kTrivial:
    case ConeKind::kFull:
    case ConeKind::kSubspace:
      return inner;  // symmetric under reflection
    case ConeKind::kNegated:
      return static_cast<const NegatedCone&>(*inner).inner();
    case ConeKind::kProduct: {
      std::vector<ConePtr> ns;
      for (const auto& c :
           static_cast<const ProductCone&>(*inner).children())
        ns.push_back(make_negated(c));
      return make_product(std::move(ns));
    }
    default:
      return ConePtr(new NegatedCone(inner));
  }
}

ConePtr make_polar(const ConePtr& inner) {
  require(inner != nullptr, "polar cone: null inner");
  switch (inner->kind()) {
    case ConeKind::kTrivial:
      return make_full(inner->dim());
    case ConeKind::kFull:
      return make_trivial(inner->dim());
    case ConeKind::kOrthant:
      return make_negated(make_orthant(inner->dim()));
    case ConeKind::kSubspace: {
      const auto& sc = static_cast<const SubspaceCone&>(*inner);
      return make_subspace_prevalidated(orthonormal_complement(sc.basis()),
                                        inner->dim());
    }
    case ConeKind::kSecondOrder:
      return make_negated(make_second_order(inner->dim()));
    case ConeKind::kCircular: {
      const auto& cc = static_cast<const CircularCone&>(*inner);
      return make_negated(
          make_circular(inner->dim(), 0.5 * std::numbers::pi - cc.alpha()));
    }
    case ConeKind::kProduct: {
      std::vector<ConePtr> ps;
      for (const auto& c :
           static_cast<const ProductCone&>(*inner).children())
        ps.push_back(make_polar(c));
      return make_product(std::move(ps));
    }
    case ConeKind::kPolar:
      return static_cast<const PolarCone&>(*inner).inner();
    case ConeKind::kNegated:
      return make_negated(
          make_polar(static_cast<const NegatedCone&>(*inner).inner()));
    default:
      return ConePtr(new PolarCone(inner));
  }
}

ConePtr make_restricted(const ConePtr& inner, const Vec& x) {
  require(inner != nullptr, "restricted cone: null inner");
  require(x.size() == inner->dim(), "restricted cone: axis dimension mismatch");
  require(std::abs(x.norm() - 1.0) <= 1e-10,
          "restricted cone: axis must be a unit vector");
  return ConePtr(new RestrictedCone(inner, x));
}

bool cone_contains(const Cone& K, const Vec& v, double tol) {
  return (v - K.project(v)).norm() <= tol * (1.0 + v.norm());
}

MoreauParts moreau_decompose(const Cone& K, const Vec& v) {
  MoreauParts parts;
  parts.in_cone = K.project(v);
  parts.in_polar = K.polar()->project(v);
  return parts;
}

std::optional<Mat> as_subspace_basis(const Cone& K) {
  switch (K.kind()) {
    case ConeKind::kTrivial:
      return Mat(K.dim(), 0);
    case ConeKind::kFull:
      return Mat::Identity(K.dim(), K.dim());
    case ConeKind::kSubspace:
      return static_cast<const SubspaceCone&>(K).basis();
    case ConeKind::kNegated:
      return as_subspace_basis(
          *static_cast<const NegatedCone&>(K).inner());
    case ConeKind::kProduct: {
      const auto& kids = static_cast<const ProductCone&>(K).children();
      std::vector<Mat> bs;
      int rank = 0;
      for (const auto& c : kids) {
        auto b = as_subspace_basis(*c);
        if (!b) return std::nullopt;
        rank += static_cast<int>(b->cols());
        bs.push_back(std::move(*b));
      }
      Mat basis = Mat::Zero(K.dim(), rank);
      int roff = 0, coff = 0;
      for (size_t i = 0; i < kids.size(); ++i) {
        basis.block(roff, coff, bs[i].rows(), bs[i].cols()) = bs[i];
        roff += static_cast<int>(bs[i].rows());
        coff += static_cast<int>(bs[i].cols());
      }
      return basis;
    }
    default:
      return std::nullopt;
  }
}

std::optional<Vec> halfspace_normal(const Cone& K) {
  if (K.kind() != ConeKind::kHalfspace) return std::nullopt;
  return static_cast<const HalfspaceCone&>(K).normal();
}

ConePtr wrapped_inner(const Cone& K) {
  switch (K.kind()) {
    case ConeKind::kPolar:
      return static_cast<const PolarCone&>(K).inner();
    case ConeKind::kNegated:
      return static_cast<const NegatedCone&>(K).inner();
    case ConeKind::kRestricted:
      return static_cast<const RestrictedCone&>(K).inner();
    default:
      return nullptr;
  }
}

std::optional<double> stat_dim_closed(const Cone& K) {
  const double d = K.dim();
  switch (K.kind()) {
    case ConeKind::kTrivial:
      return 0.0;
    case ConeKind::kFull:
      return d;
    case ConeKind::kOrthant:
      return 0.5 * d;
    case ConeKind::kSubspace:
      return static_cast<double>(
          static_cast<const SubspaceCone&>(K).basis().cols());
    case ConeKind::kSecondOrder:
      return 0.5 * d;
    case ConeKind::kHalfspace:
      return d - 0.5;
    case ConeKind::kNegated:
      return stat_dim_closed(*static_cast<const NegatedCone&>(K).inner());
    case ConeKind::kPolar: {
      auto inner = stat_dim_closed(*static_cast<const PolarCone&>(K).inner());
      if (!inner) return std::nullopt;
      return d - *inner;
    }
    case ConeKind::kProduct: {
      double sum = 0.0;
      for (const auto& c : static_cast<const ProductCone&>(K).children()) {
        auto s = stat_dim_closed(*c);
        if (!s) return std::nullopt;
        sum += *s;
      }
      return sum;
    }
    default:
      return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Spec-string parsing

namespace {

std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

int resolve_dim(const std::string& tok, const std::vector<DimBinding>& dims,
                const std::string& ctx) {
  const std::string t = strip(tok);
  require(!t.empty(), "cone spec: empty dimension in " + ctx);
  bool digits = true;
  for (char ch : t)
    if (!std::isdigit(static_cast<unsigned char>(ch))) digits = false;
  if (digits) return std::stoi(t);
  for (const auto& b : dims)
    if (b.name == t) return b.value;
  throw std::invalid_argument("cone spec: unknown dimension symbol '" + t +
                              "' in " + ctx);
}

double parse_double_tok(const std::string& tok, const std::string& ctx) {
  try {
    size_t used = 0;
    double v = std::stod(strip(tok), &used);
    require(used == strip(tok).size(), "cone spec: bad number in " + ctx);
    return v;
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("cone spec: bad number in " + ctx);
  }
}

// Splits on top-level commas (commas inside parentheses do not count).
std::vector<std::string> split_top(const std::string& s) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char ch : s) {
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    if (ch == ',' && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::string expect_parenthesized(const std::string& body,
                                 const std::string& ctx) {
  const std::string b = strip(body);
  require(b.size() >= 2 && b.front() == '(' && b.back() == ')',
          "cone spec: expected parenthesized arguments in " + ctx);
  int depth = 0;
  for (size_t i = 0; i < b.size(); ++i) {
    if (b[i] == '(') ++depth;
    if (b[i] == ')') {
      --depth;
      require(depth > 0 || i + 1 == b.size(),
              "cone spec: unbalanced parentheses in " + ctx);
    }
  }
  require(depth == 0, "cone spec: unbalanced parentheses in " + ctx);
  return b.substr(1, b.size() - 2);
}

}  // namespace

ConePtr parse_cone(const std::string& spec, RngStream* basis_stream,
                   const std::vector<DimBinding>& dims) {
  const std::string s = strip(spec);
  require(!s.empty(), "cone spec: empty string");
  const size_t colon = s.find(':');
  const std::string head = colon == std::string::npos ? s : s.substr(0, colon);
  const std::string rest =
      colon == std::string::npos ? "" : s.substr(colon + 1);

  if (head == "trivial" || head == "full" || head == "orthant" ||
      head == "soc") {
    const int d = resolve_dim(rest, dims, s);
    require(d >= 1, "cone spec: dimension must be positive in " + s);
    if (head == "trivial") return make_trivial(d);
    if (head == "full") return make_full(d);
    if (head == "orthant") return make_orthant(d);
    return make_second_order(d);
  }
  if (head == "circ") {
    const auto parts = split_top(rest);
    require(parts.size() == 1, "cone spec: circ takes d:alpha in " + s);
    const size_t c2 = rest.find(':');
    require(c2 != std::string::npos, "cone spec: circ takes d:alpha in " + s);
    const int d = resolve_dim(rest.substr(0, c2), dims, s);
    const double alpha = parse_double_tok(rest.substr(c2 + 1), s);
    return make_circular(d, alpha);
  }
  if (head == "subspace") {
    const size_t c2 = rest.find(':');
    require(c2 != std::string::npos, "cone spec: subspace takes d:k in " + s);
    const int d = resolve_dim(rest.substr(0, c2), dims, s);
    const int k = resolve_dim(rest.substr(c2 + 1), dims, s);
    require(d >= 1, "cone spec: dimension must be positive in " + s);
    require(k >= 0 && k <= d, "cone spec: subspace needs 0 <= k <= d in " + s);
    require(basis_stream != nullptr,
            "cone spec: subspace basis requires a random stream");
    if (k == 0) return make_subspace_prevalidated(Mat(d, 0), d);
    Mat b = gaussian_matrix(*basis_stream, d, k);
    return make_subspace(b);
  }
  if (head == "prod") {
    const auto body = expect_parenthesized(rest, s);
    std::vector<ConePtr> kids;
    for (const auto& part : split_top(body))
      kids.push_back(parse_cone(part, basis_stream, dims));
    return make_product(std::move(kids));
  }
  if (head == "polar") {
    const auto body = expect_parenthesized(rest, s);
    return make_polar(parse_cone(body, basis_stream, dims));
  }
  if (head == "restrict") {
    const auto body = expect_parenthesized(rest, s);
    const auto parts = split_top(body);
    require(parts.size() >= 2,
            "cone spec: restrict takes (cone,vector) in " + s);
    ConePtr inner = parse_cone(parts[0], basis_stream, dims);
    std::string vec_spec = parts[1];
    for (size_t i = 2; i < parts.size(); ++i) vec_spec += "," + parts[i];
    Vec x = parse_vector(vec_spec, inner->dim());
    const double n = x.norm();
    require(n > 0.0, "cone spec: restrict axis must be nonzero in " + s);
    return make_restricted(inner, x / n);
  }
  throw std::invalid_argument("cone spec: unknown cone '" + head + "'");
}

Vec parse_vector(const std::string& spec, int d) {
  const std::string s = strip(spec);
  require(d >= 1, "vector spec: dimension must be positive");
  require(!s.empty(), "vector spec: empty string");
  if (s == "ones") return Vec::Ones(d);
  if (s == "neg-ones") return -Vec::Ones(d);
  if (s.size() >= 2 && s[0] == 'e') {
    bool digits = true;
    for (size_t i = 1; i < s.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) digits = false;
    if (digits) {
      const int i = std::stoi(s.substr(1));
      require(i >= 1 && i <= d, "vector spec: basis index out of range");
      Vec v = Vec::Zero(d);
      v[i - 1] = 1.0;
      return v;
    }
  }
  const auto parts = split_top(s);
  require(static_cast<int>(parts.size()) == d,
          "vector spec: expected " + std::to_string(d) + " entries");
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = parse_double_tok(parts[i], s);
  return v;
}

}  // namespace conelab

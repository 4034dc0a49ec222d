#include "nscale/potential.hpp"

#include <cmath>
#include <sstream>

#include "nscale/errors.hpp"

namespace nscale {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double frac(double u) { return u - std::floor(u); }

double get(const ParamMap& m, const std::string& key, double fallback) {
  auto it = m.find(key);
  return it == m.end() ? fallback : it->second;
}

std::string param_string(const ParamMap& m) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [k, v] : m) {
    if (!first) os << ";";
    os << k << "=" << v;
    first = false;
  }
  return os.str();
}

}  // namespace

MultiscalePotential::MultiscalePotential(int dim, int n_scales, Callables c,
                                         Meta meta)
    : dim_(dim), n_scales_(n_scales), c_(std::move(c)), meta_(std::move(meta)) {
  if (dim_ < 1 || dim_ > 3) throw InputError("MultiscalePotential: dim must be 1..3");
  if (n_scales_ < 1) throw InputError("MultiscalePotential: need n_scales >= 1");
  if (!c_.v0 || !c_.v1) throw InputError("MultiscalePotential: V0 and V1 required");
}

double MultiscalePotential::v1(const double* x0, const double* y) const {
  double yw[3 * 8];
  const int ny = dim_ * n_scales_;
  for (int k = 0; k < ny; ++k) yw[k] = frac(y[k]);
  return c_.v1(x0, yw);
}

double MultiscalePotential::evaluate(const double* x0, const double* y) const {
  return c_.v0(x0) + v1(x0, y);
}

bool MultiscalePotential::has_analytic_grad(int i) const {
  if (i == 0) return static_cast<bool>(c_.grad_v0) && static_cast<bool>(c_.grad_v1);
  return static_cast<bool>(c_.grad_v1);
}

void MultiscalePotential::grad_scale(int i, const double* x0, const double* y,
                                     double* out) const {
  if (i < 0 || i > n_scales_)
    throw InputError("grad_scale: scale index out of range");
  double yw[3 * 8];
  const int ny = dim_ * n_scales_;
  for (int k = 0; k < ny; ++k) yw[k] = frac(y[k]);

  if (i == 0) {
    if (c_.grad_v0) {
      c_.grad_v0(x0, out);
    } else {
      double xp[3], xm[3];
      for (int k = 0; k < dim_; ++k) {
        const double h = meta_.fd_step * (1.0 + std::abs(x0[k]));
        for (int j = 0; j < dim_; ++j) xp[j] = xm[j] = x0[j];
        xp[k] += h;
        xm[k] -= h;
        out[k] = (c_.v0(xp) - c_.v0(xm)) / (2.0 * h);
      }
    }
    // add ∇_{x0} V1
    double g1[3];
    if (c_.grad_v1) {
      c_.grad_v1(0, x0, yw, g1);
    } else {
      double xp[3], xm[3];
      for (int k = 0; k < dim_; ++k) {
        const double h = meta_.fd_step * (1.0 + std::abs(x0[k]));
        for (int j = 0; j < dim_; ++j) xp[j] = xm[j] = x0[j];
        xp[k] += h;
        xm[k] -= h;
        g1[k] = (c_.v1(xp, yw) - c_.v1(xm, yw)) / (2.0 * h);
      }
    }
    for (int k = 0; k < dim_; ++k) out[k] += g1[k];
    return;
  }

  if (c_.grad_v1) {
    c_.grad_v1(i, x0, yw, out);
    return;
  }
  double yp[3 * 8], ym[3 * 8];
  const int base = (i - 1) * dim_;
  for (int k = 0; k < dim_; ++k) {
    const double h = meta_.fd_step;
    for (int j = 0; j < ny; ++j) yp[j] = ym[j] = yw[j];
    yp[base + k] += h;
    ym[base + k] -= h;
    out[k] = (c_.v1(x0, yp) - c_.v1(x0, ym)) / (2.0 * h);
  }
}

EpsilonView::EpsilonView(MultiscalePotential p, double epsilon)
    : p_(std::move(p)), epsilon_(epsilon) {
  if (epsilon_ <= 0.0) throw InputError("EpsilonView: epsilon must be positive");
  powers_.resize(p_.n_scales() + 1);
  powers_[0] = 1.0;
  for (int i = 1; i <= p_.n_scales(); ++i) powers_[i] = powers_[i - 1] / epsilon_;
}

void EpsilonView::collapse(const double* x, double* y) const {
  const int d = p_.dim();
  for (int i = 1; i <= p_.n_scales(); ++i)
    for (int k = 0; k < d; ++k) y[(i - 1) * d + k] = frac(x[k] * powers_[i]);
}

double EpsilonView::evaluate(const double* x) const {
  double y[3 * 8];
  collapse(x, y);
  return p_.evaluate(x, y);
}

void EpsilonView::grad(const double* x, double* out) const {
  const int d = p_.dim();
  double y[3 * 8];
  collapse(x, y);
  double g[3];
  for (int k = 0; k < d; ++k) out[k] = 0.0;
  for (int i = 0; i <= p_.n_scales(); ++i) {
    p_.grad_scale(i, x, y, g);
    for (int k = 0; k < d; ++k) out[k] += powers_[i] * g[k];
  }
}

EpsilonView epsilon_view(const MultiscalePotential& p, double epsilon) {
  return EpsilonView(p, epsilon);
}

double oscillation(const MultiscalePotential& p, const OscSpec& spec) {
  const int d = p.dim();
  const int N = p.n_scales();
  if (spec.x_box.dim() != d) throw InputError("oscillation: box dim mismatch");
  if (spec.x_samples < 1 || spec.y_samples < 1)
    throw InputError("oscillation: empty sampling grid");

  int xs = spec.x_samples;
  int ys = spec.y_samples;
  const int dims = d * (N + 1);
  // clamp total work to ~3e7 evaluations
  auto total = [&](int a, int b) {
    double t = 1.0;
    for (int k = 0; k < d; ++k) t *= a;
    for (int k = 0; k < d * N; ++k) t *= b;
    return t;
  };
  while (total(xs, ys) > 3e7 && (xs > 8 || ys > 8)) {
    if (ys >= xs && ys > 8)
      ys = ys / 2;
    else
      xs = xs / 2;
  }
  (void)dims;

  std::size_t nx = 1, ny = 1;
  for (int k = 0; k < d; ++k) nx *= static_cast<std::size_t>(xs);
  for (int k = 0; k < d * N; ++k) ny *= static_cast<std::size_t>(ys);

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double x0[3], y[3 * 8];
  for (std::size_t ix = 0; ix < nx; ++ix) {
    std::size_t rx = ix;
    for (int k = 0; k < d; ++k) {
      const double t = xs == 1 ? 0.5 : static_cast<double>(rx % xs) / (xs - 1);
      x0[k] = spec.x_box.lo[k] + t * (spec.x_box.hi[k] - spec.x_box.lo[k]);
      rx /= xs;
    }
    for (std::size_t iy = 0; iy < ny; ++iy) {
      std::size_t ry = iy;
      for (int k = 0; k < d * N; ++k) {
        y[k] = static_cast<double>(ry % ys) / ys;
        ry /= ys;
      }
      const double v = p.v1(x0, y);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return hi - lo;
}

double oscillation_or_declared(const MultiscalePotential& p, const OscSpec& spec) {
  if (p.declared_osc()) return *p.declared_osc();
  return oscillation(p, spec);
}

namespace {

using C = MultiscalePotential::Callables;
using M = MultiscalePotential::Meta;

MultiscalePotential quadratic_well(int d, const ParamMap& pm) {
  const double k = get(pm, "k", 1.0);
  C c;
  c.v0 = [d, k](const double* x) {
    double s = 0;
    for (int j = 0; j < d; ++j) s += x[j] * x[j];
    return 0.5 * k * s;
  };
  c.grad_v0 = [d, k](const double* x, double* g) {
    for (int j = 0; j < d; ++j) g[j] = k * x[j];
  };
  c.v1 = [](const double*, const double*) { return 0.0; };
  c.grad_v1 = [d](int, const double*, const double*, double* g) {
    for (int j = 0; j < d; ++j) g[j] = 0.0;
  };
  M m{"quad_well", param_string(pm), 0.0, k, 0.0, 1e-5};
  return MultiscalePotential(d, 1, std::move(c), std::move(m));
}

// 1d chain of independent cosines, one per scale: V1 = Σ_i α_i cos(2π y_i).
MultiscalePotential cosine_chain(int n_scales, std::vector<double> alpha,
                                 const std::string& name, const ParamMap& pm) {
  const double k = get(pm, "k", 1.0);
  C c;
  c.v0 = [k](const double* x) { return 0.5 * k * x[0] * x[0]; };
  c.grad_v0 = [k](const double* x, double* g) { g[0] = k * x[0]; };
  c.v1 = [alpha, n_scales](const double*, const double* y) {
    double s = 0;
    for (int i = 0; i < n_scales; ++i) s += alpha[i] * std::cos(kTwoPi * y[i]);
    return s;
  };
  c.grad_v1 = [alpha](int i, const double*, const double* y, double* g) {
    if (i == 0) {
      g[0] = 0.0;
      return;
    }
    g[0] = -alpha[i - 1] * kTwoPi * std::sin(kTwoPi * y[i - 1]);
  };
  double sup = 0;
  for (double a : alpha) sup += std::abs(a);
  M m{name, param_string(pm), sup, k, 2.0 * sup, 1e-5};
  return MultiscalePotential(1, n_scales, std::move(c), std::move(m));
}

MultiscalePotential sine1(const ParamMap& pm) {
  const double a = get(pm, "alpha", 1.0);
  const double k = get(pm, "k", 1.0);
  C c;
  c.v0 = [k](const double* x) { return 0.5 * k * x[0] * x[0]; };
  c.grad_v0 = [k](const double* x, double* g) { g[0] = k * x[0]; };
  c.v1 = [a](const double*, const double* y) { return a * std::sin(kTwoPi * y[0]); };
  c.grad_v1 = [a](int i, const double*, const double* y, double* g) {
    g[0] = i == 0 ? 0.0 : a * kTwoPi * std::cos(kTwoPi * y[0]);
  };
  M m{"sine1", param_string(pm), std::abs(a), k, 2.0 * std::abs(a), 1e-5};
  return MultiscalePotential(1, 1, std::move(c), std::move(m));
}

// V1 = α (1 + β cos(2π y1)) cos(2π y2): the two microscales interact.
MultiscalePotential prod2(const ParamMap& pm) {
  const double a = get(pm, "alpha", 1.0);
  const double b = get(pm, "beta", 0.5);
  const double k = get(pm, "k", 1.0);
  C c;
  c.v0 = [k](const double* x) { return 0.5 * k * x[0] * x[0]; };
  c.grad_v0 = [k](const double* x, double* g) { g[0] = k * x[0]; };
  c.v1 = [a, b](const double*, const double* y) {
    return a * (1.0 + b * std::cos(kTwoPi * y[0])) * std::cos(kTwoPi * y[1]);
  };
  c.grad_v1 = [a, b](int i, const double*, const double* y, double* g) {
    switch (i) {
      case 0: g[0] = 0.0; break;
      case 1:
        g[0] = -a * b * kTwoPi * std::sin(kTwoPi * y[0]) * std::cos(kTwoPi * y[1]);
        break;
      default:
        g[0] = -a * (1.0 + b * std::cos(kTwoPi * y[0])) * kTwoPi *
               std::sin(kTwoPi * y[1]);
    }
  };
  const double sup = std::abs(a) * (1.0 + std::abs(b));
  M m{"prod2", param_string(pm), sup, k, 2.0 * sup, 1e-5};
  return MultiscalePotential(1, 2, std::move(c), std::move(m));
}

// x-coupled single microscale: V1 = α w(x) trig(2π y), w(x) = 1/(1+(x/δ)^2).
MultiscalePotential coupled_trig(const ParamMap& pm, bool use_sin,
                                 const std::string& name) {
  const double a = get(pm, "alpha", 1.0);
  const double del = get(pm, "delta", 1.0);
  const double k = get(pm, "k", 1.0);
  if (del <= 0) throw ConfigError(name + ": delta must be positive");
  auto w = [del](double x) { return 1.0 / (1.0 + (x / del) * (x / del)); };
  auto dw = [del](double x) {
    const double u = x / del;
    const double q = 1.0 + u * u;
    return -2.0 * u / (del * q * q);
  };
  C c;
  c.v0 = [k](const double* x) { return 0.5 * k * x[0] * x[0]; };
  c.grad_v0 = [k](const double* x, double* g) { g[0] = k * x[0]; };
  c.v1 = [a, w, use_sin](const double* x, const double* y) {
    const double t = use_sin ? std::sin(kTwoPi * y[0]) : std::cos(kTwoPi * y[0]);
    return a * w(x[0]) * t;
  };
  c.grad_v1 = [a, w, dw, use_sin](int i, const double* x, const double* y,
                                  double* g) {
    const double s = std::sin(kTwoPi * y[0]);
    const double co = std::cos(kTwoPi * y[0]);
    if (i == 0) {
      g[0] = a * dw(x[0]) * (use_sin ? s : co);
    } else {
      g[0] = a * w(x[0]) * kTwoPi * (use_sin ? co : -s);
    }
  };
  M m{name, param_string(pm), std::abs(a), k, 2.0 * std::abs(a), 1e-5};
  return MultiscalePotential(1, 1, std::move(c), std::move(m));
}

// 2d confining well with two Gaussian depressions, perturbed by a separable
// cosine in the single microscale.
MultiscalePotential mueller2d(const ParamMap& pm) {
  const double a = get(pm, "alpha", 0.5);
  struct Well {
    double A, cx, cy, s;
  };
  const Well w1{get(pm, "A1", -1.5), -0.8, 0.4, 0.6};
  const Well w2{get(pm, "A2", -1.0), 0.7, -0.3, 0.5};
  auto wells = [w1, w2](const double* x, double* gout) {
    double v = 0;
    if (gout) gout[0] = gout[1] = 0;
    for (const Well& w : {w1, w2}) {
      const double dx = x[0] - w.cx, dy = x[1] - w.cy;
      const double e = w.A * std::exp(-(dx * dx + dy * dy) / w.s);
      v += e;
      if (gout) {
        gout[0] += e * (-2.0 * dx / w.s);
        gout[1] += e * (-2.0 * dy / w.s);
      }
    }
    return v;
  };
  C c;
  c.v0 = [wells](const double* x) {
    return 0.5 * (x[0] * x[0] + x[1] * x[1]) + wells(x, nullptr);
  };
  c.grad_v0 = [wells](const double* x, double* g) {
    double gw[2];
    wells(x, gw);
    g[0] = x[0] + gw[0];
    g[1] = x[1] + gw[1];
  };
  c.v1 = [a](const double*, const double* y) {
    return a * (std::cos(kTwoPi * y[0]) + std::cos(kTwoPi * y[1]));
  };
  c.grad_v1 = [a](int i, const double*, const double* y, double* g) {
    if (i == 0) {
      g[0] = g[1] = 0;
      return;
    }
    g[0] = -a * kTwoPi * std::sin(kTwoPi * y[0]);
    g[1] = -a * kTwoPi * std::sin(kTwoPi * y[1]);
  };
  const double hess = 1.0 + 4.0 * (std::abs(w1.A) / w1.s + std::abs(w2.A) / w2.s);
  M m{"mueller2d", param_string(pm), 2.0 * std::abs(a), hess, 4.0 * std::abs(a),
      1e-5};
  return MultiscalePotential(2, 1, std::move(c), std::move(m));
}

MultiscalePotential cos2d(const ParamMap& pm, bool layered) {
  const double a = get(pm, "alpha", 0.5);
  const double k = get(pm, "k", 1.0);
  C c;
  c.v0 = [k](const double* x) { return 0.5 * k * (x[0] * x[0] + x[1] * x[1]); };
  c.grad_v0 = [k](const double* x, double* g) {
    g[0] = k * x[0];
    g[1] = k * x[1];
  };
  if (layered) {
    c.v1 = [a](const double*, const double* y) { return a * std::cos(kTwoPi * y[0]); };
    c.grad_v1 = [a](int i, const double*, const double* y, double* g) {
      g[0] = i == 0 ? 0.0 : -a * kTwoPi * std::sin(kTwoPi * y[0]);
      g[1] = 0.0;
    };
  } else {
    c.v1 = [a](const double*, const double* y) {
      return a * (std::cos(kTwoPi * y[0]) + std::cos(kTwoPi * y[1]));
    };
    c.grad_v1 = [a](int i, const double*, const double* y, double* g) {
      if (i == 0) {
        g[0] = g[1] = 0;
        return;
      }
      g[0] = -a * kTwoPi * std::sin(kTwoPi * y[0]);
      g[1] = -a * kTwoPi * std::sin(kTwoPi * y[1]);
    };
  }
  const double sup = layered ? std::abs(a) : 2.0 * std::abs(a);
  M m{layered ? "layered2d" : "cos2d", param_string(pm), sup, k, 2.0 * sup, 1e-5};
  return MultiscalePotential(2, 1, std::move(c), std::move(m));
}

// Nonseparable 2d form: the mix between a product mode and a layered mode
// depends on the macroscopic position.
MultiscalePotential coupled2d(const ParamMap& pm) {
  const double a = get(pm, "alpha", 0.5);
  const double k = get(pm, "k", 1.0);
  auto g_of = [](const double* x) { return 1.0 / (1.0 + x[0] * x[0] + x[1] * x[1]); };
  C c;
  c.v0 = [k](const double* x) { return 0.5 * k * (x[0] * x[0] + x[1] * x[1]); };
  c.grad_v0 = [k](const double* x, double* g) {
    g[0] = k * x[0];
    g[1] = k * x[1];
  };
  c.v1 = [a, g_of](const double* x, const double* y) {
    const double g = g_of(x);
    const double c1 = std::cos(kTwoPi * y[0]);
    const double c2 = std::cos(kTwoPi * y[1]);
    return a * (g * c1 * c2 + (1.0 - g) * c1);
  };
  c.grad_v1 = [a, g_of](int i, const double* x, const double* y, double* g) {
    const double gv = g_of(x);
    const double c1 = std::cos(kTwoPi * y[0]);
    const double s1 = std::sin(kTwoPi * y[0]);
    const double c2 = std::cos(kTwoPi * y[1]);
    const double s2 = std::sin(kTwoPi * y[1]);
    if (i == 0) {
      const double q = 1.0 + x[0] * x[0] + x[1] * x[1];
      const double dgx = -2.0 * x[0] / (q * q);
      const double dgy = -2.0 * x[1] / (q * q);
      const double dv_dg = a * (c1 * c2 - c1);
      g[0] = dv_dg * dgx;
      g[1] = dv_dg * dgy;
      return;
    }
    g[0] = a * kTwoPi * (-s1) * (gv * c2 + (1.0 - gv));
    g[1] = a * kTwoPi * gv * c1 * (-s2);
  };
  M m{"coupled2d", param_string(pm), std::abs(a), k, 2.0 * std::abs(a), 1e-5};
  return MultiscalePotential(2, 1, std::move(c), std::move(m));
}

// d = 2, N = 2 with cross-scale coupling: u = y1, v = y2 in T^2 each.
MultiscalePotential twoscale2d(const ParamMap& pm) {
  const double a = get(pm, "alpha", 0.35);
  const double b = get(pm, "beta", 0.3);
  const double k = get(pm, "k", 1.0);
  C c;
  c.v0 = [k](const double* x) { return 0.5 * k * (x[0] * x[0] + x[1] * x[1]); };
  c.grad_v0 = [k](const double* x, double* g) {
    g[0] = k * x[0];
    g[1] = k * x[1];
  };
  c.v1 = [a, b](const double*, const double* y) {
    // y = (u0, u1, v0, v1)
    return a * (std::cos(kTwoPi * y[0]) + std::cos(kTwoPi * y[3])) +
           b * std::cos(kTwoPi * y[1]) * std::cos(kTwoPi * y[2]);
  };
  c.grad_v1 = [a, b](int i, const double*, const double* y, double* g) {
    if (i == 0) {
      g[0] = g[1] = 0;
      return;
    }
    if (i == 1) {
      g[0] = -a * kTwoPi * std::sin(kTwoPi * y[0]);
      g[1] = -b * kTwoPi * std::sin(kTwoPi * y[1]) * std::cos(kTwoPi * y[2]);
    } else {
      g[0] = -b * kTwoPi * std::cos(kTwoPi * y[1]) * std::sin(kTwoPi * y[2]);
      g[1] = -a * kTwoPi * std::sin(kTwoPi * y[3]);
    }
  };
  const double sup = 2.0 * std::abs(a) + std::abs(b);
  M m{"twoscale2d", param_string(pm), sup, k, 2.0 * sup, 1e-5};
  return MultiscalePotential(2, 2, std::move(c), std::move(m));
}

}  // namespace

MultiscalePotential make_potential(const std::string& name, const ParamMap& pm) {
  if (name == "quad_well") {
    const int d = static_cast<int>(get(pm, "dim", 1.0));
    return quadratic_well(d, pm);
  }
  if (name == "cosine1")
    return cosine_chain(1, {get(pm, "alpha", 1.0)}, name, pm);
  if (name == "cosine2")
    return cosine_chain(2, {get(pm, "alpha1", 0.6), get(pm, "alpha2", 0.5)}, name, pm);
  if (name == "cosine3")
    return cosine_chain(
        3, {get(pm, "alpha1", 0.5), get(pm, "alpha2", 0.4), get(pm, "alpha3", 0.3)},
        name, pm);
  if (name == "sine1") return sine1(pm);
  if (name == "prod2") return prod2(pm);
  if (name == "coupled_cos") return coupled_trig(pm, false, name);
  if (name == "coupled_sin") return coupled_trig(pm, true, name);
  if (name == "mueller2d") return mueller2d(pm);
  if (name == "cos2d") return cos2d(pm, false);
  if (name == "layered2d") return cos2d(pm, true);
  if (name == "coupled2d") return coupled2d(pm);
  if (name == "twoscale2d") return twoscale2d(pm);
  throw ConfigError("unknown potential '" + name + "'");
}

std::vector<std::string> potential_catalog() {
  return {"quad_well", "cosine1", "cosine2", "cosine3", "sine1",
          "prod2",     "coupled_cos", "coupled_sin", "mueller2d",
          "cos2d",     "layered2d", "coupled2d", "twoscale2d"};
}

}  // namespace nscale

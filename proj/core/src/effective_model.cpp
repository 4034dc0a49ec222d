#include "nscale/effective_model.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "nscale/errors.hpp"
#include "nscale/parallel.hpp"
#include "nscale/special.hpp"
#include "nscale/version.hpp"

namespace nscale {

ZResult compute_z(const MultiscalePotential& p, double sigma,
                  const Eigen::VectorXd& x0, const std::vector<TorusGrid>& grids) {
  if (sigma <= 0.0) throw InputError("compute_z: sigma must be positive");
  if (x0.size() != p.dim()) throw InputError("compute_z: x0 dim mismatch");
  if (static_cast<int>(grids.size()) != p.n_scales())
    throw InputError("compute_z: need one grid per scale");

  ProductGrid pg{grids};
  const std::size_t total = pg.points();
  std::vector<double> vals(total);
  std::vector<double> y(static_cast<std::size_t>(p.n_scales()) * p.dim());
  for (std::size_t i = 0; i < total; ++i) {
    pg.at(i, y.data());
    vals[i] = -p.v1(x0.data(), y.data()) / sigma;
  }
  const double logz = -p.v0(x0.data()) / sigma + log_mean_exp(vals);
  return {logz, std::exp(logz)};
}

OneDimClosedForm closed_form_1d(const MultiscalePotential& p, double sigma, double x,
                                const std::vector<TorusGrid>& grids) {
  if (p.dim() != 1) throw InputError("closed_form_1d: requires d = 1");
  if (sigma <= 0.0) throw InputError("closed_form_1d: sigma must be positive");
  ProductGrid pg{grids};
  const std::size_t total = pg.points();
  std::vector<double> neg(total), pos(total);
  std::vector<double> y(static_cast<std::size_t>(p.n_scales()));
  for (std::size_t i = 0; i < total; ++i) {
    pg.at(i, y.data());
    const double v = p.v1(&x, y.data()) / sigma;
    neg[i] = -v;
    pos[i] = v;
  }
  OneDimClosedForm r;
  r.log_z1 = log_mean_exp(neg);
  r.log_zhat1 = log_mean_exp(pos);
  r.z1 = std::exp(r.log_z1);
  r.zhat1 = std::exp(r.log_zhat1);
  r.m = std::exp(-(r.log_z1 + r.log_zhat1));
  return r;
}

Eigen::MatrixXd effective_tensor(const MultiscalePotential& p, double sigma,
                                 const Eigen::VectorXd& x0,
                                 const std::vector<TorusGrid>& grids,
                                 const HierarchyOptions& opt, double* asymmetry) {
  const HierarchySolution sol = solve_hierarchy(p, sigma, x0, grids, opt);
  const Eigen::MatrixXd m = sol.effective_tensor_raw();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff() /
                      std::max(1e-300, m.cwiseAbs().maxCoeff());
  if (asymmetry) *asymmetry = asym;
  if (asym > 1e-6) {
    std::ostringstream os;
    os << "effective_tensor: asymmetry residual " << asym << " exceeds 1e-6";
    throw ConsistencyError(os.str());
  }
  return 0.5 * (m + m.transpose());
}

// ---------------------------------------------------------------------------
// interpolation

namespace {

// Catmull-Rom on a uniform table; stencil indices are clamped at the ends.
double cubic_1d(const std::vector<double>& v, std::size_t stride, std::size_t off,
                int n, double t) {
  int i = static_cast<int>(std::floor(t));
  if (i < 0) i = 0;
  if (i > n - 2) i = n - 2;
  const double u = t - i;
  auto at = [&](int j) {
    if (j < 0) j = 0;
    if (j > n - 1) j = n - 1;
    return v[off + stride * static_cast<std::size_t>(j)];
  };
  const double p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
  const double a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
  const double b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
  const double c = -0.5 * p0 + 0.5 * p2;
  return ((a * u + b) * u + c) * u + p1;
}

}  // namespace

namespace {

struct InterpContext {
  const XGrid& g;
  double t[3];     // fractional node coordinate per dim
  int base[3];     // lower cell corner (multilinear)
  double frac[3];
};

InterpContext locate(const XGrid& g, const double* x) {
  InterpContext ctx{g, {}, {}, {}};
  for (int k = 0; k < g.dim(); ++k) {
    const double h = g.spacing(k);
    if (x[k] < g.box.lo[k] + h || x[k] > g.box.hi[k] - h) {
      std::ostringstream os;
      os << "evaluation at x[" << k << "] = " << x[k]
         << " outside the tabulation margin [" << g.box.lo[k] + h << ", "
         << g.box.hi[k] - h << "]";
      throw ExtrapolationError(os.str());
    }
    const double t = (x[k] - g.box.lo[k]) / h;
    ctx.t[k] = t;
    int b = static_cast<int>(std::floor(t));
    if (b > g.nodes[k] - 2) b = g.nodes[k] - 2;
    ctx.base[k] = b;
    ctx.frac[k] = t - b;
  }
  return ctx;
}

double interp_scalar(const XGrid& g, const std::vector<double>& v, std::size_t stride,
                     std::size_t off, int order, const double* x) {
  const InterpContext ctx = locate(g, x);
  if (g.dim() == 1) {
    if (order >= 3) return cubic_1d(v, stride, off, g.nodes[0], ctx.t[0]);
    const std::size_t i = static_cast<std::size_t>(ctx.base[0]);
    return (1.0 - ctx.frac[0]) * v[off + stride * i] +
           ctx.frac[0] * v[off + stride * (i + 1)];
  }
  if (g.dim() == 2) {
    const int n0 = g.nodes[0];
    auto at = [&](int i, int j) {
      return v[off + stride * (static_cast<std::size_t>(j) * n0 + i)];
    };
    const double fx = ctx.frac[0], fy = ctx.frac[1];
    const int i = ctx.base[0], j = ctx.base[1];
    return (1 - fx) * (1 - fy) * at(i, j) + fx * (1 - fy) * at(i + 1, j) +
           (1 - fx) * fy * at(i, j + 1) + fx * fy * at(i + 1, j + 1);
  }
  // trilinear
  const int n0 = g.nodes[0], n1 = g.nodes[1];
  auto at = [&](int i, int j, int k) {
    return v[off + stride * ((static_cast<std::size_t>(k) * n1 + j) * n0 + i)];
  };
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
    double w = (di ? ctx.frac[0] : 1 - ctx.frac[0]) *
               (dj ? ctx.frac[1] : 1 - ctx.frac[1]) *
               (dk ? ctx.frac[2] : 1 - ctx.frac[2]);
    acc += w * at(ctx.base[0] + di, ctx.base[1] + dj, ctx.base[2] + dk);
  }
  return acc;
}

}  // namespace

Eigen::MatrixXd EffectiveModel::m_at(const double* x, std::size_t* clamps) const {
  const int mm = dim * dim;
  Eigen::MatrixXd out(dim, dim);
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b)
      out(a, b) = interp_scalar(xgrid, m, mm, a * dim + b, interpolation_order, x);
  out = 0.5 * (out + out.transpose()).eval();
  if (dim == 1) {
    if (out(0, 0) < 1e-14) {
      out(0, 0) = 1e-14;
      if (clamps) ++*clamps;
    }
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out);
  if (es.eigenvalues().minCoeff() < 1e-14) {
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(1e-14);
    out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    if (clamps) ++*clamps;
  }
  return out;
}

double EffectiveModel::psi_at(const double* x) const {
  return interp_scalar(xgrid, psi, 1, 0, interpolation_order, x);
}

double EffectiveModel::z_at(const double* x) const {
  return interp_scalar(xgrid, z, 1, 0, interpolation_order, x);
}

Eigen::VectorXd EffectiveModel::grad_psi_at(const double* x) const {
  Eigen::VectorXd g(dim);
  for (int k = 0; k < dim; ++k)
    g[k] = interp_scalar(xgrid, grad_psi, dim, k, interpolation_order, x);
  return g;
}

Eigen::VectorXd EffectiveModel::div_m_at(const double* x) const {
  Eigen::VectorXd g(dim);
  for (int k = 0; k < dim; ++k)
    g[k] = interp_scalar(xgrid, div_m, dim, k, interpolation_order, x);
  return g;
}

bool EffectiveModel::covers(const Box& b, double margin_nodes) const {
  for (int k = 0; k < dim; ++k) {
    const double h = xgrid.spacing(k) * margin_nodes;
    if (b.lo[k] < xgrid.box.lo[k] + h || b.hi[k] > xgrid.box.hi[k] - h) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// build

EffectiveModel build_effective_model(const MultiscalePotential& p, double sigma,
                                     const XGrid& xgrid, const ModelBuildOptions& opt) {
  if (xgrid.dim() != p.dim()) throw InputError("build_effective_model: grid dim mismatch");
  for (int n : xgrid.nodes)
    if (n < 5) throw InputError("build_effective_model: need at least 5 nodes per dim");

  EffectiveModel mod;
  mod.dim = p.dim();
  mod.sigma = sigma;
  mod.potential_name = p.name();
  mod.potential_params = p.params();
  mod.n_scales = p.n_scales();
  for (const auto& g : opt.grids) mod.torus_n.push_back(g.n);
  mod.xgrid = xgrid;
  mod.interpolation_order = p.dim() == 1 ? 3 : 1;

  const std::size_t count = xgrid.count();
  const int d = p.dim();
  const int mm = d * d;
  mod.z.resize(count);
  mod.log_z.resize(count);
  mod.psi.resize(count);
  mod.m.resize(count * mm);
  mod.div_m.assign(count * d, 0.0);
  mod.grad_psi.assign(count * d, 0.0);

  parallel_for(count, opt.workers, [&](std::size_t begin, std::size_t end) {
    Eigen::VectorXd x0(d);
    std::vector<double> xc(d);
    for (std::size_t i = begin; i < end; ++i) {
      xgrid.coord(i, xc.data());
      for (int k = 0; k < d; ++k) x0[k] = xc[k];
      const HierarchySolution sol = solve_hierarchy(p, sigma, x0, opt.grids, opt.hier);
      const Eigen::MatrixXd mraw = sol.effective_tensor_raw();
      const double asym = (mraw - mraw.transpose()).cwiseAbs().maxCoeff() /
                          std::max(1e-300, mraw.cwiseAbs().maxCoeff());
      if (asym > 1e-6)
        throw ConsistencyError("build_effective_model: asymmetry residual above 1e-6");
      const Eigen::MatrixXd msym = 0.5 * (mraw + mraw.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(msym);
      if (es.eigenvalues().minCoeff() <= 0.0 ||
          es.eigenvalues().maxCoeff() > 1.0 + 1e-8)
        throw ConsistencyError(
            "build_effective_model: effective tensor eigenvalue outside (0, 1]");
      mod.log_z[i] = sol.log_scale + std::log(sol.z1);
      mod.z[i] = std::exp(mod.log_z[i]);
      mod.psi[i] = -sigma * mod.log_z[i];
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) mod.m[i * mm + a * d + b] = msym(a, b);
    }
  });

  finite_difference_tables(mod);
  return mod;
}

void finite_difference_tables(EffectiveModel& mod) {
  const int d = mod.dim;
  const int mm = d * d;
  const XGrid& xgrid = mod.xgrid;
  const std::size_t count = xgrid.count();
  mod.div_m.assign(count * d, 0.0);
  mod.grad_psi.assign(count * d, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    int idx[3];
    std::size_t rem = i;
    for (int k = 0; k < d; ++k) {
      idx[k] = static_cast<int>(rem % xgrid.nodes[k]);
      rem /= xgrid.nodes[k];
    }
    for (int k = 0; k < d; ++k) {
      const double h = xgrid.spacing(k);
      int ip[3], im[3];
      for (int j = 0; j < d; ++j) ip[j] = im[j] = idx[j];
      double denom = 2.0 * h;
      if (idx[k] == 0) {
        ip[k] = idx[k] + 1;
        denom = h;
      } else if (idx[k] == xgrid.nodes[k] - 1) {
        im[k] = idx[k] - 1;
        denom = h;
      } else {
        ip[k] = idx[k] + 1;
        im[k] = idx[k] - 1;
      }
      const std::size_t jp = xgrid.index(ip), jm = xgrid.index(im);
      mod.grad_psi[i * d + k] = (mod.psi[jp] - mod.psi[jm]) / denom;
      // (div M)_a = sum_k d_k M_{a k}
      for (int a = 0; a < d; ++a)
        mod.div_m[i * d + a] +=
            (mod.m[jp * mm + a * d + k] - mod.m[jm * mm + a * d + k]) / denom;
    }
  }
}

// ---------------------------------------------------------------------------
// CSV io

void EffectiveModel::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw Error("write_csv: cannot open " + path);
  os << std::setprecision(17);
  os << "# nscale-model v1\n";
  os << "# version=" << version << "\n";
  os << "# potential=" << potential_name << "\n";
  os << "# params=" << potential_params << "\n";
  os << "# sigma=" << sigma << "\n";
  os << "# dim=" << dim << "\n";
  os << "# n_scales=" << n_scales << "\n";
  os << "# torus_n=";
  for (std::size_t i = 0; i < torus_n.size(); ++i)
    os << (i ? "," : "") << torus_n[i];
  os << "\n# box_lo=";
  for (int k = 0; k < dim; ++k) os << (k ? "," : "") << xgrid.box.lo[k];
  os << "\n# box_hi=";
  for (int k = 0; k < dim; ++k) os << (k ? "," : "") << xgrid.box.hi[k];
  os << "\n# nodes=";
  for (int k = 0; k < dim; ++k) os << (k ? "," : "") << xgrid.nodes[k];
  os << "\n# interpolation=" << interpolation_order << "\n";

  for (int k = 0; k < dim; ++k) os << "x" << k << ",";
  os << "Z,logZ,Psi";
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) os << ",M" << a << b;
  for (int k = 0; k < dim; ++k) os << ",divM" << k;
  for (int k = 0; k < dim; ++k) os << ",gradPsi" << k;
  os << "\n";

  const std::size_t count = xgrid.count();
  const int mm = dim * dim;
  std::vector<double> xc(dim);
  for (std::size_t i = 0; i < count; ++i) {
    xgrid.coord(i, xc.data());
    for (int k = 0; k < dim; ++k) os << xc[k] << ",";
    os << z[i] << "," << log_z[i] << "," << psi[i];
    for (int e = 0; e < mm; ++e) os << "," << m[i * mm + e];
    for (int k = 0; k < dim; ++k) os << "," << div_m[i * dim + k];
    for (int k = 0; k < dim; ++k) os << "," << grad_psi[i * dim + k];
    os << "\n";
  }
}

namespace {

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

}  // namespace

EffectiveModel EffectiveModel::read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("read_csv: cannot open " + path);
  EffectiveModel mod;
  std::string line;
  std::vector<double> box_lo, box_hi;
  std::vector<int> nodes;
  bool header_done = false;
  std::size_t row = 0, count = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string val = line.substr(eq + 1);
      if (key == "potential") mod.potential_name = val;
      else if (key == "params") mod.potential_params = val;
      else if (key == "sigma") mod.sigma = std::stod(val);
      else if (key == "dim") mod.dim = std::stoi(val);
      else if (key == "n_scales") mod.n_scales = std::stoi(val);
      else if (key == "interpolation") mod.interpolation_order = std::stoi(val);
      else if (key == "torus_n") {
        for (double v : split_doubles(val)) mod.torus_n.push_back(static_cast<int>(v));
      } else if (key == "box_lo") box_lo = split_doubles(val);
      else if (key == "box_hi") box_hi = split_doubles(val);
      else if (key == "nodes") {
        for (double v : split_doubles(val)) nodes.push_back(static_cast<int>(v));
      }
      continue;
    }
    if (!header_done) {  // column header row
      header_done = true;
      mod.xgrid.box.lo = Eigen::Map<Eigen::VectorXd>(box_lo.data(), box_lo.size());
      mod.xgrid.box.hi = Eigen::Map<Eigen::VectorXd>(box_hi.data(), box_hi.size());
      mod.xgrid.nodes = nodes;
      count = mod.xgrid.count();
      const int mm = mod.dim * mod.dim;
      mod.z.resize(count);
      mod.log_z.resize(count);
      mod.psi.resize(count);
      mod.m.resize(count * mm);
      mod.div_m.resize(count * mod.dim);
      mod.grad_psi.resize(count * mod.dim);
      continue;
    }
    const std::vector<double> v = split_doubles(line);
    const int d = mod.dim;
    const int mm = d * d;
    const std::size_t expect = static_cast<std::size_t>(d) + 3 + mm + 2 * d;
    if (v.size() != expect) throw Error("read_csv: malformed row in " + path);
    if (row >= count) throw Error("read_csv: too many rows in " + path);
    std::size_t c = d;  // skip coordinates; grid is implied by the header
    mod.z[row] = v[c++];
    mod.log_z[row] = v[c++];
    mod.psi[row] = v[c++];
    for (int e = 0; e < mm; ++e) mod.m[row * mm + e] = v[c++];
    for (int k = 0; k < d; ++k) mod.div_m[row * d + k] = v[c++];
    for (int k = 0; k < d; ++k) mod.grad_psi[row * d + k] = v[c++];
    ++row;
  }
  if (row != count) throw Error("read_csv: row count mismatch in " + path);
  return mod;
}

// ---------------------------------------------------------------------------

Box auto_box(const MultiscalePotential& p, double sigma, double mass_exponent) {
  const int d = p.dim();
  // coarse scan for the minimizer of V0
  Eigen::VectorXd center = Eigen::VectorXd::Zero(d);
  double vmin = std::numeric_limits<double>::infinity();
  const int scan = d == 1 ? 2001 : 201;
  const double R0 = 10.0;
  std::vector<double> x(d);
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= scan;
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rem = i;
    for (int k = 0; k < d; ++k) {
      x[k] = -R0 + 2.0 * R0 * static_cast<double>(rem % scan) / (scan - 1);
      rem /= scan;
    }
    const double v = p.v0(x.data());
    if (v < vmin) {
      vmin = v;
      for (int k = 0; k < d; ++k) center[k] = x[k];
    }
  }

  const double threshold = vmin + mass_exponent * sigma;
  auto boundary_min = [&](double R) {
    double lo = std::numeric_limits<double>::infinity();
    if (d == 1) {
      double xp = center[0] + R, xm = center[0] - R;
      lo = std::min(p.v0(&xp), p.v0(&xm));
    } else {
      const int samples = 257;
      std::vector<double> xx(d);
      for (int face = 0; face < 2 * d; ++face) {
        const int axis = face / 2;
        const double side = face % 2 ? R : -R;
        std::size_t cnt = 1;
        for (int k = 0; k < d - 1; ++k) cnt *= samples;
        for (std::size_t i = 0; i < cnt; ++i) {
          std::size_t rem = i;
          int kk = 0;
          for (int k = 0; k < d; ++k) {
            if (k == axis) {
              xx[k] = center[k] + side;
            } else {
              xx[k] = center[k] - R +
                      2.0 * R * static_cast<double>(rem % samples) / (samples - 1);
              rem /= samples;
              ++kk;
            }
          }
          lo = std::min(lo, p.v0(xx.data()));
        }
      }
    }
    return lo;
  };

  double R = 1.0;
  int guard = 0;
  while (boundary_min(R) < threshold && guard++ < 60) R *= 1.5;
  double lo_r = R / 1.5, hi_r = R;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo_r + hi_r);
    if (boundary_min(mid) < threshold)
      lo_r = mid;
    else
      hi_r = mid;
  }
  Box b;
  b.lo = center.array() - hi_r;
  b.hi = center.array() + hi_r;
  return b;
}

int default_x_nodes(int dim) {
  switch (dim) {
    case 1: return 129;
    case 2: return 65;
    default: return 33;
  }
}

}  // namespace nscale

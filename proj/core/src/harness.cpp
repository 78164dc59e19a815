#include "dn/harness.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "dn/surface.hpp"
#include "dn/typecheck.hpp"

namespace dn {

double rel_err(double a, double b) {
  double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) / scale;
}

namespace {

// Platform-independent uniform doubles (distribution objects are not
// portable across standard libraries).
struct Rng {
  std::mt19937_64 gen;
  explicit Rng(uint64_t seed) : gen(seed) {}
  double u01() { return (gen() >> 11) * 0x1p-53; }
  double in(double lo, double hi) { return lo + u01() * (hi - lo); }
  int index(int n) { return static_cast<int>(gen() % n); }
};

bool is_data_type(const TypePtr& ty) {
  switch (ty->kind) {
    case TypeKind::Real:
    case TypeKind::Unit:
    case TypeKind::Void:
      return true;
    case TypeKind::Prod:
    case TypeKind::Sum:
      return is_data_type(ty->a) && is_data_type(ty->b);
    case TypeKind::Mu: {
      // Body may mention the binder; arrows/tangents are still excluded.
      return !type_mentions_arrow(ty->a) && !type_mentions_tangent(ty->a);
    }
    case TypeKind::TVar:
    case TypeKind::Arrow:
    case TypeKind::Tangent:
    case TypeKind::Meta:
      return false;
  }
  return false;
}

// real^s arity when ty is a left-nested product of reals, else 0.
int real_pow_arity(const TypePtr& ty) {
  if (ty->kind == TypeKind::Real) return 1;
  if (ty->kind == TypeKind::Prod && ty->b->kind == TypeKind::Real) {
    int s = real_pow_arity(ty->a);
    return s > 0 ? s + 1 : 0;
  }
  return 0;
}

struct Session {
  const Program& p;
  const CheckConfig& cfg;
  ValuePtr primal_fn;        // closure of p.core
  ValuePtr dual_fn_k1;       // closure of p.dual under k=1
  ValuePtr dual_fn_inf;      // under k=infinity
  ValuePtr wrap_fn_inf;      // wrapper closure (reverse mode only)
  std::vector<FlatShape> in_shapes;
  EvalConfig ecfg_src, ecfg_k1, ecfg_inf;

  Session(const Program& prog, const CheckConfig& c, bool reverse)
      : p(prog), cfg(c) {
    ecfg_src = {KSemantics::finite(1), cfg.fuel, cfg.registry};
    ecfg_k1 = ecfg_src;
    ecfg_inf = {KSemantics::infinite(), cfg.fuel, cfg.registry};
    auto want = [&](EvalOutcome o, const char* what) {
      if (!o.ok || o.value->kind != ValueKind::Closure)
        throw std::runtime_error(std::string("program did not evaluate to "
                                             "a function (") +
                                 what + ")");
      return o.value;
    };
    primal_fn = want(evaluate(p.core, ecfg_src), "primal");
    dual_fn_k1 = want(evaluate(p.dual, ecfg_k1), "dual k=1");
    dual_fn_inf = want(evaluate(p.dual, ecfg_inf), "dual k=inf");
    if (reverse) {
      // real^s inputs go through the wrapper term itself; other data types
      // are seeded with basis tangents shape-directly.
      int s = real_pow_arity(p.in_type);
      if (s > 0) wrap_fn_inf = want(evaluate(wrap_term(s), ecfg_inf), "wrapper");
    }
    in_shapes = enumerate_shapes(p.in_type, cfg.depth);
    if (in_shapes.empty())
      throw std::runtime_error("input type has no inhabited shapes");
  }

  // Primal evaluation composed down to flattened points for one shape.
  FlatFn primal_flat(const FlatShape& shape) {
    return [this, shape](const Point& x) -> std::optional<Flattened> {
      auto in = shape_encode(p.in_type, shape, x.coords);
      auto out = apply_value(primal_fn, in, ecfg_src);
      if (!out.ok) return std::nullopt;
      return flatten_value(out.value);
    };
  }

  // One k=1 forward pass in direction v; nullopt when evaluation bottoms.
  std::optional<FlatDual> forward_pass(const FlatShape& shape,
                                       const Point& x,
                                       const std::vector<double>& v) {
    std::vector<Tangent> ws;
    ws.reserve(v.size());
    for (double c : v) ws.push_back(tangent_of({c}, ecfg_k1.k));
    auto in = shape_encode_dual(p.in_type, shape, x.coords, ws);
    auto out = apply_value(dual_fn_k1, in, ecfg_k1);
    if (!out.ok) return std::nullopt;
    return flatten_dual(out.value);
  }

  // One k=infinity reverse pass: slot i of the input carries basis
  // tangent e_i. For real^s inputs this is exactly the wrapper term.
  std::optional<FlatDual> reverse_pass(const FlatShape& shape,
                                       const Point& x) {
    ValuePtr in;
    if (wrap_fn_inf) {
      auto plain = shape_encode(p.in_type, shape, x.coords);
      auto wrapped = apply_value(wrap_fn_inf, plain, ecfg_inf);
      if (!wrapped.ok) return std::nullopt;
      in = wrapped.value;
    } else {
      std::vector<Tangent> ws;
      for (int i = 1; i <= shape.arity; ++i)
        ws.push_back(Tangent::basis(i, ecfg_inf.k));
      in = shape_encode_dual(p.in_type, shape, x.coords, ws);
    }
    auto out = apply_value(dual_fn_inf, in, ecfg_inf);
    if (!out.ok) return std::nullopt;
    return flatten_dual(out.value);
  }
};

void finalize(CheckReport& r) {
  for (auto& s : r.samples) {
    switch (s.status) {
      case SampleStatus::Pass:
        ++r.pass_count;
        break;
      case SampleStatus::Fail:
        ++r.fail_count;
        break;
      case SampleStatus::Rejected:
        ++r.rejected_count;
        break;
    }
  }
  if (r.error.empty() && r.pass_count + r.fail_count == 0)
    r.error = "domain too thin: all samples rejected";
}

// Draws candidates until one is not rejected, recording rejected draws.
// `attempt` fills in the record and returns false for a rejection.
void run_samples(CheckReport& r, const CheckConfig& cfg,
                 const std::function<bool(Rng&, SampleRecord&)>& attempt) {
  Rng rng(cfg.seed);
  for (int i = 0; i < cfg.n; ++i) {
    bool accepted = false;
    for (int tries = 0; tries < cfg.retry_cap && !accepted; ++tries) {
      SampleRecord rec;
      accepted = attempt(rng, rec);
      r.samples.push_back(std::move(rec));
    }
  }
  finalize(r);
}

}  // namespace

Program prepare_program(const TermPtr& t, std::string name, SignMode mode,
                        const Registry& registry) {
  Program p;
  p.name = std::move(name);
  p.source = t;
  p.core = desugar(t);
  auto inf = infer(p.core, Lang::Source);
  if (auto* err = std::get_if<TypeError>(&inf))
    throw std::runtime_error("type error: " + err->message);
  auto& res = std::get<TypingResult>(inf);
  if (res.type->kind != TypeKind::Arrow)
    throw std::runtime_error("program must be a function, got " +
                             show_type(res.type));
  p.in_type = res.type->a;
  p.out_type = res.type->b;
  if (!is_data_type(p.in_type) || !is_data_type(p.out_type))
    throw std::runtime_error(
        "program endpoints must be first-order data types, got " +
        show_type(res.type));
  p.dual = ad_transform(p.core, registry, mode,
                        mode == SignMode::Efficient ? &res.binder_types
                                                    : nullptr);
  return p;
}

CheckReport check_forward(const Program& p, const CheckConfig& cfg) {
  CheckReport r;
  r.program = p.name;
  r.mode = "forward";
  r.cfg = cfg;
  try {
    Session s(p, cfg, /*reverse=*/false);
    run_samples(r, cfg, [&](Rng& rng, SampleRecord& rec) {
      const FlatShape& shape = s.in_shapes[rng.index(
          static_cast<int>(s.in_shapes.size()))];
      rec.in_path = shape.path;
      rec.x.coords.resize(shape.arity);
      std::vector<double> v(shape.arity);
      for (auto& c : rec.x.coords) c = rng.in(cfg.box_lo, cfg.box_hi);
      for (auto& c : v) c = rng.in(-1.0, 1.0);

      auto F = s.primal_flat(shape);
      auto at_x = F(rec.x);
      if (!at_x) {
        rec.note = "primal undefined";
        return false;
      }
      Point vp{v};
      auto oracle = fd_jvp(F, rec.x, vp, cfg.h);
      if (!oracle.ok) {
        rec.note = oracle.why;
        return false;
      }
      if (oracle.out_path != at_x->path) {
        rec.note = "probes straddle a branch boundary";
        return false;
      }
      auto ad = s.forward_pass(shape, rec.x, v);
      if (!ad) {
        rec.status = SampleStatus::Fail;
        rec.note = "dual evaluation undefined where primal is defined";
        return true;
      }
      if (ad->path != at_x->path) {
        rec.status = SampleStatus::Fail;
        rec.note = "dual output shape differs from primal";
        return true;
      }
      double err = 0.0;
      for (size_t j = 0; j < ad->tangent.size(); ++j)
        err = std::max(err,
                       rel_err(ad->tangent[j].coeff(1), oracle.deriv[j]));
      // Primal halves must agree exactly (same arithmetic).
      for (size_t j = 0; j < ad->primal.size(); ++j)
        if (ad->primal[j] != at_x->scalars[j]) {
          rec.status = SampleStatus::Fail;
          rec.note = "dual primal half differs from source evaluation";
          return true;
        }
      rec.max_rel_err = err;
      rec.status = err <= cfg.tol ? SampleStatus::Pass : SampleStatus::Fail;
      if (rec.status == SampleStatus::Fail) rec.note = "tangent mismatch";
      return true;
    });
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

CheckReport check_reverse(const Program& p, const CheckConfig& cfg) {
  CheckReport r;
  r.program = p.name;
  r.mode = "reverse";
  r.cfg = cfg;
  try {
    Session s(p, cfg, /*reverse=*/true);
    run_samples(r, cfg, [&](Rng& rng, SampleRecord& rec) {
      const FlatShape& shape = s.in_shapes[rng.index(
          static_cast<int>(s.in_shapes.size()))];
      int sdim = shape.arity;
      rec.in_path = shape.path;
      rec.x.coords.resize(sdim);
      for (auto& c : rec.x.coords) c = rng.in(cfg.box_lo, cfg.box_hi);

      auto F = s.primal_flat(shape);
      auto at_x = F(rec.x);
      if (!at_x) {
        rec.note = "primal undefined";
        return false;
      }
      auto jac = fd_jacobian(F, rec.x, cfg.h);
      if (!jac.valid) {
        rec.note = jac.why;
        return false;
      }
      if (jac.out_path != at_x->path) {
        rec.note = "probes straddle a branch boundary";
        return false;
      }
      auto ad = s.reverse_pass(shape, rec.x);
      if (!ad) {
        rec.status = SampleStatus::Fail;
        rec.note = "dual evaluation undefined where primal is defined";
        return true;
      }
      if (ad->path != at_x->path) {
        rec.status = SampleStatus::Fail;
        rec.note = "dual output shape differs from primal";
        return true;
      }
      double err = 0.0;
      for (size_t j = 0; j < ad->tangent.size(); ++j) {
        auto row = handler_project(ad->tangent[j], sdim);
        for (int i = 0; i < sdim; ++i)
          err = std::max(err, rel_err(row[i], jac.matrix[j][i]));
      }
      rec.max_rel_err = err;
      rec.status = err <= cfg.tol ? SampleStatus::Pass : SampleStatus::Fail;
      if (rec.status == SampleStatus::Fail) rec.note = "cotangent mismatch";
      return true;
    });
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

CheckReport check_cross(const Program& p, const CheckConfig& cfg) {
  CheckReport r;
  r.program = p.name;
  r.mode = "cross";
  r.cfg = cfg;
  try {
    Session s(p, cfg, /*reverse=*/true);
    run_samples(r, cfg, [&](Rng& rng, SampleRecord& rec) {
      const FlatShape& shape = s.in_shapes[rng.index(
          static_cast<int>(s.in_shapes.size()))];
      int sdim = shape.arity;
      rec.in_path = shape.path;
      rec.x.coords.resize(sdim);
      for (auto& c : rec.x.coords) c = rng.in(cfg.box_lo, cfg.box_hi);

      // Forward-assembled Jacobian: one k=1 pass per basis direction.
      std::vector<std::vector<double>> fwd_cols;
      ShapePath path;
      for (int j = 0; j < sdim; ++j) {
        std::vector<double> e(sdim, 0.0);
        e[j] = 1.0;
        auto col = s.forward_pass(shape, rec.x, e);
        if (!col) {
          rec.note = "dual evaluation undefined";
          return false;
        }
        if (j == 0) {
          path = col->path;
        } else if (col->path != path) {
          rec.status = SampleStatus::Fail;
          rec.note = "output shape varies across forward passes";
          return true;
        }
        std::vector<double> cj;
        for (auto& t : col->tangent) cj.push_back(t.coeff(1));
        fwd_cols.push_back(std::move(cj));
      }
      auto rev = s.reverse_pass(shape, rec.x);
      if (!rev) {
        rec.status = SampleStatus::Fail;
        rec.note = "reverse pass undefined where forward is defined";
        return true;
      }
      if (sdim == 0) path = rev->path;  // nothing varies, nothing to compare
      if (rev->path != path) {
        rec.status = SampleStatus::Fail;
        rec.note = "forward and reverse output shapes differ";
        return true;
      }
      double err = 0.0;
      for (size_t i = 0; i < rev->tangent.size(); ++i) {
        auto row = handler_project(rev->tangent[i], sdim);
        for (int j = 0; j < sdim; ++j)
          err = std::max(err, rel_err(fwd_cols[j][i], row[j]));
      }
      rec.max_rel_err = err;
      rec.status =
          err <= cfg.cross_tol ? SampleStatus::Pass : SampleStatus::Fail;
      if (rec.status == SampleStatus::Fail) rec.note = "jacobian mismatch";
      return true;
    });
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

std::vector<Point> sample_points(const FlatShape& shape, int n,
                                 uint64_t seed,
                                 const std::function<bool(const Point&)>&
                                     accept,
                                 const CheckConfig& cfg) {
  Rng rng(seed);
  std::vector<Point> out;
  for (int i = 0; i < n; ++i) {
    for (int tries = 0; tries < cfg.retry_cap; ++tries) {
      Point x;
      x.coords.resize(shape.arity);
      for (auto& c : x.coords) c = rng.in(cfg.box_lo, cfg.box_hi);
      if (!accept || accept(x)) {
        out.push_back(std::move(x));
        break;
      }
    }
  }
  return out;
}

std::string report_json(const CheckReport& r) {
  using json = nlohmann::ordered_json;
  json j;
  j["program"] = r.program;
  j["mode"] = r.mode;
  j["config"] = {
      {"n", r.cfg.n},
      {"h", r.cfg.h},
      {"tol", r.cfg.tol},
      {"cross_tol", r.cfg.cross_tol},
      {"fuel", r.cfg.fuel},
      {"seed", r.cfg.seed},
      {"depth", r.cfg.depth},
      {"box", {r.cfg.box_lo, r.cfg.box_hi}},
      {"sign_mode",
       r.cfg.sign_mode == SignMode::Naive ? "naive" : "efficient"},
  };
  j["samples"] = json::array();
  for (auto& s : r.samples) {
    json js;
    js["x"] = s.x.coords;
    js["status"] = s.status == SampleStatus::Pass
                       ? "pass"
                       : s.status == SampleStatus::Fail ? "fail"
                                                        : "rejected";
    js["max_rel_err"] = s.max_rel_err;
    if (!s.note.empty()) js["note"] = s.note;
    j["samples"].push_back(std::move(js));
  }
  j["pass_count"] = r.pass_count;
  j["fail_count"] = r.fail_count;
  j["rejected_count"] = r.rejected_count;
  if (!r.error.empty()) j["error"] = r.error;
  return j.dump(2) + "\n";
}

}  // namespace dn
